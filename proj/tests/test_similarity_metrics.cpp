#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "layercut/oracle.hpp"
#include "layercut/similarity_metrics.hpp"
#include "test_support.hpp"

using namespace layercut;
using layercut::testing::error_code_of;
using layercut::testing::gaussian;
using layercut::testing::random_orthogonal;

namespace {

Eigen::MatrixXd rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& perm) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.row(r) = m.row(perm[r]);
  return out;
}

}  // namespace

TEST_CASE("metric config validation") {
  MetricConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.t = 0.0;
  CHECK(error_code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg.t = 1.5;
  CHECK(error_code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg.t = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.metric = Metric::Jaccard;
  cfg.k = 0;
  CHECK(error_code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg.k = 10;
  CHECK(error_code_of([&] { cfg.validate(10); }) == ErrorCode::KTooLarge);
  CHECK_NOTHROW(cfg.validate(11));
  CHECK(parse_metric("svcca") == Metric::Svcca);
  CHECK_FALSE(parse_metric("rbf").has_value());
}

TEST_CASE("CKA: self similarity and invariances") {
  const auto r = gaussian(1, 30, 6);
  CHECK(cka(r, r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(cka(r, r * random_orthogonal(2, 6)) - 1.0) <= 1e-9);
  CHECK(std::abs(cka(r, 3.7 * r) - 1.0) <= 1e-9);

  const auto other = gaussian(3, 30, 4);
  const double base = cka(r, other);
  CHECK(std::abs(cka(r * random_orthogonal(4, 6), other) - base) <= 1e-9);
  CHECK(std::abs(cka(r, 0.01 * other) - base) <= 1e-9);
  CHECK(cka(other, r) == base);  // exact symmetry
}

TEST_CASE("CKA: hand cases against the feature-space formula") {
  const auto r = rows_of({{1, 0}, {0, 1}, {1, 1}});
  CHECK(cka(r, rows_of({{2, 0}, {0, 2}, {2, 2}})) == doctest::Approx(1.0).epsilon(1e-12));
  // Feature-space oracle evaluates to exactly 1 here (N=3: both centered
  // representations span the same isotropic plane).
  CHECK(std::abs(cka(r, rows_of({{1, 0}, {0, -1}, {0, 0}})) - 1.0) <= 1e-12);

  // Frozen with numpy: ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F).
  const auto x = rows_of({{1, 0}, {0, 1}, {1, 1}, {2, 0}});
  const auto y = rows_of({{3, 1}, {0, -1}, {2, 2}, {1, 5}});
  CHECK(std::abs(cka(x, y) - 0.8567737437156456) <= 1e-12);
  CHECK(std::abs(oracle::cka_feature_space(x, y) - 0.8567737437156456) <= 1e-12);
}

TEST_CASE("CKA: errors") {
  CHECK(error_code_of([] { cka(gaussian(1, 5, 2), gaussian(2, 6, 2)); }) == ErrorCode::ShapeMismatch);
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(6, 3, 0.1);
  CHECK(error_code_of([&] { cka(constant, gaussian(2, 6, 2)); }) ==
        ErrorCode::DegenerateRepresentation);
  Eigen::MatrixXd nan = gaussian(1, 4, 2);
  nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code_of([&] { cka(nan, gaussian(2, 4, 2)); }) == ErrorCode::NonFinite);
  CHECK(error_code_of([] { cka(gaussian(1, 1, 2), gaussian(2, 1, 2)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("CKA: matches the feature-space oracle on random small instances") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    CounterRng rng(s, 17);
    const auto n = static_cast<Eigen::Index>(3 + rng.below(18));
    const auto a = gaussian(s, n, static_cast<Eigen::Index>(1 + rng.below(8)), 1);
    const auto b = gaussian(s, n, static_cast<Eigen::Index>(1 + rng.below(8)), 2);
    const double v = cka(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v - oracle::cka_feature_space(a, b)) <= 1e-9);
  }
}

TEST_CASE("Jaccard: identical and forced-overlap cases") {
  const auto r = gaussian(7, 12, 5);
  CHECK(jaccard_knn(r, r, 3) == 1.0);
  CHECK(jaccard_knn(r, gaussian(8, 12, 2), 11) == 1.0);  // k = N-1
}

TEST_CASE("Jaccard: N=4, k=1 hand case") {
  // Unit vectors: sample 0 at -20 degrees in the xy-plane (nearest: 1 at 0
  // degrees), sample 2 at 5 degrees, sample 3 on the z axis (cosine 0 to
  // everyone, so the tie goes to sample 0). In the second representation
  // sample 0 moves to 25 degrees, making 2 its nearest neighbor; every other
  // neighborhood is unchanged. Brute force: (0/2 + 1 + 1 + 1) / 4.
  const double deg = 3.14159265358979323846 / 180.0;
  Eigen::MatrixXd a(4, 3);
  a << std::cos(-20 * deg), std::sin(-20 * deg), 0, 1, 0, 0, std::cos(5 * deg),
      std::sin(5 * deg), 0, 0, 0, 1;
  Eigen::MatrixXd b = a;
  b.row(0) << std::cos(25 * deg), std::sin(25 * deg), 0;
  CHECK(jaccard_knn(a, b, 1) == 0.75);
  const auto brute = oracle::jaccard_bruteforce(a, b, 1);
  CHECK(brute.value == 0.75);
  CHECK(brute.intersection == std::vector<std::size_t>{0, 1, 1, 1});

  const auto hoods = prepared::neighborhoods(a, 1);
  CHECK(hoods.members[3] == std::vector<std::uint32_t>{0});  // lower index wins the tie
}

TEST_CASE("Jaccard: tie-breaking prefers the lower index") {
  // One feature: every cosine is +1 or -1, so ties are everywhere.
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, -1, 3, -2;
  const auto hoods = prepared::neighborhoods(x, 2);
  CHECK(hoods.members[0] == std::vector<std::uint32_t>{1, 3});
  CHECK(hoods.members[2] == std::vector<std::uint32_t>{0, 4});  // 4, then lowest of the -1 ties
}

TEST_CASE("Jaccard: errors") {
  CHECK(error_code_of([] { jaccard_knn(gaussian(1, 5, 2), gaussian(2, 5, 2), 5); }) ==
        ErrorCode::KTooLarge);
  CHECK(error_code_of([] { jaccard_knn(gaussian(1, 5, 2), gaussian(2, 6, 2), 1); }) ==
        ErrorCode::ShapeMismatch);
  Eigen::MatrixXd zero_row = gaussian(1, 5, 2);
  zero_row.row(3).setZero();
  CHECK(error_code_of([&] { jaccard_knn(zero_row, gaussian(2, 5, 2), 2); }) == ErrorCode::ZeroNormRow);
}

TEST_CASE("Jaccard: symmetry and permutation equivariance are exact") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto a = gaussian(s, 15, 4, 1);
    const auto b = gaussian(s, 15, 6, 2);
    const double v = jaccard_knn(a, b, 4);
    CHECK(jaccard_knn(b, a, 4) == v);
    std::vector<Eigen::Index> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng rng(s, 5);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    CHECK(jaccard_knn(permute_rows(a, perm), permute_rows(b, perm), 4) == v);
  }
}

TEST_CASE("SVCCA: truncation rule") {
  Eigen::VectorXd s(3);
  s << 3, 2, 1;  // squared mass 9, 4, 1 of 14
  CHECK(prepared::svcca_truncation(s, 10, 3, 0.5) == 1);
  CHECK(prepared::svcca_truncation(s, 10, 3, 0.9) == 2);
  CHECK(prepared::svcca_truncation(s, 10, 3, 13.0 / 14.0) == 2);
  CHECK(prepared::svcca_truncation(s, 10, 3, 0.99) == 3);
  CHECK(prepared::svcca_truncation(s, 10, 3, 1.0) == 3);
  Eigen::VectorXd with_null(3);
  with_null << 3, 2, 1e-17;
  CHECK(prepared::svcca_truncation(with_null, 10, 3, 1.0) == 2);
  CHECK(prepared::svcca_truncation(Eigen::VectorXd::Zero(2), 10, 2, 0.99) == 0);
}

TEST_CASE("SVCCA: self similarity and invariances") {
  const auto r = gaussian(11, 40, 5);
  CHECK(std::abs(svcca(r, r, 0.99) - 1.0) <= 1e-8);
  const Eigen::RowVectorXd mu = gaussian(12, 1, 5);
  const Eigen::MatrixXd moved = (r * random_orthogonal(13, 5)).rowwise() + mu;
  CHECK(std::abs(svcca(r, moved, 0.99) - 1.0) <= 1e-8);

  const auto other = gaussian(14, 40, 3);
  const double base = svcca(r, other, 0.99);
  CHECK(std::abs(svcca(2.5 * moved, other, 0.99) - base) <= 1e-8);
  CHECK(std::abs(svcca(other, r, 0.99) - base) <= 1e-8);
}

TEST_CASE("SVCCA: 5x3 frozen values") {
  // Expected values from a numpy/scipy generalized-eigenproblem CCA on the
  // explicitly formed covariance blocks after the same truncation.
  const auto x = rows_of({{0.3, -1.2, 0.5}, {1.1, 0.4, -0.7}, {-0.6, 0.9, 1.3}, {0.2, -0.3, -1.1},
                          {-1.4, 0.8, 0.2}});
  const auto y = rows_of({{1.0, 0.2, -0.4}, {-0.5, 1.3, 0.6}, {0.7, -0.9, 0.1}, {-1.2, 0.4, 0.8},
                          {0.3, -0.6, -1.5}});
  CHECK(std::abs(svcca(x, y, 0.99) - 0.752143158733649) <= 1e-8);
  CHECK(std::abs(svcca(x, y, 0.8) - 0.7604370545839365) <= 1e-8);
  CHECK(std::abs(oracle::svcca_eigen(x, y, 0.99) - 0.752143158733649) <= 1e-8);
}

TEST_CASE("SVCCA: errors") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(6, 3, 2.0);
  CHECK(error_code_of([&] { svcca(constant, gaussian(2, 6, 2)); }) ==
        ErrorCode::DegenerateRepresentation);
  CHECK(error_code_of([] { svcca(gaussian(1, 5, 2), gaussian(2, 6, 2)); }) == ErrorCode::ShapeMismatch);
  CHECK(error_code_of([] { svcca(gaussian(1, 5, 2), gaussian(2, 5, 2), 0.0); }) ==
        ErrorCode::InvalidConfig);
}

TEST_CASE("all metrics stay in [0, 1] and accept stored layers") {
  const auto la = layercut::testing::layer_from(0, gaussian(21, 25, 4));
  const auto lb = layercut::testing::layer_from(1, gaussian(22, 25, 7));
  for (double v : {cka(la, lb), jaccard_knn(la, lb, 5), svcca(la, lb)}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  MetricConfig cfg;
  cfg.metric = Metric::Jaccard;
  cfg.k = 5;
  CHECK(similarity(la.to_matrix(), lb.to_matrix(), cfg) == jaccard_knn(la, lb, 5));
}
