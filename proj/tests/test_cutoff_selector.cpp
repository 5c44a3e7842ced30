#include <doctest.h>

#include "layercut/cutoff_selector.hpp"
#include "layercut/oracle.hpp"
#include "test_support.hpp"

using namespace layercut;
using layercut::testing::error_code_of;

namespace {

// Indices 0..b-1 alternate (checkerboard), b..L-1 all ones, cross-block 0.5.
Eigen::MatrixXd two_regime(Eigen::Index L, Eigen::Index b) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < L; ++j) {
      if (i == j) continue;
      if (i < b && j < b) {
        z(i, j) = (i + j) % 2 == 0 ? 0.9 : 0.2;
      } else if (i < b || j < b) {
        z(i, j) = 0.5;
      }
    }
  }
  return z;
}

}  // namespace

TEST_CASE("block variability spot values") {
  for (Eigen::Index k = 2; k <= 10; ++k) {
    CHECK(block_variability(Eigen::MatrixXd::Constant(k, k, 0.37)) == 0.0);
  }
  Eigen::MatrixXd two(2, 2);
  two << 1, 1, 0, 0;
  CHECK(block_variability(two) == 1.0);
  // Two consecutive row pairs, each differing by 1 in two columns: 4 / (2*3).
  CHECK(block_variability(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(oracle::naive_block_variability({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("block variability errors") {
  CHECK(error_code_of([] { block_variability(Eigen::MatrixXd::Ones(1, 1)); }) ==
        ErrorCode::BlockTooSmall);
  CHECK(error_code_of([] { block_variability(Eigen::MatrixXd::Ones(2, 3)); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("block variability is zero exactly when all rows agree") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    CounterRng rng(s, 1);
    const auto k = static_cast<Eigen::Index>(2 + rng.below(8));
    const Eigen::RowVectorXd row = layercut::testing::gaussian(s, 1, k);
    Eigen::MatrixXd same = row.replicate(k, 1);
    CHECK(block_variability(same) == 0.0);
    same(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k))),
         static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k)))) += 1e-9;
    CHECK(block_variability(same) > 0.0);
  }
}

TEST_CASE("partition blocks") {
  Eigen::MatrixXd z(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) z(i, j) = 10.0 * static_cast<double>(i) + static_cast<double>(j);

  const auto p = partition_blocks(z, 2);
  CHECK(p.top_left.rows() == 2);
  CHECK(p.bottom_right.rows() == 4);
  CHECK(p.top_left(1, 1) == 11.0);
  CHECK(p.bottom_right(0, 0) == 22.0);
  CHECK(p.bottom_right(3, 3) == 55.0);

  const auto q = partition_blocks(Eigen::MatrixXd::Ones(5, 5), 3);
  CHECK(q.top_left.rows() == 3);
  CHECK(q.bottom_right.rows() == 2);

  CHECK(error_code_of([&] { partition_blocks(z, 5); }) == ErrorCode::CutoffOutOfRange);
  CHECK(error_code_of([&] { partition_blocks(z, 1); }) == ErrorCode::CutoffOutOfRange);
}

TEST_CASE("all-ones matrix is degenerate and resolves to c = 2") {
  const auto report = select_cutoff(Eigen::MatrixXd::Ones(12, 12));
  CHECK(report.c_star == 2);
  CHECK(report.degenerate);
  CHECK(report.tie_count == 9);
  REQUIRE(report.curve.size() == 9);
  for (const auto& s : report.curve) CHECK(s.score == 0.0);
}

TEST_CASE("two-regime matrix selects the constructed boundary") {
  const auto z = two_regime(10, 4);
  const auto report = select_cutoff(z);
  CHECK(report.c_star == 4);
  CHECK_FALSE(report.degenerate);
  CHECK(report.tie_count == 1);
  // Scores frozen from an independent numpy evaluation of the formula.
  const double expected[] = {0.703571, 0.683333, 0.75, 0.55, 0.383333, 0.285714, 0.223214};
  REQUIRE(report.curve.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(report.curve[i].cutoff == i + 2);
    CHECK(report.curve[i].score == doctest::Approx(expected[i]).epsilon(1e-5));
    CHECK(report.curve[i].score == report.curve[i].delta_tl - report.curve[i].delta_br);
  }
  CHECK(report == oracle::select_cutoff_bruteforce(z));
}

TEST_CASE("selector errors") {
  CHECK(error_code_of([] { select_cutoff(Eigen::MatrixXd::Ones(4, 4)); }) == ErrorCode::TooFewLayers);
  CHECK(error_code_of([] { select_cutoff(Eigen::MatrixXd::Ones(5, 6)); }) == ErrorCode::ShapeMismatch);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Ones(6, 6);
  nan(2, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code_of([&] { select_cutoff(nan); }) == ErrorCode::NonFinite);
}

TEST_CASE("shift and positive scaling leave the argmax alone") {
  for (std::size_t c = 0; c < 200; ++c) {
    const std::size_t L = 5 + c % 30;
    const auto z = oracle::random_similarity_matrix(L, 21, c);
    const auto base = select_cutoff(z);
    CHECK(base.c_star >= 2);
    CHECK(base.c_star <= L - 2);
    for (const auto& s : base.curve) CHECK(base.curve[base.c_star - 2].score >= s.score - kScoreTolerance);

    const Eigen::MatrixXd shifted = z.array() + 0.25;
    const auto sh = select_cutoff(shifted);
    for (std::size_t i = 0; i < base.curve.size(); ++i)
      CHECK(std::abs(sh.curve[i].score - base.curve[i].score) <= 1e-12);

    const double lambda = 3.5;
    const auto sc = select_cutoff(Eigen::MatrixXd(lambda * z));
    for (std::size_t i = 0; i < base.curve.size(); ++i)
      CHECK(std::abs(sc.curve[i].score - lambda * base.curve[i].score) <= 1e-12);

    // Argmax is only well defined away from near-ties.
    std::vector<double> sorted;
    for (const auto& s : base.curve) sorted.push_back(s.score);
    std::sort(sorted.rbegin(), sorted.rend());
    if (base.degenerate || sorted[0] - sorted[1] > 1e-9) {
      CHECK(sh.c_star == base.c_star);
      CHECK(sc.c_star == base.c_star);
    }
  }
}

TEST_CASE("selector agrees with brute force on random matrices") {
  const auto result = oracle::run_cutoff_suite(300, 5);
  CHECK(result.passed());
  CHECK(result.max_abs_error == 0.0);
}

TEST_CASE("oracle harness notices a corrupted block variability") {
  auto corrupted = [](const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return block_variability(m) * (m.rows() == 3 ? 1.5 : 1.0);
  };
  const auto result = oracle::run_cutoff_suite(200, 5, +corrupted);
  CHECK_FALSE(result.passed());
  REQUIRE_FALSE(result.failed.empty());
  CHECK(result.failed.front().instance_json.find("\"z\"") != std::string::npos);
}
