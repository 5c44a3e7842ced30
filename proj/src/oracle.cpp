#include "layercut/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "layercut/error.hpp"
#include "layercut/rng.hpp"
#include "layercut/similarity_metrics.hpp"

namespace layercut::oracle {

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) mean += x.row(r);
  mean /= static_cast<double>(x.rows());
  return x.rowwise() - mean;
}

double cosine(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j) {
  double dot = 0.0, ni = 0.0, nj = 0.0;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    dot += x(i, f) * x(j, f);
    ni += x(i, f) * x(i, f);
    nj += x(j, f) * x(j, f);
  }
  return dot / (std::sqrt(ni) * std::sqrt(nj));
}

std::vector<std::vector<bool>> neighbor_table(const Eigen::MatrixXd& x, std::size_t k) {
  const auto n = x.rows();
  std::vector<std::vector<bool>> member(n, std::vector<bool>(n, false));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double cj = cosine(x, i, j);
      std::size_t outranked_by = 0;
      for (Eigen::Index m = 0; m < n; ++m) {
        if (m == i || m == j) continue;
        const double cm = cosine(x, i, m);
        if (cm > cj || (cm == cj && m < j)) ++outranked_by;
      }
      member[i][j] = outranked_by < k;
    }
  }
  return member;
}

// Eigenvalues of the covariance, descending, as singular values.
Eigen::VectorXd covariance_singular_values(const Eigen::MatrixXd& xc, Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xc.transpose() * xc);
  const Eigen::Index d = xc.cols();
  Eigen::VectorXd sigma(d);
  vectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    sigma(i) = std::sqrt(std::max(eig.eigenvalues()(d - 1 - i), 0.0));
    vectors.col(i) = eig.eigenvectors().col(d - 1 - i);
  }
  return sigma;
}

Eigen::MatrixXd truncated_projection(const Eigen::MatrixXd& x, double t) {
  const Eigen::MatrixXd xc = centered(x);
  Eigen::MatrixXd vectors;
  const Eigen::VectorXd sigma = covariance_singular_values(xc, vectors);
  // Covariance eigenvalues carry ~eps * sigma_max^2 noise, so null
  // directions show up as sigma ~ 1e-8 * sigma_max here; use a relative
  // cut on sigma^2 that sits between that and any genuine direction.
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) * sigma(rank) > sigma(0) * sigma(0) * 1e-10) ++rank;
  double total = 0.0;
  for (Eigen::Index i = 0; i < rank; ++i) total += sigma(i) * sigma(i);
  Eigen::Index keep = rank;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < rank; ++i) {
    cumulative += sigma(i) * sigma(i);
    if (cumulative / total >= t) {
      keep = i + 1;
      break;
    }
  }
  if (keep == 0) throw Error(ErrorCode::DegenerateRepresentation, "rank 0 after centering");
  return xc * vectors.leftCols(keep);
}

std::string matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows.dump();
}

Eigen::MatrixXd gaussian_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

// Second representation: half the time independent, half the time a noisy
// linear map of the first so values span the whole unit interval.
Eigen::MatrixXd partner(CounterRng& rng, const Eigen::MatrixXd& a, Eigen::Index cols) {
  if (rng.uniform() < 0.5) return gaussian_matrix(rng, a.rows(), cols);
  const Eigen::MatrixXd mix = gaussian_matrix(rng, a.cols(), cols);
  return a * mix + rng.uniform() * gaussian_matrix(rng, a.rows(), cols);
}

Eigen::Index uniform_int(CounterRng& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

constexpr std::uint64_t kCkaStream = 1, kJaccardStream = 2, kSvccaStream = 3, kCutoffStream = 4;

template <typename Body>
SuiteResult run_suite(const std::string& name, std::size_t cases, Body&& body) {
  SuiteResult result;
  result.suite = name;
  result.cases = cases;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t c = 0; c < cases; ++c) body(c, result);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.failures = result.failed.size();
  return result;
}

void record(SuiteResult& result, std::size_t index, std::string message, nlohmann::json instance) {
  instance["suite"] = result.suite;
  instance["case"] = index;
  result.failed.push_back({index, std::move(message), instance.dump(2)});
}

}  // namespace

double cka_feature_space(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd xc = centered(x);
  const Eigen::MatrixXd yc = centered(y);
  const double cross = (yc.transpose() * xc).squaredNorm();
  return cross / ((xc.transpose() * xc).norm() * (yc.transpose() * yc).norm());
}

JaccardCounts jaccard_bruteforce(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                 std::size_t k) {
  const auto a = neighbor_table(x, k);
  const auto b = neighbor_table(y, k);
  JaccardCounts out;
  // Exact rational running sum num/den.
  std::uint64_t num = 0, den = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t both = 0, either = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      both += a[i][j] && b[i][j];
      either += a[i][j] || b[i][j];
    }
    out.intersection.push_back(both);
    out.union_size.push_back(either);
    const std::uint64_t d = either;
    const std::uint64_t g = std::gcd(den, d);
    num = num * (d / g) + both * (den / g);
    den = den / g * d;
    const std::uint64_t r = std::gcd(num, den);
    num /= r, den /= r;
  }
  den *= a.size();
  if (den > (std::uint64_t{1} << 53)) {
    throw Error(ErrorCode::InvalidConfig, "rational Jaccard oracle overflow");
  }
  out.value = static_cast<double>(num) / static_cast<double>(den);
  return out;
}

double svcca_eigen(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double t, double eps) {
  const Eigen::MatrixXd px = truncated_projection(x, t);
  const Eigen::MatrixXd py = truncated_projection(y, t);
  const Eigen::MatrixXd sxx =
      px.transpose() * px + eps * Eigen::MatrixXd::Identity(px.cols(), px.cols());
  const Eigen::MatrixXd syy =
      py.transpose() * py + eps * Eigen::MatrixXd::Identity(py.cols(), py.cols());
  const Eigen::MatrixXd sxy = px.transpose() * py;
  Eigen::MatrixXd lhs = sxy * syy.ldlt().solve(sxy.transpose());
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(lhs, sxx);
  const Eigen::VectorXd rho_sq = ges.eigenvalues();  // ascending
  const Eigen::Index count = std::min(px.cols(), py.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const double v = rho_sq(rho_sq.size() - 1 - i);
    total += std::clamp(std::sqrt(std::max(v, 0.0)), 0.0, 1.0);
  }
  return total / static_cast<double>(count);
}

double naive_block_variability(const std::vector<std::vector<double>>& block) {
  const std::size_t k = block.size();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i)
    for (std::size_t j = 0; j < k; ++j) total += std::abs(block[i][j] - block[i + 1][j]);
  return total / (static_cast<double>(k - 1) * static_cast<double>(k));
}

CutoffReport select_cutoff_bruteforce(const Eigen::MatrixXd& z) {
  const std::size_t L = static_cast<std::size_t>(z.rows());
  auto materialize = [&](std::size_t first, std::size_t last) {
    std::vector<std::vector<double>> block;
    for (std::size_t i = first; i <= last; ++i) {
      std::vector<double> row;
      for (std::size_t j = first; j <= last; ++j)
        row.push_back(z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      block.push_back(std::move(row));
    }
    return block;
  };
  CutoffReport report;
  for (std::size_t c = 2; c <= L - 2; ++c) {
    BlockScores s;
    s.cutoff = c;
    s.delta_tl = naive_block_variability(materialize(0, c - 1));
    s.delta_br = naive_block_variability(materialize(c, L - 1));
    s.score = s.delta_tl - s.delta_br;
    report.curve.push_back(s);
  }
  double best = report.curve.front().score, worst = best;
  for (const auto& s : report.curve) {
    best = std::max(best, s.score);
    worst = std::min(worst, s.score);
  }
  report.degenerate = best - worst <= kScoreTolerance;
  for (const auto& s : report.curve) {
    if (best - s.score <= kScoreTolerance) {
      if (report.tie_count++ == 0) report.c_star = s.cutoff;
    }
  }
  return report;
}

Eigen::MatrixXd random_similarity_matrix(std::size_t layers, std::uint64_t seed,
                                         std::size_t case_index) {
  const auto L = static_cast<Eigen::Index>(layers);
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(L, L);
  if (case_index % 10 == 9) return z;
  CounterRng rng(seed, stream_id(kCutoffStream * 1000 + layers, case_index));
  const bool coarse = case_index % 10 == 8;
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = i + 1; j < L; ++j) {
      double v = rng.uniform();
      if (coarse) v = std::round(v * 2.0) / 2.0;
      z(i, j) = v;
      z(j, i) = v;
    }
  }
  return z;
}

SuiteResult run_cka_suite(std::size_t cases, std::uint64_t seed) {
  return run_suite("cka", cases, [&](std::size_t c, SuiteResult& result) {
    CounterRng rng(seed, stream_id(kCkaStream, c));
    const Eigen::Index n = uniform_int(rng, 3, 20);
    const Eigen::MatrixXd a = gaussian_matrix(rng, n, uniform_int(rng, 1, 8));
    const Eigen::MatrixXd b = partner(rng, a, uniform_int(rng, 1, 8));
    const double got = cka(a, b);
    const double want = cka_feature_space(a, b);
    const double err = std::abs(got - want);
    result.max_abs_error = std::max(result.max_abs_error, err);
    if (!(err <= kCkaTolerance)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "kernel CKA " << got << " vs feature-space " << want;
      record(result, c, msg.str(),
             {{"a", nlohmann::json::parse(matrix_json(a))},
              {"b", nlohmann::json::parse(matrix_json(b))},
              {"implementation", got},
              {"oracle", want}});
    }
  });
}

SuiteResult run_jaccard_suite(std::size_t cases, std::uint64_t seed) {
  return run_suite("jaccard", cases, [&](std::size_t c, SuiteResult& result) {
    CounterRng rng(seed, stream_id(kJaccardStream, c));
    const Eigen::Index n = uniform_int(rng, 4, 15);
    const auto k = static_cast<std::size_t>(uniform_int(rng, 1, n - 1));
    const Eigen::MatrixXd a = gaussian_matrix(rng, n, uniform_int(rng, 1, 8));
    const Eigen::MatrixXd b = partner(rng, a, uniform_int(rng, 1, 8));
    const auto ha = prepared::neighborhoods(a, k);
    const auto hb = prepared::neighborhoods(b, k);
    const double got = prepared::jaccard(ha, hb);
    const auto want = jaccard_bruteforce(a, b, k);
    bool counts_match = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::uint32_t> common;
      std::set_intersection(ha.members[i].begin(), ha.members[i].end(), hb.members[i].begin(),
                            hb.members[i].end(), std::back_inserter(common));
      counts_match = counts_match && common.size() == want.intersection[i] &&
                     2 * k - common.size() == want.union_size[i];
    }
    result.max_abs_error = std::max(result.max_abs_error, std::abs(got - want.value));
    if (!counts_match || got != want.value) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "k=" << k << ": implementation " << got << " vs brute force " << want.value
          << (counts_match ? "" : " (neighborhood counts differ)");
      record(result, c, msg.str(),
             {{"a", nlohmann::json::parse(matrix_json(a))},
              {"b", nlohmann::json::parse(matrix_json(b))},
              {"k", k},
              {"implementation", got},
              {"oracle", want.value}});
    }
  });
}

SuiteResult run_svcca_suite(std::size_t cases, std::uint64_t seed) {
  static constexpr double kThresholds[] = {0.9, 0.95, 0.99, 1.0};
  return run_suite("svcca", cases, [&](std::size_t c, SuiteResult& result) {
    CounterRng rng(seed, stream_id(kSvccaStream, c));
    const Eigen::Index n = uniform_int(rng, 4, 20);
    const Eigen::MatrixXd a = gaussian_matrix(rng, n, uniform_int(rng, 1, 8));
    const Eigen::MatrixXd b = partner(rng, a, uniform_int(rng, 1, 8));
    const double t = kThresholds[rng.below(4)];
    const double got = svcca(a, b, t);
    const double want = svcca_eigen(a, b, t);
    const double err = std::abs(got - want);
    result.max_abs_error = std::max(result.max_abs_error, err);
    if (!(err <= kSvccaTolerance)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "t=" << t << ": SVD-whitened " << got << " vs eigen CCA " << want;
      record(result, c, msg.str(),
             {{"a", nlohmann::json::parse(matrix_json(a))},
              {"b", nlohmann::json::parse(matrix_json(b))},
              {"t", t},
              {"implementation", got},
              {"oracle", want}});
    }
  });
}

SuiteResult run_cutoff_suite(std::size_t cases, std::uint64_t seed,
                             BlockVariabilityFn variability) {
  return run_suite("cutoff", cases, [&](std::size_t c, SuiteResult& result) {
    CounterRng rng(seed, stream_id(kCutoffStream, c));
    const auto L = static_cast<std::size_t>(uniform_int(rng, 5, 40));
    const Eigen::MatrixXd z = random_similarity_matrix(L, seed, c);
    const auto got = select_cutoff_with(z, variability);
    const auto want = select_cutoff_bruteforce(z);
    double err = 0.0;
    for (std::size_t i = 0; i < want.curve.size() && i < got.curve.size(); ++i) {
      err = std::max({err, std::abs(got.curve[i].delta_tl - want.curve[i].delta_tl),
                      std::abs(got.curve[i].delta_br - want.curve[i].delta_br),
                      std::abs(got.curve[i].score - want.curve[i].score)});
    }
    result.max_abs_error = std::max(result.max_abs_error, err);
    if (!(got == want)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "L=" << L << ": c* " << got.c_star << " vs brute force " << want.c_star
          << ", max curve difference " << err;
      record(result, c, msg.str(),
             {{"z", nlohmann::json::parse(matrix_json(z))},
              {"implementation_c_star", got.c_star},
              {"oracle_c_star", want.c_star}});
    }
  });
}

}  // namespace layercut::oracle
