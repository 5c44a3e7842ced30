#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "layercut/cutoff_selector.hpp"

// Independent reference implementations used to cross-check the main code
// paths. They favour directness over speed and share no arithmetic with the
// routes they check beyond the documented conventions (tie order, truncation
// rule, score tolerance).
namespace layercut::oracle {

/// ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) on column-centered data.
double cka_feature_space(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct JaccardCounts {
  std::vector<std::size_t> intersection;
  std::vector<std::size_t> union_size;
  double value = 0.0;
};

/// Exhaustive k-NN Jaccard: sample j is a neighbor of i iff fewer than k
/// other samples outrank it (higher cosine, or equal cosine and lower index).
JaccardCounts jaccard_bruteforce(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                 std::size_t k);

/// SVCCA via eigen-decomposition of the covariance (for truncation) and a
/// generalized symmetric eigenproblem on ridge-regularized covariance
/// blocks (for the canonical correlations).
double svcca_eigen(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double t,
                   double eps = 1e-12);

/// Naive δ over an explicitly materialized block.
double naive_block_variability(const std::vector<std::vector<double>>& block);

/// Brute-force cutoff search: copies every block out element by element and
/// scores it with naive_block_variability.
CutoffReport select_cutoff_bruteforce(const Eigen::MatrixXd& z);

struct SuiteFailure {
  std::size_t case_index = 0;
  std::string message;
  /// JSON document with everything needed to reproduce the case.
  std::string instance_json;
};

struct SuiteResult {
  std::string suite;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_abs_error = 0.0;
  double seconds = 0.0;
  std::vector<SuiteFailure> failed;

  bool passed() const noexcept { return failures == 0; }
};

inline constexpr double kCkaTolerance = 1e-9;
inline constexpr double kSvccaTolerance = 1e-6;

/// N in [3,20], D in [1,8]; |kernel CKA - feature-space CKA| <= 1e-9.
SuiteResult run_cka_suite(std::size_t cases, std::uint64_t seed);
/// N in [4,15], k in [1,N-1], D in [1,8]; identical neighborhood counts
/// and identical value.
SuiteResult run_jaccard_suite(std::size_t cases, std::uint64_t seed);
/// N in [4,20], D in [1,8], t in {0.9, 0.95, 0.99, 1}; |diff| <= 1e-6.
SuiteResult run_svcca_suite(std::size_t cases, std::uint64_t seed);
/// Random symmetric unit-diagonal Z, L in [5,40]; identical c*, flags and
/// curve. `variability` replaces the δ under test (mutation checks).
SuiteResult run_cutoff_suite(std::size_t cases, std::uint64_t seed,
                             BlockVariabilityFn variability = &block_variability);

/// Random symmetric matrix with unit diagonal, entries uniform in [0, 1].
/// Every tenth case is all ones so the tie path is exercised.
Eigen::MatrixXd random_similarity_matrix(std::size_t layers, std::uint64_t seed,
                                         std::size_t case_index);

}  // namespace layercut::oracle
