#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "layercut/similarity_matrix.hpp"

namespace layercut {

/// Absolute tolerance for score ties and for the degenerate-curve flag.
inline constexpr double kScoreTolerance = 1e-12;

/// Mean absolute consecutive-row difference of a k x k block:
///   sum_{i<k-1} sum_j |M(i,j) - M(i+1,j)| / ((k-1) k)
/// Throws BlockTooSmall for k < 2 and ShapeMismatch for non-square input.
double block_variability(const Eigen::Ref<const Eigen::MatrixXd>& block);

struct BlockPartition {
  /// Rows/columns 0..c-1.
  Eigen::MatrixXd top_left;
  /// Rows/columns c..L-1.
  Eigen::MatrixXd bottom_right;
};

/// Splits Z at cutoff c into the retained (top-left) and pruned
/// (bottom-right) diagonal blocks. Requires 2 <= c <= L-2.
BlockPartition partition_blocks(const Eigen::MatrixXd& z, std::size_t c);

struct BlockScores {
  std::size_t cutoff = 0;
  double delta_tl = 0.0;
  double delta_br = 0.0;
  double score = 0.0;

  friend bool operator==(const BlockScores&, const BlockScores&) = default;
};

struct CutoffReport {
  std::size_t c_star = 0;
  /// One entry per candidate c = 2..L-2, ascending.
  std::vector<BlockScores> curve;
  /// max(score) - min(score) <= kScoreTolerance.
  bool degenerate = false;
  /// Candidates within kScoreTolerance of the maximum.
  std::size_t tie_count = 0;

  friend bool operator==(const CutoffReport&, const CutoffReport&) = default;
};

using BlockVariabilityFn = double (*)(const Eigen::Ref<const Eigen::MatrixXd>&);

/// Scores every candidate cutoff and returns the smallest c whose score is
/// within kScoreTolerance of the maximum. Throws TooFewLayers for L < 5.
CutoffReport select_cutoff(const Eigen::MatrixXd& z);
inline CutoffReport select_cutoff(const SimilarityMatrix& z) { return select_cutoff(z.values); }

/// Same procedure with a caller-supplied block variability; used by the
/// oracle harness to confirm it detects a faulty implementation.
CutoffReport select_cutoff_with(const Eigen::MatrixXd& z, BlockVariabilityFn variability);

}  // namespace layercut
