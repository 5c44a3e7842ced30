#pragma once

#include <Eigen/Core>

#include <cstddef>

#include "layercut/activation_store.hpp"
#include "layercut/similarity_metrics.hpp"

namespace layercut {

/// Symmetric L x L layer-similarity matrix with unit diagonal.
struct SimilarityMatrix {
  Eigen::MatrixXd values;
  MetricConfig metric;
  double build_seconds = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

struct MatrixStatistics {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double range = 0.0;
};

/// Z[i][j] = metric(layer i, layer j) for i < j, mirrored; the diagonal is
/// set to 1 without evaluating the metric.
///
/// Per-layer work (centered kernels, neighborhoods, SVD bases) is done once
/// and shared across pairs when it fits in memory. Each entry depends only
/// on its two layers, so the result is bit-identical for every `threads`
/// value (0 = hardware concurrency). Metric errors are rethrown with the
/// offending pair prefixed to the message.
SimilarityMatrix build_similarity_matrix(const ActivationSet& set, const MetricConfig& cfg,
                                         unsigned threads = 0);

/// Min/max/mean/range over the strict upper triangle. A 1 x 1 matrix has no
/// off-diagonal entries and reports all zeros.
MatrixStatistics matrix_statistics(const Eigen::MatrixXd& z);
inline MatrixStatistics matrix_statistics(const SimilarityMatrix& z) {
  return matrix_statistics(z.values);
}

}  // namespace layercut
