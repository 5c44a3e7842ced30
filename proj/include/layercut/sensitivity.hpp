#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "layercut/activation_store.hpp"
#include "layercut/similarity_metrics.hpp"

namespace layercut {

struct SensitivitySpec {
  std::vector<std::size_t> sizes = {10, 25, 50, 75, 100, 250, 500, 1000};
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  MetricConfig metric;
  /// Worker count for running repeats (0 = hardware concurrency).
  unsigned threads = 0;
};

struct SensitivityRecord {
  std::size_t n = 0;
  double cutoff_mean = 0.0;
  /// Sample standard deviation (divisor R-1).
  double cutoff_std = 0.0;
  /// Mean over strict-upper-triangle positions of the across-repeat sample
  /// variance of Z at that position.
  double matrix_variance = 0.0;
  /// Mean wall time of one build + select.
  double wall_seconds_mean = 0.0;
  /// Selected cutoff of each repeat, in repeat order.
  std::vector<std::size_t> cutoffs;
};

struct SensitivityReport {
  std::size_t layers = 0;
  std::size_t source_samples = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  MetricConfig metric;
  std::vector<SensitivityRecord> records;
};

/// Rows drawn without replacement for one (size, repeat) draw, ascending.
/// The generator stream is keyed by (n, repeat), so a draw does not change
/// when other sizes are added to or removed from a spec.
std::vector<std::size_t> subsample_rows(std::size_t source_samples, std::size_t n,
                                        std::uint64_t seed, std::size_t repeat);

/// Repeated row-paired subsampling: for each size, `repeats` subsets are
/// drawn, Z is built and a cutoff selected for each. Throws SizeExceedsN,
/// InvalidSpec (repeats < 2, n < 2, no sizes), TooFewLayers, or whatever
/// the matrix build raises.
SensitivityReport run_sensitivity(const ActivationSet& set, const SensitivitySpec& spec);

}  // namespace layercut
