#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "layercut/activation_store.hpp"

namespace layercut {

enum class Metric { Cka, Jaccard, Svcca };

std::string_view to_string(Metric metric) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;

struct MetricConfig {
  Metric metric = Metric::Cka;
  /// Neighborhood size for k-NN Jaccard.
  std::size_t k = 20;
  /// SVCCA variance-retention threshold, in (0, 1].
  double t = 0.99;
  /// Floor applied to singular values when whitening.
  double eps = 1e-12;
  /// Clamp canonical correlations to [0, 1].
  bool correlation_clamp = true;

  /// Checks the parameters on their own (InvalidConfig) and, when
  /// `samples` is given, against the sample count (KTooLarge for Jaccard).
  void validate(std::optional<std::size_t> samples = std::nullopt) const;

  friend bool operator==(const MetricConfig&, const MetricConfig&) = default;
};

// All metrics work in binary64 on N x D matrices (rows are samples) and
// return a value clamped to [0, 1].

/// Linear CKA through HSIC on column-centered representations.
double cka(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double cka(const LayerActivations& a, const LayerActivations& b);

/// Mean Jaccard index of the k cosine-nearest neighborhoods (self
/// excluded, ties broken towards the lower sample index).
double jaccard_knn(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t k);
double jaccard_knn(const LayerActivations& a, const LayerActivations& b, std::size_t k);

/// Mean canonical correlation between variance-truncated SVD subspaces.
double svcca(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t = 0.99,
             double eps = 1e-12, bool correlation_clamp = true);
double svcca(const LayerActivations& a, const LayerActivations& b, double t = 0.99,
             double eps = 1e-12, bool correlation_clamp = true);

/// Dispatch on cfg.metric.
double similarity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MetricConfig& cfg);

/// Per-layer precomputation. Evaluating a pair through two prepared layers
/// gives bit-for-bit the same value as the direct call; the matrix builder
/// uses this to avoid redoing per-layer work for every pair.
namespace prepared {

struct CkaKernel {
  /// H S H for the linear kernel S of the column-centered data (exactly symmetric).
  Eigen::MatrixXd centered_gram;
  /// tr(H S H S) / (N-1)^2.
  double self_hsic = 0.0;
};

struct Neighborhoods {
  std::size_t k = 0;
  /// Row i: indices of the k nearest other samples, ascending.
  std::vector<std::vector<std::uint32_t>> members;
};

struct SvccaBasis {
  /// N x r whitened truncated representation (orthonormal columns up to rounding).
  Eigen::MatrixXd whitened;
  /// Singular values of the centered data (descending).
  Eigen::VectorXd singular_values;
  std::size_t retained = 0;
};

CkaKernel cka_kernel(const Eigen::MatrixXd& x);
double cka(const CkaKernel& a, const CkaKernel& b);

Neighborhoods neighborhoods(const Eigen::MatrixXd& x, std::size_t k);
double jaccard(const Neighborhoods& a, const Neighborhoods& b);

/// Number of leading singular values kept: numerical rank first (values
/// <= sigma_max * max(N, D) * machine epsilon are dropped), then the
/// smallest prefix whose share of the retained squared mass reaches t.
std::size_t svcca_truncation(const Eigen::VectorXd& singular_values, std::size_t rows,
                             std::size_t cols, double t);
SvccaBasis svcca_basis(const Eigen::MatrixXd& x, double t, double eps);
double svcca(const SvccaBasis& a, const SvccaBasis& b, bool correlation_clamp);

}  // namespace prepared

/// Mean-centers each column.
Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x);

}  // namespace layercut
