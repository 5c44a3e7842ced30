#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace layercut {

/// One layer's representations: N samples (rows) by D features (columns),
/// stored row-major as binary32.
///
/// Construction validates N >= 2, D >= 1 and finiteness; a constructed
/// object is immutable.
class LayerActivations {
 public:
  LayerActivations(std::size_t layer_index, std::size_t samples, std::size_t features,
                   std::vector<float> values);

  std::size_t layer_index() const noexcept { return layer_index_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t features() const noexcept { return features_; }

  float at(std::size_t sample, std::size_t feature) const noexcept {
    return values_[sample * features_ + feature];
  }
  std::span<const float> row(std::size_t sample) const noexcept {
    return {values_.data() + sample * features_, features_};
  }
  std::span<const float> values() const noexcept { return values_; }

  /// Widened copy used by every metric computation.
  Eigen::MatrixXd to_matrix() const;

  /// Same layer restricted to the given rows, in the given order.
  LayerActivations select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const LayerActivations&, const LayerActivations&) = default;

 private:
  std::size_t layer_index_;
  std::size_t samples_;
  std::size_t features_;
  std::vector<float> values_;
};

/// Ordered per-layer activations sharing one sample set.
class ActivationSet {
 public:
  /// Requires at least one layer, a common sample count and layer_index
  /// values 0..L-1 in order (InvalidSet / InconsistentN otherwise).
  explicit ActivationSet(std::vector<LayerActivations> layers);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t sample_count() const noexcept { return layers_.front().samples(); }
  const LayerActivations& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<LayerActivations>& layers() const noexcept { return layers_; }
  std::vector<std::size_t> feature_dims() const;

  /// Row-paired subsample: the same rows are taken from every layer.
  ActivationSet select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const ActivationSet&, const ActivationSet&) = default;

 private:
  std::vector<LayerActivations> layers_;
};

// SIMACT v1 container:
//   bytes 0-7   magic "SIMACT1\0"
//   bytes 8-11  u32 LE layer count L
//   bytes 12-15 u32 LE sample count N
//   L x u32 LE  feature dims D_0..D_{L-1}
//   L payload blocks of N*D_l binary32 LE values, row-major
// No padding, no footer.
inline constexpr std::array<std::uint8_t, 8> kSimactMagic = {0x53, 0x49, 0x4D, 0x41,
                                                             0x43, 0x54, 0x31, 0x00};

/// Exact byte size of the SIMACT encoding for the given shape.
std::uint64_t simact_file_size(std::size_t samples, std::span<const std::size_t> dims);

std::vector<std::uint8_t> encode_activation_container(const ActivationSet& set);
ActivationSet decode_activation_container(std::span<const std::uint8_t> bytes);

ActivationSet read_activation_container(const std::filesystem::path& path);
void write_activation_container(const ActivationSet& set, const std::filesystem::path& path);

/// Overload for callers holding raw layers; rejects an empty list with
/// InvalidSet before touching the filesystem.
void write_activation_container(std::span<const LayerActivations> layers,
                                const std::filesystem::path& path);

/// True when the file starts with the SIMACT magic.
bool is_activation_container(const std::filesystem::path& path);

/// One CSV file per layer, in the given order. Values are parsed to the
/// nearest binary32.
ActivationSet read_layer_csv(std::span<const std::filesystem::path> paths);

/// *.csv files of a directory in lexicographic path order.
std::vector<std::filesystem::path> list_layer_csv(const std::filesystem::path& directory);

/// Writes layer_000.csv, layer_001.csv, ... with round-trip (9 digit) floats.
std::vector<std::filesystem::path> write_layer_csv(const ActivationSet& set,
                                                   const std::filesystem::path& directory);

enum class Regime { Structured, Constant, Noise };

struct GeneratorSpec {
  std::size_t layers = 12;
  std::size_t samples = 200;
  /// Either one entry (shared by all layers) or one entry per layer.
  std::vector<std::size_t> dims = {32};
  Regime regime = Regime::Structured;
  /// First layer of the stable phase (structured regime only).
  std::size_t boundary = 6;
  /// Magnitude of per-layer perturbation in the stable phase.
  double epsilon = 0.01;
  /// Per-layer noise on top of the alternating bases in the early phase.
  double phase_noise = 0.1;
  std::uint64_t seed = 0;
};

/// Deterministic synthetic activations.
///
/// structured: layers 0..b-1 alternate between two independent Gaussian
///   bases, each layer adding its own Gaussian noise of scale phase_noise;
///   layer b is a fresh Gaussian draw and layers b..L-1 equal it plus
///   epsilon-scaled Gaussian noise (layer b itself unperturbed).
/// constant: every layer is the same Gaussian matrix.
/// noise: every layer is an independent Gaussian matrix.
///
/// Layer l uses generator stream l + 3, bases use streams 0..2, so the
/// output is a pure function of the spec.
ActivationSet synthesize_activations(const GeneratorSpec& spec);

}  // namespace layercut
