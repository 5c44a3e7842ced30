#include "layercut/activation_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>

#include "layercut/error.hpp"
#include "layercut/rng.hpp"

namespace layercut {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes[offset + b]} << (8 * b);
  return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw Error(ErrorCode::InvalidSet, std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

LayerActivations::LayerActivations(std::size_t layer_index, std::size_t samples,
                                   std::size_t features, std::vector<float> values)
    : layer_index_(layer_index),
      samples_(samples),
      features_(features),
      values_(std::move(values)) {
  if (samples_ < 2) {
    throw Error(ErrorCode::InvalidSet,
                "layer " + std::to_string(layer_index_) + " has N=" + std::to_string(samples_) +
                    " samples; at least 2 required");
  }
  if (features_ < 1) {
    throw Error(ErrorCode::InvalidSet, "layer " + std::to_string(layer_index_) + " has D=0");
  }
  if (values_.size() != samples_ * features_) {
    throw Error(ErrorCode::InvalidSet, "layer " + std::to_string(layer_index_) + " holds " +
                                           std::to_string(values_.size()) + " values, expected " +
                                           std::to_string(samples_ * features_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::NonFinite, "layer " + std::to_string(layer_index_) + " sample " +
                                            std::to_string(i / features_) + " feature " +
                                            std::to_string(i % features_));
    }
  }
}

Eigen::MatrixXd LayerActivations::to_matrix() const {
  Eigen::MatrixXd m(samples_, features_);
  for (std::size_t r = 0; r < samples_; ++r)
    for (std::size_t c = 0; c < features_; ++c) m(r, c) = static_cast<double>(at(r, c));
  return m;
}

LayerActivations LayerActivations::select_rows(std::span<const std::size_t> rows) const {
  std::vector<float> out;
  out.reserve(rows.size() * features_);
  for (std::size_t r : rows) {
    if (r >= samples_) throw Error(ErrorCode::SizeExceedsN, "row " + std::to_string(r));
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return LayerActivations(layer_index_, rows.size(), features_, std::move(out));
}

ActivationSet::ActivationSet(std::vector<LayerActivations> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorCode::InvalidSet, "activation set has no layers");
  const std::size_t n = layers_.front().samples();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].layer_index() != i) {
      throw Error(ErrorCode::InvalidSet, "layer at position " + std::to_string(i) +
                                             " carries index " +
                                             std::to_string(layers_[i].layer_index()));
    }
    if (layers_[i].samples() != n) {
      throw Error(ErrorCode::InconsistentN, "layer " + std::to_string(i) + " has N=" +
                                                std::to_string(layers_[i].samples()) +
                                                ", layer 0 has N=" + std::to_string(n));
    }
  }
}

std::vector<std::size_t> ActivationSet::feature_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(layers_.size());
  for (const auto& l : layers_) dims.push_back(l.features());
  return dims;
}

ActivationSet ActivationSet::select_rows(std::span<const std::size_t> rows) const {
  std::vector<LayerActivations> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l.select_rows(rows));
  return ActivationSet(std::move(out));
}

// ---------------------------------------------------------------- SIMACT

std::uint64_t simact_file_size(std::size_t samples, std::span<const std::size_t> dims) {
  std::uint64_t size = 16 + 4 * static_cast<std::uint64_t>(dims.size());
  for (std::size_t d : dims) size += 4 * static_cast<std::uint64_t>(samples) * d;
  return size;
}

std::vector<std::uint8_t> encode_activation_container(const ActivationSet& set) {
  const auto dims = set.feature_dims();
  std::vector<std::uint8_t> out;
  out.reserve(simact_file_size(set.sample_count(), dims));
  out.insert(out.end(), kSimactMagic.begin(), kSimactMagic.end());
  put_u32(out, checked_u32(set.layer_count(), "layer count"));
  put_u32(out, checked_u32(set.sample_count(), "sample count"));
  for (std::size_t d : dims) put_u32(out, checked_u32(d, "feature dimension"));
  for (const auto& layer : set.layers()) {
    for (float v : layer.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ActivationSet decode_activation_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSimactMagic.size() ||
      !std::equal(kSimactMagic.begin(), kSimactMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "missing SIMACT1 magic");
  }
  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedFile, "header shorter than 16 bytes");
  const std::uint32_t layers = get_u32(bytes, 8);
  const std::uint32_t samples = get_u32(bytes, 12);
  if (layers == 0) throw Error(ErrorCode::InvalidSet, "container declares zero layers");
  const std::uint64_t header = 16 + 4 * static_cast<std::uint64_t>(layers);
  if (bytes.size() < header) {
    throw Error(ErrorCode::TruncatedFile, "header declares " + std::to_string(layers) +
                                              " layers but file ends inside the dimension table");
  }
  std::vector<std::size_t> dims(layers);
  for (std::uint32_t l = 0; l < layers; ++l) dims[l] = get_u32(bytes, 16 + 4 * l);
  const std::uint64_t expected = simact_file_size(samples, dims);
  if (bytes.size() < expected) {
    throw Error(ErrorCode::TruncatedFile, "declared sizes need " + std::to_string(expected) +
                                              " bytes, file has " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::InvalidSet, std::to_string(bytes.size() - expected) +
                                           " trailing bytes after the last payload block");
  }

  std::vector<LayerActivations> out;
  out.reserve(layers);
  std::size_t offset = header;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::size_t count = static_cast<std::size_t>(samples) * dims[l];
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i, offset += 4) {
      values[i] = std::bit_cast<float>(get_u32(bytes, offset));
    }
    out.emplace_back(l, samples, dims[l], std::move(values));
  }
  return ActivationSet(std::move(out));
}

ActivationSet read_activation_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return decode_activation_container(bytes);
}

void write_activation_container(const ActivationSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_activation_container(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_activation_container(std::span<const LayerActivations> layers,
                                const std::filesystem::path& path) {
  if (layers.empty()) throw Error(ErrorCode::InvalidSet, "refusing to write an empty set");
  write_activation_container(ActivationSet({layers.begin(), layers.end()}), path);
}

bool is_activation_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 8> head{};
  if (!in.read(head.data(), head.size())) return false;
  return std::equal(kSimactMagic.begin(), kSimactMagic.end(), head.begin(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); });
}

// ---------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

float parse_float(std::string_view token, const std::filesystem::path& path, std::size_t line) {
  token = trim(token);
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    token = token.substr(1, token.size() - 2);
  }
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  float value = 0.0f;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec == std::errc::invalid_argument || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) +
                                           ": not a number: '" + std::string(token) + "'");
  }
  if (ec == std::errc::result_out_of_range || !std::isfinite(value)) {
    throw Error(ErrorCode::NonFinite, path.string() + ":" + std::to_string(line) +
                                          ": value out of binary32 range: '" +
                                          std::string(token) + "'");
  }
  return value;
}

LayerActivations read_one_csv(const std::filesystem::path& path, std::size_t index) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<float> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t row_cols = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_float(rest.substr(0, comma), path, line_no));
      ++row_cols;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                             ": ragged row with " + std::to_string(row_cols) +
                                             " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::ParseError, path.string() + ": no data rows");
  return LayerActivations(index, rows, cols, std::move(values));
}

}  // namespace

ActivationSet read_layer_csv(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw Error(ErrorCode::InvalidSet, "no CSV files given");
  std::vector<LayerActivations> layers;
  layers.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    layers.push_back(read_one_csv(paths[i], i));
    if (layers.back().samples() != layers.front().samples()) {
      throw Error(ErrorCode::InconsistentN,
                  paths[i].string() + " has " + std::to_string(layers.back().samples()) +
                      " rows, " + paths.front().string() + " has " +
                      std::to_string(layers.front().samples()));
    }
  }
  return ActivationSet(std::move(layers));
}

std::vector<std::filesystem::path> list_layer_csv(const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(directory, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list " + directory.string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::filesystem::path> write_layer_csv(const ActivationSet& set,
                                                   const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + directory.string());
  std::vector<std::filesystem::path> paths;
  char buf[64];
  for (const auto& layer : set.layers()) {
    std::ostringstream name;
    name << "layer_" << std::setw(3) << std::setfill('0') << layer.layer_index() << ".csv";
    auto path = directory / name.str();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    for (std::size_t r = 0; r < layer.samples(); ++r) {
      for (std::size_t c = 0; c < layer.features(); ++c) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), layer.at(r, c));
        if (c) out << ',';
        out.write(buf, res.ptr - buf);
      }
      out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    paths.push_back(std::move(path));
  }
  return paths;
}

// ---------------------------------------------------------------- synthesis

namespace {

std::vector<float> gaussian(CounterRng& rng, std::size_t count) {
  std::vector<float> v(count);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

std::vector<float> perturbed(const std::vector<float>& base, CounterRng& rng, double scale) {
  std::vector<float> v(base.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>(static_cast<double>(base[i]) + scale * rng.normal());
  }
  return v;
}

}  // namespace

ActivationSet synthesize_activations(const GeneratorSpec& spec) {
  const std::size_t L = spec.layers;
  if (L < 5) throw Error(ErrorCode::InvalidSpec, "need at least 5 layers, got " + std::to_string(L));
  if (spec.samples < 2) throw Error(ErrorCode::InvalidSpec, "need at least 2 samples");
  if (spec.dims.size() != 1 && spec.dims.size() != L) {
    throw Error(ErrorCode::InvalidSpec, "dims must have 1 or L entries");
  }
  if (std::any_of(spec.dims.begin(), spec.dims.end(), [](std::size_t d) { return d == 0; })) {
    throw Error(ErrorCode::InvalidSpec, "feature dimension 0");
  }
  if (!std::isfinite(spec.epsilon) || spec.epsilon < 0 || !std::isfinite(spec.phase_noise) ||
      spec.phase_noise < 0) {
    throw Error(ErrorCode::InvalidSpec, "epsilon and phase_noise must be finite and >= 0");
  }
  auto dim = [&](std::size_t l) { return spec.dims.size() == 1 ? spec.dims[0] : spec.dims[l]; };
  const bool uniform_dims =
      std::all_of(spec.dims.begin(), spec.dims.end(), [&](std::size_t d) { return d == dim(0); });
  if (spec.regime != Regime::Noise && !uniform_dims) {
    throw Error(ErrorCode::InvalidSpec, "structured and constant regimes need one shared D");
  }
  if (spec.regime == Regime::Structured && (spec.boundary < 2 || spec.boundary > L - 2)) {
    throw Error(ErrorCode::InvalidSpec, "boundary must lie in [2, L-2], got " +
                                            std::to_string(spec.boundary));
  }

  const std::size_t n = spec.samples;
  std::vector<LayerActivations> layers;
  layers.reserve(L);
  switch (spec.regime) {
    case Regime::Constant: {
      CounterRng rng(spec.seed, 0);
      const auto base = gaussian(rng, n * dim(0));
      for (std::size_t l = 0; l < L; ++l) layers.emplace_back(l, n, dim(0), base);
      break;
    }
    case Regime::Noise: {
      for (std::size_t l = 0; l < L; ++l) {
        CounterRng rng(spec.seed, l + 3);
        layers.emplace_back(l, n, dim(l), gaussian(rng, n * dim(l)));
      }
      break;
    }
    case Regime::Structured: {
      const std::size_t d = dim(0);
      CounterRng even_rng(spec.seed, 0), odd_rng(spec.seed, 1), anchor_rng(spec.seed, 2);
      const auto even_base = gaussian(even_rng, n * d);
      const auto odd_base = gaussian(odd_rng, n * d);
      const auto anchor = gaussian(anchor_rng, n * d);
      for (std::size_t l = 0; l < L; ++l) {
        CounterRng rng(spec.seed, l + 3);
        if (l < spec.boundary) {
          layers.emplace_back(l, n, d,
                              perturbed(l % 2 == 0 ? even_base : odd_base, rng, spec.phase_noise));
        } else if (l == spec.boundary || spec.epsilon == 0.0) {
          layers.emplace_back(l, n, d, anchor);
        } else {
          layers.emplace_back(l, n, d, perturbed(anchor, rng, spec.epsilon));
        }
      }
      break;
    }
  }
  return ActivationSet(std::move(layers));
}

}  // namespace layercut
