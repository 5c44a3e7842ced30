#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "layercut/cutoff_selector.hpp"
#include "layercut/sensitivity.hpp"
#include "layercut/similarity_matrix.hpp"

namespace layercut {

inline constexpr const char* kToolVersion = "1.0.0";

/// 17 significant digits, enough for any binary64 to round-trip.
std::string format_real(double value);

struct InputDescriptor {
  std::string path;
  std::size_t layers = 0;
  std::size_t samples = 0;
  std::vector<std::size_t> dims;

  friend bool operator==(const InputDescriptor&, const InputDescriptor&) = default;
};

struct AnalysisReport {
  InputDescriptor input;
  MetricConfig metric;
  Eigen::MatrixXd similarity;
  double build_seconds = 0.0;
  CutoffReport cutoff;
  MatrixStatistics statistics;
  std::string tool_version = kToolVersion;
  /// ISO-8601 UTC.
  std::string timestamp;
};

std::string utc_timestamp();

nlohmann::json to_json(const MetricConfig& cfg);
MetricConfig metric_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CutoffReport& report);
CutoffReport cutoff_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnalysisReport& report);
AnalysisReport analysis_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SensitivityReport& report);

/// Row-major CSV, one matrix row per line.
std::string matrix_to_csv(const Eigen::MatrixXd& z);
/// Parses a square or rectangular numeric CSV (ParseError on bad tokens or
/// ragged rows).
Eigen::MatrixXd matrix_from_csv(const std::string& text, const std::string& origin = "<memory>");
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Header "c,delta_tl,delta_br,score".
std::string curve_to_csv(const CutoffReport& report);
/// Header "n,cutoff_mean,cutoff_std,matrix_variance,wall_seconds_mean".
std::string sensitivity_to_csv(const SensitivityReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace layercut
