#include "layercut/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "layercut/error.hpp"

namespace layercut {

using nlohmann::json;

std::string format_real(double value) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

json matrix_json(const Eigen::MatrixXd& z) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < z.cols(); ++c) row.push_back(z(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd z(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows.at(r).size()) != m) {
      throw Error(ErrorCode::ParseError, "ragged matrix in JSON");
    }
    for (Eigen::Index c = 0; c < m; ++c) z(r, c) = rows.at(r).at(c).get<double>();
  }
  return z;
}

}  // namespace

json to_json(const MetricConfig& cfg) {
  return {{"name", std::string(to_string(cfg.metric))},
          {"k", cfg.k},
          {"t", cfg.t},
          {"eps", cfg.eps},
          {"correlation_clamp", cfg.correlation_clamp}};
}

MetricConfig metric_config_from_json(const json& j) {
  MetricConfig cfg;
  const auto metric = parse_metric(j.at("name").get<std::string>());
  if (!metric) throw Error(ErrorCode::ParseError, "unknown metric name in report");
  cfg.metric = *metric;
  cfg.k = j.at("k").get<std::size_t>();
  cfg.t = j.at("t").get<double>();
  cfg.eps = j.at("eps").get<double>();
  cfg.correlation_clamp = j.at("correlation_clamp").get<bool>();
  return cfg;
}

json to_json(const CutoffReport& report) {
  json curve = json::array();
  for (const auto& s : report.curve) {
    curve.push_back(
        {{"c", s.cutoff}, {"delta_tl", s.delta_tl}, {"delta_br", s.delta_br}, {"score", s.score}});
  }
  return {{"c_star", report.c_star},
          {"degenerate", report.degenerate},
          {"tie_count", report.tie_count},
          {"curve", std::move(curve)}};
}

CutoffReport cutoff_report_from_json(const json& j) {
  CutoffReport r;
  r.c_star = j.at("c_star").get<std::size_t>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.tie_count = j.at("tie_count").get<std::size_t>();
  for (const auto& s : j.at("curve")) {
    r.curve.push_back({s.at("c").get<std::size_t>(), s.at("delta_tl").get<double>(),
                       s.at("delta_br").get<double>(), s.at("score").get<double>()});
  }
  return r;
}

json to_json(const AnalysisReport& report) {
  return {{"tool_version", report.tool_version},
          {"timestamp", report.timestamp},
          {"input",
           {{"path", report.input.path},
            {"layers", report.input.layers},
            {"samples", report.input.samples},
            {"dims", report.input.dims}}},
          {"metric", to_json(report.metric)},
          {"similarity",
           {{"size", report.similarity.rows()},
            {"values", matrix_json(report.similarity)},
            {"build_seconds", report.build_seconds}}},
          {"statistics",
           {{"min", report.statistics.min},
            {"max", report.statistics.max},
            {"mean", report.statistics.mean},
            {"range", report.statistics.range}}},
          {"cutoff", to_json(report.cutoff)}};
}

AnalysisReport analysis_report_from_json(const json& j) {
  AnalysisReport r;
  r.tool_version = j.at("tool_version").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  const auto& in = j.at("input");
  r.input.path = in.at("path").get<std::string>();
  r.input.layers = in.at("layers").get<std::size_t>();
  r.input.samples = in.at("samples").get<std::size_t>();
  r.input.dims = in.at("dims").get<std::vector<std::size_t>>();
  r.metric = metric_config_from_json(j.at("metric"));
  r.similarity = matrix_from_json(j.at("similarity").at("values"));
  r.build_seconds = j.at("similarity").at("build_seconds").get<double>();
  const auto& st = j.at("statistics");
  r.statistics = {st.at("min").get<double>(), st.at("max").get<double>(),
                  st.at("mean").get<double>(), st.at("range").get<double>()};
  r.cutoff = cutoff_report_from_json(j.at("cutoff"));
  return r;
}

json to_json(const SensitivityReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"n", r.n},
                       {"cutoff_mean", r.cutoff_mean},
                       {"cutoff_std", r.cutoff_std},
                       {"matrix_variance", r.matrix_variance},
                       {"wall_seconds_mean", r.wall_seconds_mean},
                       {"cutoffs", r.cutoffs}});
  }
  return {{"tool_version", kToolVersion},
          {"layers", report.layers},
          {"source_samples", report.source_samples},
          {"repeats", report.repeats},
          {"seed", report.seed},
          {"metric", to_json(report.metric)},
          {"records", std::move(records)}};
}

std::string matrix_to_csv(const Eigen::MatrixXd& z) {
  std::string out;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (c) out += ',';
      out += format_real(z(r, c));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd matrix_from_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view tok = rest.substr(0, comma);
      while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
      if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) +
                                               ": not a number: '" + std::string(tok) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, origin + ": empty matrix");
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return z;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  return matrix_from_csv(read_text_file(path), path.string());
}

std::string curve_to_csv(const CutoffReport& report) {
  std::string out = "c,delta_tl,delta_br,score\n";
  for (const auto& s : report.curve) {
    out += std::to_string(s.cutoff) + ',' + format_real(s.delta_tl) + ',' +
           format_real(s.delta_br) + ',' + format_real(s.score) + '\n';
  }
  return out;
}

std::string sensitivity_to_csv(const SensitivityReport& report) {
  std::string out = "n,cutoff_mean,cutoff_std,matrix_variance,wall_seconds_mean\n";
  for (const auto& r : report.records) {
    out += std::to_string(r.n) + ',' + format_real(r.cutoff_mean) + ',' +
           format_real(r.cutoff_std) + ',' + format_real(r.matrix_variance) + ',' +
           format_real(r.wall_seconds_mean) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace layercut
