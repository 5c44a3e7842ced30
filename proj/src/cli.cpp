#include "layercut/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "layercut/activation_store.hpp"
#include "layercut/cutoff_selector.hpp"
#include "layercut/oracle.hpp"
#include "layercut/render.hpp"
#include "layercut/report.hpp"
#include "layercut/sensitivity.hpp"
#include "layercut/similarity_matrix.hpp"

namespace fs = std::filesystem;

namespace layercut {

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::NonFinite:
    case ErrorCode::InconsistentN:
    case ErrorCode::InvalidSet:
    case ErrorCode::IoFailure:
    case ErrorCode::ParseError:
      return kExitInput;
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidConfig:
    case ErrorCode::KTooLarge:
    case ErrorCode::SizeExceedsN:
      return kExitUsage;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DegenerateRepresentation:
    case ErrorCode::ZeroNormRow:
    case ErrorCode::BlockTooSmall:
    case ErrorCode::CutoffOutOfRange:
    case ErrorCode::TooFewLayers:
      return kExitComputation;
  }
  return kExitComputation;
}

namespace {

struct MetricArgs {
  std::string metric = "cka";
  std::size_t k = 20;
  double threshold = 0.99;
  double eps = 1e-12;
};

void add_metric_options(CLI::App* cmd, MetricArgs& m) {
  cmd->add_option("--metric", m.metric, "Similarity metric")
      ->check(CLI::IsMember({"cka", "jaccard", "svcca"}))
      ->capture_default_str();
  cmd->add_option("--k", m.k, "Neighborhood size for jaccard")->capture_default_str();
  cmd->add_option("--svd-threshold", m.threshold, "Variance retained by SVCCA truncation")
      ->capture_default_str();
  cmd->add_option("--eps", m.eps, "Singular-value floor for SVCCA whitening")
      ->capture_default_str();
}

MetricConfig to_config(const MetricArgs& m) {
  MetricConfig cfg;
  cfg.metric = *parse_metric(m.metric);
  cfg.k = m.k;
  cfg.t = m.threshold;
  cfg.eps = m.eps;
  cfg.validate();
  return cfg;
}

ActivationSet load_input(const fs::path& input) {
  if (fs::is_directory(input)) {
    const auto files = list_layer_csv(input);
    if (files.empty()) throw Error(ErrorCode::IoFailure, "no .csv files in " + input.string());
    return read_layer_csv(files);
  }
  if (!fs::exists(input)) throw Error(ErrorCode::IoFailure, input.string() + " does not exist");
  return read_activation_container(input);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
}

bool wants_json(const std::string& format) { return format == "json" || format == "both"; }
bool wants_csv(const std::string& format) { return format == "csv" || format == "both"; }

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input;
  MetricArgs metric;
  std::string out = ".";
  std::string format = "both";
  unsigned threads = 0;
};

int analyze(const AnalyzeArgs& a, std::ostream& out) {
  const MetricConfig cfg = to_config(a.metric);
  const ActivationSet set = load_input(a.input);
  const SimilarityMatrix z = build_similarity_matrix(set, cfg, a.threads);
  const CutoffReport cut = select_cutoff(z);

  AnalysisReport report;
  report.input = {a.input, set.layer_count(), set.sample_count(), set.feature_dims()};
  report.metric = cfg;
  report.similarity = z.values;
  report.build_seconds = z.build_seconds;
  report.cutoff = cut;
  report.statistics = matrix_statistics(z);
  report.timestamp = utc_timestamp();

  const fs::path dir(a.out);
  ensure_dir(dir);
  if (wants_csv(a.format)) {
    write_text_file(dir / "similarity.csv", matrix_to_csv(z.values));
    write_text_file(dir / "curve.csv", curve_to_csv(cut));
  }
  if (wants_json(a.format)) write_text_file(dir / "report.json", to_json(report).dump(2) + "\n");

  const auto& best = cut.curve[cut.c_star - 2];
  out << "metric = " << to_string(cfg.metric) << ", L = " << set.layer_count()
      << ", N = " << set.sample_count() << "\n";
  out << "c* = " << cut.c_star << "\n";
  out << "score = " << format_real(best.score) << " (delta_tl = " << format_real(best.delta_tl)
      << ", delta_br = " << format_real(best.delta_br) << ")\n";
  out << "off-diagonal range = [" << format_real(report.statistics.min) << ", "
      << format_real(report.statistics.max) << "]\n";
  if (cut.degenerate) out << "warning: degenerate score curve (all scores equal)\n";
  if (cut.tie_count > 1) out << "note: " << cut.tie_count << " candidates tie at the maximum\n";
  return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string matrix;
  std::string out;
  std::optional<double> min;
  std::optional<double> max;
};

int render(const RenderArgs& a, std::ostream& out) {
  const fs::path target(a.out);
  const auto ext = target.extension().string();
  if (ext != ".pgm" && ext != ".svg") {
    throw Error(ErrorCode::InvalidConfig, "output must end in .pgm or .svg");
  }
  if (a.min && a.max && !(*a.min < *a.max)) {
    throw Error(ErrorCode::InvalidConfig, "--min must be below --max");
  }
  const Eigen::MatrixXd z = read_matrix_csv(a.matrix);
  const RenderRange range{a.min, a.max};
  if (ext == ".pgm") {
    const auto bytes = render_pgm(z, range);
    write_text_file(target, std::string(bytes.begin(), bytes.end()));
  } else {
    write_text_file(target, render_svg(z, range));
  }
  out << "wrote " << target.string() << " (" << z.rows() << "x" << z.cols() << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  std::string input;
  std::vector<std::size_t> sizes;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  MetricArgs metric;
  std::string out = ".";
  std::string format = "both";
  unsigned threads = 0;
};

int sensitivity(const SensitivityArgs& a, std::ostream& out) {
  if (a.repeats < 2) throw Error(ErrorCode::InvalidSpec, "--repeats must be at least 2");
  SensitivitySpec spec;
  spec.sizes = a.sizes;
  spec.repeats = a.repeats;
  spec.seed = a.seed;
  spec.metric = to_config(a.metric);
  spec.threads = a.threads;
  const ActivationSet set = load_input(a.input);
  const SensitivityReport report = run_sensitivity(set, spec);

  const fs::path dir(a.out);
  ensure_dir(dir);
  if (wants_csv(a.format)) write_text_file(dir / "sensitivity.csv", sensitivity_to_csv(report));
  if (wants_json(a.format)) {
    write_text_file(dir / "sensitivity.json", to_json(report).dump(2) + "\n");
  }

  out << std::setw(8) << "n" << std::setw(14) << "cutoff_mean" << std::setw(14) << "cutoff_std"
      << std::setw(18) << "matrix_variance" << std::setw(16) << "wall_seconds" << "\n";
  for (const auto& r : report.records) {
    out << std::setw(8) << r.n << std::setw(14) << std::fixed << std::setprecision(3)
        << r.cutoff_mean << std::setw(14) << r.cutoff_std << std::setw(18) << std::scientific
        << std::setprecision(4) << r.matrix_variance << std::setw(16) << r.wall_seconds_mean
        << std::defaultfloat << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string suite = "all";
  std::optional<std::size_t> cases;
  std::uint64_t seed = 7;
  std::string fail_dir = ".";
  std::string mutate;
};

// Deliberately wrong δ (drops the last row pair) for harness self-checks.
double corrupted_block_variability(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  const Eigen::Index k = block.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i + 2 < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) total += std::abs(block(i, j) - block(i + 1, j));
  return total / (static_cast<double>(k - 1) * static_cast<double>(k));
}

int run_oracle(const OracleArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<oracle::SuiteResult> results;
  const bool all = a.suite == "all";
  if (all || a.suite == "cka") results.push_back(oracle::run_cka_suite(a.cases.value_or(100), a.seed));
  if (all || a.suite == "jaccard")
    results.push_back(oracle::run_jaccard_suite(a.cases.value_or(100), a.seed));
  if (all || a.suite == "svcca")
    results.push_back(oracle::run_svcca_suite(a.cases.value_or(100), a.seed));
  if (all || a.suite == "cutoff") {
    const BlockVariabilityFn delta =
        a.mutate == "delta" ? &corrupted_block_variability : &block_variability;
    results.push_back(oracle::run_cutoff_suite(a.cases.value_or(1000), a.seed, delta));
  }

  bool ok = true;
  for (const auto& r : results) {
    out << std::left << std::setw(8) << r.suite << std::right << " cases=" << r.cases
        << " failures=" << r.failures << " max_abs_error=" << std::scientific
        << std::setprecision(3) << r.max_abs_error << std::defaultfloat << " seconds="
        << std::fixed << std::setprecision(3) << r.seconds << std::defaultfloat << "  "
        << (r.passed() ? "PASS" : "FAIL") << "\n";
    if (r.passed()) continue;
    ok = false;
    ensure_dir(a.fail_dir);
    for (const auto& f : r.failed) {
      const fs::path file = fs::path(a.fail_dir) / ("oracle_failure_" + r.suite + "_" +
                                                    std::to_string(f.case_index) + ".json");
      write_text_file(file, f.instance_json + "\n");
      err << r.suite << " case " << f.case_index << ": FAIL " << f.message << " -> "
          << file.string() << "\n";
    }
  }
  return ok ? kExitOk : kExitOracleMismatch;
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string input;
  std::vector<std::string> csv;
  std::string out;
};

int convert(const ConvertArgs& a, std::ostream& out) {
  if (a.input.empty() == a.csv.empty()) {
    throw Error(ErrorCode::InvalidConfig, "give exactly one of --input or --csv");
  }
  if (!a.csv.empty()) {
    std::vector<fs::path> paths(a.csv.begin(), a.csv.end());
    const auto set = read_layer_csv(paths);
    write_activation_container(set, a.out);
    out << "wrote " << a.out << " (L=" << set.layer_count() << ", N=" << set.sample_count()
        << ")\n";
    return kExitOk;
  }
  if (fs::is_directory(a.input)) {
    const auto set = load_input(a.input);
    write_activation_container(set, a.out);
    out << "wrote " << a.out << " (L=" << set.layer_count() << ", N=" << set.sample_count()
        << ")\n";
    return kExitOk;
  }
  const auto set = read_activation_container(a.input);
  const auto files = write_layer_csv(set, a.out);
  out << "wrote " << files.size() << " CSV files to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string regime = "structured";
  std::size_t layers = 12;
  std::size_t samples = 200;
  std::vector<std::size_t> dims = {32};
  std::size_t boundary = 6;
  double epsilon = 0.01;
  double phase_noise = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int synth(const SynthArgs& a, std::ostream& out) {
  GeneratorSpec spec;
  spec.layers = a.layers;
  spec.samples = a.samples;
  spec.dims = a.dims;
  spec.regime = a.regime == "constant" ? Regime::Constant
                : a.regime == "noise"  ? Regime::Noise
                                       : Regime::Structured;
  spec.boundary = a.boundary;
  spec.epsilon = a.epsilon;
  spec.phase_noise = a.phase_noise;
  spec.seed = a.seed;
  const auto set = synthesize_activations(spec);
  write_activation_container(set, a.out);
  out << "wrote " << a.out << " (" << a.regime << ", L=" << set.layer_count()
      << ", N=" << set.sample_count() << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-similarity analysis and automatic depth cutoff selection", "layercut"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Build the similarity matrix and select c*");
  analyze_cmd->add_option("--input", analyze_args.input, "SIMACT file or directory of layer CSVs")
      ->required();
  add_metric_options(analyze_cmd, analyze_args.metric);
  analyze_cmd->add_option("--out", analyze_args.out, "Output directory")->capture_default_str();
  analyze_cmd->add_option("--format", analyze_args.format, "Report files to write")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();
  analyze_cmd->add_option("--threads", analyze_args.threads, "Worker threads (0 = all cores)");

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render a similarity matrix CSV as PGM or SVG");
  render_cmd->add_option("--matrix", render_args.matrix, "Matrix CSV")->required();
  render_cmd->add_option("--out", render_args.out, "Output .pgm or .svg")->required();
  render_cmd->add_option("--min", render_args.min, "Value mapped to black / low end");
  render_cmd->add_option("--max", render_args.max, "Value mapped to white / high end");

  SensitivityArgs sens_args;
  auto* sens_cmd = app.add_subcommand("sensitivity", "Repeated-subsampling cutoff stability");
  sens_cmd->add_option("--input", sens_args.input, "SIMACT file or directory of layer CSVs")
      ->required();
  sens_cmd->add_option("--sizes", sens_args.sizes, "Comma-separated subsample sizes")
      ->delimiter(',')
      ->required();
  sens_cmd->add_option("--repeats", sens_args.repeats, "Draws per size")->capture_default_str();
  sens_cmd->add_option("--seed", sens_args.seed, "Master seed")->capture_default_str();
  add_metric_options(sens_cmd, sens_args.metric);
  sens_cmd->add_option("--out", sens_args.out, "Output directory")->capture_default_str();
  sens_cmd->add_option("--format", sens_args.format, "Report files to write")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();
  sens_cmd->add_option("--threads", sens_args.threads, "Worker threads (0 = all cores)");

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle", "Cross-check against brute-force oracles");
  oracle_cmd->add_option("--suite", oracle_args.suite, "Suite to run")
      ->check(CLI::IsMember({"cka", "jaccard", "svcca", "cutoff", "all"}))
      ->capture_default_str();
  oracle_cmd->add_option("--cases", oracle_args.cases,
                         "Random instances per suite (default 100, cutoff 1000)");
  oracle_cmd->add_option("--seed", oracle_args.seed, "Seed")->capture_default_str();
  oracle_cmd->add_option("--fail-dir", oracle_args.fail_dir,
                         "Where failing instances are written")
      ->capture_default_str();
  oracle_cmd->add_option("--mutate", oracle_args.mutate)
      ->check(CLI::IsMember({"delta"}))
      ->group("");

  ConvertArgs convert_args;
  auto* convert_cmd = app.add_subcommand("convert", "Convert between layer CSVs and SIMACT");
  convert_cmd->add_option("--input", convert_args.input,
                          "SIMACT file (-> CSV directory) or CSV directory (-> SIMACT)");
  convert_cmd->add_option("--csv", convert_args.csv, "Layer CSV files in layer order");
  convert_cmd->add_option("--out", convert_args.out, "Output SIMACT file or CSV directory")
      ->required();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic SIMACT fixture");
  synth_cmd->add_option("--regime", synth_args.regime)
      ->check(CLI::IsMember({"structured", "constant", "noise"}))
      ->capture_default_str();
  synth_cmd->add_option("--layers", synth_args.layers)->capture_default_str();
  synth_cmd->add_option("--samples", synth_args.samples)->capture_default_str();
  synth_cmd->add_option("--dims", synth_args.dims, "One D or one per layer")->delimiter(',');
  synth_cmd->add_option("--boundary", synth_args.boundary)->capture_default_str();
  synth_cmd->add_option("--epsilon", synth_args.epsilon)->capture_default_str();
  synth_cmd->add_option("--phase-noise", synth_args.phase_noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitUsage;
  }

  try {
    if (*analyze_cmd) return analyze(analyze_args, out);
    if (*render_cmd) return render(render_args, out);
    if (*sens_cmd) return sensitivity(sens_args, out);
    if (*oracle_cmd) return run_oracle(oracle_args, out, err);
    if (*convert_cmd) return convert(convert_args, out);
    if (*synth_cmd) return synth(synth_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitUsage;
}

}  // namespace layercut
