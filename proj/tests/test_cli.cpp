#include <doctest.h>

#include <sstream>

#include "layercut/cli.hpp"
#include "layercut/report.hpp"
#include "test_support.hpp"

using namespace layercut;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fixture(const fs::path& dir, const std::string& regime = "structured") {
  const auto path = dir / (regime + ".simact");
  const auto r = run({"synth", "--regime", regime, "--layers", "6", "--samples", "60", "--dims", "8",
                      "--boundary", "3", "--epsilon", "0", "--seed", "3", "--out", path.string()});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("analyze finds the synthetic boundary and writes reports") {
  const auto dir = layercut::testing::scratch_dir("cli_analyze");
  const auto input = fixture(dir);
  const auto r = run({"analyze", "--input", input.string(), "--out", (dir / "out").string(),
                      "--format", "both"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("c* = 3\n") != std::string::npos);
  for (const char* name : {"similarity.csv", "curve.csv", "report.json"})
    CHECK(fs::exists(dir / "out" / name));
  const auto report =
      analysis_report_from_json(nlohmann::json::parse(read_text_file(dir / "out" / "report.json")));
  CHECK(report.cutoff.c_star == 3);
  CHECK(report.input.layers == 6);
  CHECK((report.similarity.array() == read_matrix_csv(dir / "out" / "similarity.csv").array()).all());
}

TEST_CASE("analyze output does not depend on the thread count") {
  const auto dir = layercut::testing::scratch_dir("cli_threads");
  const auto input = fixture(dir);
  for (const char* metric : {"cka", "jaccard", "svcca"}) {
    std::vector<std::string> csv;
    for (const char* t : {"1", "8"}) {
      const auto out = dir / (std::string(metric) + t);
      REQUIRE(run({"analyze", "--input", input.string(), "--metric", metric, "--k", "5", "--threads",
                   t, "--out", out.string(), "--format", "csv"})
                  .code == 0);
      csv.push_back(read_text_file(out / "similarity.csv") + read_text_file(out / "curve.csv"));
    }
    CHECK(csv[0] == csv[1]);
  }
}

TEST_CASE("exit codes") {
  const auto dir = layercut::testing::scratch_dir("cli_exit");
  const auto input = fixture(dir);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"analyze"}).code == kExitUsage);
  CHECK(run({"bogus"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"analyze", "--input", input.string(), "--metric", "nope"}).code == kExitUsage);
  CHECK(run({"analyze", "--input", input.string(), "--metric", "jaccard", "--k", "999"}).code ==
        kExitUsage);
  CHECK(run({"analyze", "--input", (dir / "missing.simact").string()}).code == kExitInput);

  layercut::write_text_file(dir / "junk.simact", "NOTSIMACT");
  const auto bad = run({"analyze", "--input", (dir / "junk.simact").string()});
  CHECK(bad.code == kExitInput);
  CHECK(bad.err.find("BadMagic") != std::string::npos);

  const auto flat = fixture(dir, "constant");
  const auto degenerate =
      run({"analyze", "--input", flat.string(), "--out", (dir / "flat").string()});
  CHECK(degenerate.code == kExitOk);
  CHECK(degenerate.out.find("c* = 2\n") != std::string::npos);
  CHECK(degenerate.out.find("degenerate") != std::string::npos);

  // A layer that is constant across samples cannot be scored.
  GeneratorSpec spec;
  spec.layers = 5;
  spec.samples = 10;
  spec.dims = {3};
  spec.boundary = 2;
  auto set = synthesize_activations(spec);
  auto layers = set.layers();
  layers[1] = LayerActivations(1, 10, 3, std::vector<float>(30, 1.0f));
  write_activation_container(ActivationSet(std::move(layers)), dir / "const_layer.simact");
  CHECK(run({"analyze", "--input", (dir / "const_layer.simact").string(), "--out",
             (dir / "x").string()})
            .code == kExitComputation);
  CHECK(exit_code_for(ErrorCode::TruncatedFile) == kExitInput);
  CHECK(exit_code_for(ErrorCode::SizeExceedsN) == kExitUsage);
  CHECK(exit_code_for(ErrorCode::ZeroNormRow) == kExitComputation);
}

TEST_CASE("render writes PGM and SVG") {
  const auto dir = layercut::testing::scratch_dir("cli_render");
  layercut::write_text_file(dir / "z.csv", matrix_to_csv(Eigen::MatrixXd::Ones(4, 4)));
  REQUIRE(run({"render", "--matrix", (dir / "z.csv").string(), "--out", (dir / "z.pgm").string()})
              .code == 0);
  CHECK(fs::file_size(dir / "z.pgm") == std::string("P5\n4 4\n255\n").size() + 16);
  REQUIRE(run({"render", "--matrix", (dir / "z.csv").string(), "--out", (dir / "z.svg").string()})
              .code == 0);
  CHECK(read_text_file(dir / "z.svg").find("<svg") != std::string::npos);
  CHECK(run({"render", "--matrix", (dir / "z.csv").string(), "--out", (dir / "z.png").string()})
            .code == kExitUsage);
  CHECK(run({"render", "--matrix", (dir / "z.csv").string(), "--out", (dir / "y.pgm").string(),
             "--min", "1", "--max", "0"})
            .code == kExitUsage);
}

TEST_CASE("sensitivity subcommand") {
  const auto dir = layercut::testing::scratch_dir("cli_sensitivity");
  const auto input = dir / "s.simact";
  REQUIRE(run({"synth", "--layers", "8", "--samples", "200", "--dims", "16", "--boundary", "4",
               "--epsilon", "0.005", "--seed", "2", "--out", input.string()})
              .code == 0);
  const auto r = run({"sensitivity", "--input", input.string(), "--sizes", "10,50,200", "--repeats",
                      "5", "--out", (dir / "out").string(), "--format", "both"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "out" / "sensitivity.json"));
  const auto& recs = j.at("records");
  REQUIRE(recs.size() == 3);
  CHECK(recs[2].at("cutoff_std").get<double>() <= recs[0].at("cutoff_std").get<double>());
  CHECK(recs[2].at("cutoff_mean").get<double>() == 4.0);
  CHECK(fs::exists(dir / "out" / "sensitivity.csv"));

  CHECK(run({"sensitivity", "--input", input.string(), "--sizes", "201", "--out",
             (dir / "o2").string()})
            .code == kExitUsage);
  CHECK(run({"sensitivity", "--input", input.string(), "--sizes", "10", "--repeats", "1", "--out",
             (dir / "o3").string()})
            .code == kExitUsage);
}

TEST_CASE("oracle subcommand") {
  const auto dir = layercut::testing::scratch_dir("cli_oracle");
  const auto cutoff = run({"oracle", "--suite", "cutoff", "--cases", "1000", "--seed", "7",
                           "--fail-dir", dir.string()});
  CHECK(cutoff.code == kExitOk);
  CHECK(cutoff.out.find("failures=0") != std::string::npos);
  CHECK(run({"oracle", "--suite", "all", "--fail-dir", dir.string()}).code == kExitOk);

  const auto mutated = run({"oracle", "--suite", "cutoff", "--cases", "200", "--mutate", "delta",
                            "--fail-dir", dir.string()});
  CHECK(mutated.code == kExitOracleMismatch);
  bool dumped = false;
  for (const auto& e : fs::directory_iterator(dir))
    dumped = dumped || e.path().filename().string().rfind("oracle_failure_cutoff_", 0) == 0;
  CHECK(dumped);
}

TEST_CASE("convert round-trips and CSV input analyzes identically") {
  const auto dir = layercut::testing::scratch_dir("cli_convert");
  const auto input = fixture(dir);
  REQUIRE(run({"convert", "--input", input.string(), "--out", (dir / "csv").string()}).code == 0);
  REQUIRE(run({"convert", "--input", (dir / "csv").string(), "--out", (dir / "back.simact").string()})
              .code == 0);
  CHECK(read_text_file(input) == read_text_file(dir / "back.simact"));

  REQUIRE(run({"analyze", "--input", (dir / "csv").string(), "--out", (dir / "a").string(),
               "--format", "csv"})
              .code == 0);
  REQUIRE(run({"analyze", "--input", (dir / "back.simact").string(), "--out", (dir / "b").string(),
               "--format", "csv"})
              .code == 0);
  CHECK(read_text_file(dir / "a" / "similarity.csv") == read_text_file(dir / "b" / "similarity.csv"));
  CHECK(read_text_file(dir / "a" / "curve.csv") == read_text_file(dir / "b" / "curve.csv"));
}
