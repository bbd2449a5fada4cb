#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cbranch/experiment.hpp"

using namespace cbranch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cbranch_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

bool mentions(const ValidationResult& v, const std::string& needle) {
  for (const auto& m : v.violations)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

ExperimentConfig must_parse(const std::string& text) {
  auto v = validate_config(text);
  for (const auto& m : v.violations) MESSAGE(m);
  REQUIRE(v.ok());
  return *v.config;
}

}  // namespace

TEST_CASE("minimal two-color config is accepted") {
  const auto c = must_parse(R"({"kind": "rate", "nu": [0.5, 0.5], "mu": [1, 1]})");
  CHECK(c.kind == ExperimentKind::kRate);
  CHECK(c.nu->size() == 2);
}

TEST_CASE("theta entry 1.0 is rejected") {
  const auto v = validate_config(R"({"kind": "dimension", "law": [{"colors": [1, 1], "p": 1}],
                                     "theta": [0.5, 1.0]})");
  CHECK_FALSE(v.ok());
  CHECK(mentions(v, "θ(i) ∈ (0,1) required"));
}

TEST_CASE("law summing to 0.9 is rejected") {
  const auto v = validate_config(R"({"kind": "gw", "offspring": [{"children": 0, "p": 0.2}, {"children": 2, "p": 0.7}]})");
  CHECK_FALSE(v.ok());
  CHECK(mentions(v, "sum to 0.9"));
  const auto w = validate_config(R"({"kind": "block", "nu": [0.5, 0.5],
                                     "law": [{"colors": [0, 0], "p": 0.2}, {"colors": [2, 2], "p": 0.7}]})");
  CHECK_FALSE(w.ok());
  CHECK(mentions(w, "'law'"));
}

TEST_CASE("violations are collected") {
  const auto v = validate_config(R"({"kind": "dimension", "law": [{"colors": [1, 1], "p": 1}],
                                     "theta": [0.5, 0.5, 0.5], "depth": 0, "colour": 3})");
  CHECK_FALSE(v.ok());
  CHECK(mentions(v, "dimension mismatch"));
  CHECK(mentions(v, "'depth'"));
  CHECK(mentions(v, "unknown field"));
  CHECK(v.violations.size() == 3);
  CHECK(mentions(validate_config(R"({"kind": "rate", "nu": [0.6, 0.6], "mu": [1, 1]})"), "not a probability"));
  CHECK(mentions(validate_config(R"({"kind": "rate", "nu": [0.5, 0.5]})"), "'mu': required"));
  CHECK(mentions(validate_config(R"({"kind": "bogus"})"), "unknown experiment kind"));
}

TEST_CASE("malformed text reports line and column") {
  const auto v = validate_config("{\n  \"kind\": \"gw\",\n  \"offspring\": [1, 2,,]\n}");
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].find("line 3") != std::string::npos);
  CHECK(v.violations[0].find("column") != std::string::npos);
}

TEST_CASE("number formatting uses 12 significant digits") {
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("gw run reports the quadratic extinction root") {
  auto c = must_parse(R"({"kind": "gw", "offspring": [{"children": 0, "p": 0.25}, {"children": 2, "p": 0.75}],
                          "trials": 200})");
  const auto dir = scratch("gw");
  const auto summary = run_experiment(c, dir);
  CHECK(summary["extinction"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(read(dir / "summary.json").find("\"extinction\": 0.333333333333") != std::string::npos);
  CHECK(fs::exists(dir / "metadata.json"));
  const auto csv = read(dir / "trials.csv");
  CHECK(csv.rfind("# seed=0\n# version=", 0) == 0);
  CHECK(csv.find("# config_hash=") != std::string::npos);
}

TEST_CASE("dimension run on the full binary tree reports exactly 1") {
  auto c = must_parse(R"({"kind": "dimension", "law": [{"colors": [1, 1], "p": 1}], "theta": [0.5, 0.5],
                          "depth": 20, "trials": 2})");
  const auto dir = scratch("dim");
  const auto summary = run_experiment(c, dir);
  CHECK(summary["estimate"].get<double>() == 1.0);
  CHECK(read(dir / "summary.json").find("\"estimate\": 1.0") != std::string::npos);
}

TEST_CASE("reruns are byte-identical, threads do not matter") {
  const char* configs[] = {
      R"({"kind": "gw", "offspring": [{"children": 0, "p": 0.25}, {"children": 2, "p": 0.75}], "trials": 50})",
      R"({"kind": "mcmillan", "law": [{"colors": [0, 0], "p": 0.25}, {"colors": [2, 2], "p": 0.75}],
          "nu": [0.5, 0.5], "depth": 20, "trials": 20})",
      R"({"kind": "dimension", "law": [{"colors": [0, 0], "p": 0.25}, {"colors": [2, 2], "p": 0.75}],
          "theta": [0.5, 0.5], "depth": 15, "trials": 20, "filter": {"nu": [0.7, 0.3], "radius": 0.1}})",
      R"({"kind": "block", "law": [{"colors": [0, 0], "p": 0.25}, {"colors": [2, 2], "p": 0.75}],
          "nu": [0.5, 0.5], "order": 4, "trials": 20, "blocks": 30, "steer_trials": 3, "order_search": true})",
      R"({"kind": "ldp", "mu": [0.5, 0.5], "nu": [0.9, 0.1], "depth": 50})",
      R"({"kind": "rate", "nu": [0.2, 0.3, 0.5], "mu": [1, 0.5, 2]})",
  };
  int i = 0;
  for (const char* text : configs) {
    auto c = must_parse(text);
    apply_overrides(c, 777, std::nullopt);
    const auto a = scratch("det_a" + std::to_string(i));
    const auto b = scratch("det_b" + std::to_string(i));
    run_experiment(c, a, 1);
    run_experiment(c, b, 3);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      CHECK_MESSAGE(read(entry.path()) == read(b / entry.path().filename()), entry.path().string());
    }
    CHECK(files >= 3);
    ++i;
  }
}

TEST_CASE("different seeds give different bodies and hashes") {
  auto c = must_parse(R"({"kind": "gw", "offspring": [{"children": 0, "p": 0.25}, {"children": 2, "p": 0.75}],
                          "trials": 50, "depth": 10})");
  auto d = c;
  apply_overrides(c, 1, std::nullopt);
  apply_overrides(d, 2, 60);
  CHECK(config_hash(c.echo) != config_hash(d.echo));
  const auto a = scratch("seed1"), b = scratch("seed2");
  run_experiment(c, a);
  run_experiment(d, b);
  CHECK(read(a / "trials.csv") != read(b / "trials.csv"));
  CHECK(d.trials == 60);
}

TEST_CASE("command exit codes") {
  const auto dir = scratch("cmd");
  std::ostringstream log, err;
  write(dir / "bad.json", R"({"kind": "rate", "nu": [0.5, 0.5], "mu": [1]})");
  CHECK(command_validate(dir / "bad.json", log, err) == 1);
  CHECK(command_run(dir / "bad.json", 1, dir / "out", std::nullopt, 1, log, err) == 1);
  CHECK(command_validate(dir / "missing.json", log, err) == 1);

  // five colors are beyond exact enumeration: the guard maps to exit 2
  write(dir / "guard.json", R"({"kind": "mcmillan", "nu": [0.2, 0.2, 0.2, 0.2, 0.2], "depth": 5})");
  CHECK(command_run(dir / "guard.json", 1, dir / "guard", std::nullopt, 1, log, err) == 2);

  write(dir / "ok.json", R"({"kind": "rate", "nu": [0.5, 0.5], "mu": [1.5, 1.5]})");
  CHECK(command_validate(dir / "ok.json", log, err) == 0);
  CHECK(command_run(dir / "ok.json", 9, dir / "ok", std::nullopt, 1, log, err) == 0);
  std::ostringstream report;
  CHECK(command_report(dir / "ok", report, err) == 0);
  CHECK(report.str().find("kullback_action") != std::string::npos);
  CHECK(command_report(dir / "nowhere", report, err) == 1);
}
