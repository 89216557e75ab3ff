#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "purify/runner.hpp"

using namespace purify;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = PURIFY_CONFIG_DIR;

Json mech_config() {
  return Json::parse(R"({"schema": "purify.config/1", "kind": "mech", "name": "t", "seed": 3,
    "mode": "instance", "table": [[0.0, 2.0], [1.0, 1.0]], "expect": {"u_star": 1.0}})");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("purify_test_runner_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config header validation") {
  CHECK_NOTHROW(ExperimentConfig::from_json(mech_config()));
  auto j = mech_config();
  j["schema"] = "purify.config/0";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = mech_config();
  j["kind"] = "bake";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = mech_config();
  j.erase("seed");
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(load_config(kConfigs / "does_not_exist.json"), ConfigError);
}

TEST_CASE("kind-specific errors surface before computing") {
  auto j = mech_config();
  j["mode"] = "nonsense";
  CHECK_THROWS_AS(run(ExperimentConfig::from_json(j)), ConfigError);
  j = mech_config();
  j["table"] = "not a table";
  CHECK_THROWS_AS(run(ExperimentConfig::from_json(j)), ConfigError);
}

TEST_CASE("mech instance report") {
  const auto b = run(ExperimentConfig::from_json(mech_config()));
  CHECK(b.passed());
  CHECK(b.report.at("schema") == kReportSchema);
  CHECK(b.report.at("status") == "pass");
  CHECK(b.report.at("seed") == 3);
  CHECK(b.report.contains("timing"));
  CHECK(b.report.at("payload").at("u_star").get<double>() == 1.0);
}

TEST_CASE("bundle round trip and replay") {
  const auto cfg = load_config(kConfigs / "mech_2x2.json");
  const auto b = run(cfg);
  const fs::path dir = scratch("bundle");
  write_bundle(b, dir);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "summary.txt"));
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

  const Json recorded = read_json_file(dir / "report.json");
  const auto same = replay(recorded);
  CHECK(same.match);
  CHECK(same.first_divergence.empty());

  auto other = cfg;
  other.set_seed(cfg.seed + 1);
  const auto diff = replay(recorded, other);
  CHECK_FALSE(diff.match);
  CHECK(diff.first_divergence == "/seed");
  fs::remove_all(dir);
}

TEST_CASE("replay rejects foreign bundles") {
  const auto b = run(ExperimentConfig::from_json(mech_config()));
  Json r = b.report;
  r["version"] = "0.0.0-other";
  CHECK_THROWS_AS(replay(r), IncompatibleBundle);
  r = b.report;
  r["schema"] = "something/else";
  CHECK_THROWS_AS(replay(r), IncompatibleBundle);
}

TEST_CASE("first divergence compares doubles by bits") {
  const Json a = {{"x", {1.0, 0.1 + 0.2}}};
  const Json b = {{"x", {1.0, 0.3}}};
  CHECK(first_divergence(a, a) == std::nullopt);
  CHECK(first_divergence(a, b) == std::optional<std::string>("/x/1"));
  CHECK(first_divergence(Json{{"k", 1}}, Json{{"j", 1}}).has_value());
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()).empty());
}

TEST_CASE("monitoring and strategy parsing") {
  const auto ss = parse_monitoring(Json::parse(R"({"kind": "private_neighbor", "noise": {"shape": "triangular"}, "eps0": 0.05, "eps1": 0.05})"), 3);
  CHECK(ss.kind == MonitoringKind::PrivateNeighbor);
  CHECK(ss.neighbor == SignalStructure::cyclic(3));
  CHECK_THROWS_AS(parse_monitoring(Json::parse(R"({"kind": "telepathy"})"), 2), ConfigError);
  const auto st = parse_strategy(Json::parse(R"({"kind": "proportional_response", "x": 0.5})"));
  CHECK(st.kind == MachineKind::ProportionalResponse);
  CHECK(parse_strategy(strategy_to_json(st)).x == st.x);
  const auto sh = parse_shocks(Json::parse(R"({"uniform": [0.6, 0.9]})"), "kappa");
  CHECK(sh.mean() == doctest::Approx(0.75));
  CHECK(parse_shocks(shocks_to_json(sh), "kappa") == sh);
}

TEST_CASE("every shipped config parses") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path()));
    ++n;
  }
  CHECK(n >= 12);
}

TEST_CASE("replay notices a changed replication count") {
  const Json j = Json::parse(R"({"schema": "purify.config/1", "kind": "verify", "name": "mc", "seed": 9,
    "grid": [0.0, 1.0], "probe_depth": 0,
    "cases": [{"name": "pr",
      "game": {"n_agents": 2, "delta": 0.8, "kappa": 0.75},
      "monitoring": {"kind": "private_neighbor", "noise": {"shape": "triangular"}, "eps0": 0.05, "eps1": 0.05},
      "strategy": {"kind": "proportional_response", "x": 0.5},
      "method": "monte_carlo", "n_reps": 200, "expect": {"max_residual": 1.0}}]})");
  const auto cfg = ExperimentConfig::from_json(j);
  const auto b = run(cfg);
  const Json recorded = Json::parse(b.report.dump());
  CHECK(replay(recorded).match);
  Json k = j;
  k["cases"][0]["n_reps"] = 201;
  const auto r = replay(recorded, ExperimentConfig::from_json(k));
  CHECK_FALSE(r.match);
  CHECK_FALSE(r.first_divergence.empty());
}
