// purify: command-line front end for the experiment runner.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "purify/runner.hpp"

namespace fs = std::filesystem;
using namespace purify;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> jobs;
};

ExperimentConfig resolve(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig c = load_config(g.config);
  if (g.seed) c.set_seed(*g.seed);
  if (g.jobs) c.set_jobs(*g.jobs);
  if (!g.out.empty()) c.out = g.out;
  return c;
}

int run_kind(const Globals& g, ExperimentKind expected) {
  ExperimentConfig c = resolve(g);
  if (c.kind != expected)
    throw ConfigError("config kind is '" + std::string(experiment_kind_name(c.kind)) +
                      "' but the subcommand is '" + std::string(experiment_kind_name(expected)) + "'");
  const ReportBundle b = run(c);
  if (!c.out.empty()) write_bundle(b, c.out);
  std::cout << b.summary;
  return b.passed() ? kExitOk : kExitVerification;
}

int run_replay(const Globals& g, const std::string& bundle) {
  fs::path p = bundle;
  if (fs::is_directory(p)) p /= "report.json";
  const Json recorded = read_json_file(p);
  std::optional<ExperimentConfig> cfg;
  if (!g.config.empty() || g.seed || g.jobs) {
    if (!g.config.empty()) {
      cfg = load_config(g.config);
    } else {
      if (!recorded.contains("config")) throw IncompatibleBundle("report lacks its config");
      cfg = ExperimentConfig::from_json(recorded.at("config"));
    }
    if (g.seed) cfg->set_seed(*g.seed);
    if (g.jobs) cfg->set_jobs(*g.jobs);
  }
  const ReplayResult r = replay(recorded, cfg);
  if (!g.out.empty()) write_bundle(r.rerun, g.out);
  if (r.match) {
    std::cout << "replay: match (" << p.string() << ")\n";
    return kExitOk;
  }
  std::cout << "replay: MISMATCH, " << r.detail << "\n";
  return kExitReplay;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification and simulation engine for purified public-goods equilibria"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed (u64)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output directory for report.json, summary.txt and CSVs");

  struct Sub {
    const char* name;
    const char* help;
    ExperimentKind kind;
  };
  const Sub subs[] = {
      {"mech", "Mechanism construction, tie frequency, contractor scenario", ExperimentKind::Mech},
      {"simulate", "Simulate a path or collect signal statistics", ExperimentKind::Simulate},
      {"verify", "One-shot deviation verification", ExperimentKind::Verify},
      {"classify", "Equilibrium classifiers", ExperimentKind::Classify},
      {"fragility", "Best responses under private shocks", ExperimentKind::Fragility},
      {"sweep", "Verification over a parameter grid", ExperimentKind::Sweep},
  };
  std::optional<ExperimentKind> chosen;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->fallthrough();
    sc->callback([&chosen, k = s.kind] { chosen = k; });
  }
  std::string bundle;
  auto* rp = app.add_subcommand("replay", "Rerun a recorded report and compare bit for bit");
  rp->fallthrough();
  rp->add_option("bundle", bundle, "report.json or the directory holding it")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count()) g.seed = seed;
  if (jobs_opt->count()) g.jobs = jobs;

  try {
    if (rp->parsed()) return run_replay(g, bundle);
    return run_kind(g, *chosen);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
