#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "purify/engine.hpp"
#include "purify/mechanism.hpp"
#include "purify/verifier.hpp"

namespace purify {

using Json = nlohmann::json;

// Field access with ConfigError on a missing key or a wrong type. `where`
// names the enclosing object in messages.
const Json& require(const Json& j, const std::string& key, const std::string& where);
double get_double(const Json& j, const std::string& key, const std::string& where);
double get_double(const Json& j, const std::string& key, double fallback, const std::string& where);
std::size_t get_size(const Json& j, const std::string& key, std::size_t fallback,
                     const std::string& where);
bool get_bool(const Json& j, const std::string& key, bool fallback, const std::string& where);
std::string get_string(const Json& j, const std::string& key, const std::string& fallback,
                       const std::string& where);
std::uint64_t get_u64(const Json& j, const std::string& key, const std::string& where);
std::vector<double> get_doubles(const Json& j, const std::string& where);
std::vector<std::vector<double>> get_matrix(const Json& j, const std::string& where);

// "kappa": 0.75 or {"uniform": [lo, hi]}
ShockDistribution parse_shocks(const Json& j, const std::string& where);
Json shocks_to_json(const ShockDistribution& d);

GameParams parse_game(const Json& j);
Json game_to_json(const GameParams& g);

NoiseFamily parse_noise(const Json& j);
SignalStructure parse_monitoring(const Json& j, std::size_t n_agents);
Json monitoring_to_json(const SignalStructure& ss);

// What a config says about a strategy; turned into machines once the game and
// monitoring are known.
struct StrategySpec {
  MachineKind kind = MachineKind::Constant;
  std::vector<double> x;            // one value broadcasts to every agent
  std::optional<double> alpha;      // belief-based only
  double rho = 0.0;
  double constant = 0.0;
  Calibration calibration = Calibration::Printed;
  bool check_bounds = true;

  Profile build(const GameParams& g, const SignalStructure& ss) const;
  std::string label() const;
};

StrategySpec parse_strategy(const Json& j);
Json strategy_to_json(const StrategySpec& s);

// One (game, monitoring, strategy) combination plus how to value it.
struct CaseSpec {
  std::string name;
  GameParams game;
  SignalStructure monitoring;
  StrategySpec strategy;
  ValueMethod method = ValueMethod::Analytic;
  std::size_t n_reps = 10000;
  std::size_t horizon = 0;
  Json expect = Json::object();

  ValueQuery query(RandomSeed seed, unsigned jobs) const;
};

// `defaults` is merged under the case (case keys win).
CaseSpec parse_case(const Json& j, const Json& defaults = Json::object());

PayoffMatrix parse_payoff_matrix(const Json& j, const std::string& where);
Mechanism parse_mechanism(const Json& j, const std::string& where);
ContractorScenario parse_contractor(const Json& j);
std::vector<Lottery> parse_target(const Json& j, const ContractorScenario& sc);

Json verification_to_json(const VerificationReport& r);
Json flags_to_json(const ClassifierFlags& f);
Json fragility_to_json(const FragilityResult& r);
Json contractor_report_to_json(const ContractorReport& r);

Json read_json_file(const std::filesystem::path& p);

// Round-trip formatting: 17 significant digits, '.' separator. NaN is empty.
std::string format_double(double v);

}  // namespace purify
