#include "purify/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace purify {

namespace {

// Parsed literals are unsigned, values set from code are often signed.
bool non_negative_int(const Json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string at(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

}  // namespace

const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing field " + at(where, key));
  return *it;
}

double get_double(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(at(where, key) + " must be a number");
  return v.get<double>();
}

double get_double(const Json& j, const std::string& key, double fallback,
                  const std::string& where) {
  return j.contains(key) ? get_double(j, key, where) : fallback;
}

std::size_t get_size(const Json& j, const std::string& key, std::size_t fallback,
                     const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!non_negative_int(v)) throw ConfigError(at(where, key) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

bool get_bool(const Json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(at(where, key) + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const Json& j, const std::string& key, const std::string& fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(at(where, key) + " must be a string");
  return v.get<std::string>();
}

std::uint64_t get_u64(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!non_negative_int(v)) throw ConfigError(at(where, key) + " must be an unsigned integer");
  return v.get<std::uint64_t>();
}

std::vector<double> get_doubles(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ConfigError(where + " must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + " must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> get_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty array of rows");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(get_doubles(row, where));
  for (const auto& row : out)
    if (row.size() != out.front().size()) throw ConfigError(where + " rows differ in length");
  return out;
}

ShockDistribution parse_shocks(const Json& j, const std::string& where) {
  ShockDistribution d;
  if (j.is_number()) {
    d = ShockDistribution::point(j.get<double>());
  } else if (j.is_object() && j.contains("uniform")) {
    const auto b = get_doubles(j.at("uniform"), at(where, "uniform"));
    if (b.size() != 2) throw ConfigError(at(where, "uniform") + " needs [lo, hi]");
    d = ShockDistribution::uniform(b[0], b[1]);
  } else {
    throw ConfigError(where + " must be a number or {\"uniform\": [lo, hi]}");
  }
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return d;
}

Json shocks_to_json(const ShockDistribution& d) {
  if (d.kind == ShockDistribution::Kind::PointMass) return d.lo;
  return Json{{"uniform", {d.lo, d.hi}}};
}

GameParams parse_game(const Json& j) {
  GameParams g;
  g.n_agents = get_size(j, "n_agents", 2, "game");
  g.delta = get_double(j, "delta", "game");
  g.kappa = parse_shocks(require(j, "kappa", "game"), "game.kappa");
  try {
    g.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
  return g;
}

Json game_to_json(const GameParams& g) {
  return Json{{"n_agents", g.n_agents}, {"delta", g.delta}, {"kappa", shocks_to_json(g.kappa)}};
}

NoiseFamily parse_noise(const Json& j) {
  NoiseFamily f;
  const std::string shape = get_string(j, "shape", "triangular", "noise");
  if (shape == "triangular") f.shape = NoiseFamily::Shape::Triangular;
  else if (shape == "truncated_gaussian") f.shape = NoiseFamily::Shape::TruncatedGaussian;
  else throw ConfigError("unknown noise shape '" + shape + "'");
  f.half_width = get_double(j, "half_width", f.half_width, "noise");
  f.sigma = get_double(j, "sigma", f.sigma, "noise");
  f.validate();
  return f;
}

SignalStructure parse_monitoring(const Json& j, std::size_t n) {
  const auto kind = parse_monitoring_kind(get_string(j, "kind", "", "monitoring"));
  const NoiseFamily noise = j.contains("noise") ? parse_noise(j.at("noise")) : NoiseFamily{};
  const double eps0 = get_double(j, "eps0", 0.05, "monitoring");
  const double eps1 = get_double(j, "eps1", 0.05, "monitoring");
  std::vector<std::size_t> pi = SignalStructure::cyclic(n);
  if (j.contains("neighbor")) {
    pi.clear();
    for (const auto& v : j.at("neighbor")) {
      if (!non_negative_int(v)) throw ConfigError("monitoring.neighbor must hold agent indices");
      pi.push_back(v.get<std::size_t>());
    }
  }
  SignalStructure ss;
  switch (kind) {
    case MonitoringKind::Perfect: ss = SignalStructure::perfect(n); break;
    case MonitoringKind::DeterministicPublicSum: ss = SignalStructure::deterministic_public_sum(n); break;
    case MonitoringKind::NoisyPublicSum: ss = SignalStructure::noisy_public_sum(n, noise, eps0, eps1); break;
    case MonitoringKind::PrivateNeighbor: ss = SignalStructure::private_neighbor(pi, noise, eps0, eps1); break;
    case MonitoringKind::DeterministicPrivateNeighbor:
      ss = SignalStructure::deterministic_private_neighbor(pi);
      break;
  }
  ss.validate();
  return ss;
}

Json monitoring_to_json(const SignalStructure& ss) {
  Json j{{"kind", monitoring_kind_name(ss.kind)}};
  if (ss.private_kind()) j["neighbor"] = ss.neighbor;
  if (ss.noisy()) {
    j["eps0"] = ss.eps0;
    j["eps1"] = ss.eps1;
    j["noise"] = Json{{"shape", ss.noise.shape == NoiseFamily::Shape::Triangular ? "triangular"
                                                                                : "truncated_gaussian"},
                      {"half_width", ss.noise.half_width},
                      {"sigma", ss.noise.sigma}};
  }
  return j;
}

Profile StrategySpec::build(const GameParams& g, const SignalStructure& ss) const {
  const std::size_t n = g.n_agents;
  if (ss.n_agents != n) throw ConfigError("monitoring and game disagree on the number of agents");
  auto xs = [&] {
    if (x.size() == 1) return std::vector<double>(n, x[0]);
    if (x.size() != n) throw ConfigError("strategy.x needs one value or one per agent");
    return x;
  };
  const double e0 = ss.noisy() ? ss.eps0 : 0.0;
  const double e1 = ss.noisy() ? ss.eps1 : 0.0;
  switch (kind) {
    case MachineKind::Constant: return constant_profile(n, constant);
    case MachineKind::Grim: return grim_profile(n);
    case MachineKind::ProportionalResponse: {
      auto pi = ss.private_kind() ? ss.neighbor : SignalStructure::cyclic(n);
      return proportional_response_profile(g, xs(), pi, e0, e1, check_bounds);
    }
    case MachineKind::PublicProportional:
      return public_proportional_profile(g, xs(), e0, e1, calibration, check_bounds);
    case MachineKind::Atonement: return atonement_profile(g);
    case MachineKind::BeliefBased: return belief_based_profile(g, rho, alpha);
  }
  throw ConfigError("unhandled strategy kind");
}

std::string StrategySpec::label() const {
  std::string s(machine_kind_name(kind));
  if (kind == MachineKind::ProportionalResponse || kind == MachineKind::PublicProportional) {
    s += "(x=";
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "/" : "") + format_double(x[i]);
    s += ")";
  }
  if (kind == MachineKind::Constant) s += "(" + format_double(constant) + ")";
  if (kind == MachineKind::BeliefBased) s += "(rho=" + format_double(rho) + ")";
  return s;
}

StrategySpec parse_strategy(const Json& j) {
  StrategySpec s;
  s.kind = parse_machine_kind(get_string(j, "kind", "", "strategy"));
  if (j.contains("x")) s.x = get_doubles(j.at("x"), "strategy.x");
  if (j.contains("alpha")) s.alpha = get_double(j, "alpha", "strategy");
  s.rho = get_double(j, "rho", 0.0, "strategy");
  s.constant = get_double(j, "constant", 0.0, "strategy");
  const std::string cal = get_string(j, "calibration", "printed", "strategy");
  if (cal == "printed") s.calibration = Calibration::Printed;
  else if (cal == "recursive") s.calibration = Calibration::Recursive;
  else throw ConfigError("unknown calibration '" + cal + "'");
  s.check_bounds = get_bool(j, "check_bounds", true, "strategy");
  const bool proportional =
      s.kind == MachineKind::ProportionalResponse || s.kind == MachineKind::PublicProportional;
  if (proportional && s.x.empty()) throw ConfigError("strategy.x is required for " + std::string(machine_kind_name(s.kind)));
  return s;
}

Json strategy_to_json(const StrategySpec& s) {
  Json j{{"kind", machine_kind_name(s.kind)}};
  if (!s.x.empty()) j["x"] = s.x;
  if (s.alpha) j["alpha"] = *s.alpha;
  if (s.kind == MachineKind::BeliefBased) j["rho"] = s.rho;
  if (s.kind == MachineKind::Constant) j["constant"] = s.constant;
  if (s.kind == MachineKind::PublicProportional)
    j["calibration"] = s.calibration == Calibration::Printed ? "printed" : "recursive";
  if (!s.check_bounds) j["check_bounds"] = false;
  return j;
}

ValueQuery CaseSpec::query(RandomSeed seed, unsigned jobs) const {
  ValueQuery q;
  q.profile = strategy.build(game, monitoring);
  q.params = game;
  q.structure = monitoring;
  q.horizon = horizon;
  q.method = method;
  q.n_reps = n_reps;
  q.seed = seed;
  q.jobs = jobs;
  return q;
}

CaseSpec parse_case(const Json& j, const Json& defaults) {
  Json merged = defaults.is_object() ? defaults : Json::object();
  if (!j.is_object()) throw ConfigError("a case must be an object");
  merged.merge_patch(j);
  CaseSpec c;
  c.name = get_string(merged, "name", "", "case");
  c.game = parse_game(require(merged, "game", "case"));
  c.monitoring = parse_monitoring(require(merged, "monitoring", "case"), c.game.n_agents);
  c.strategy = parse_strategy(require(merged, "strategy", "case"));
  c.method = parse_value_method(get_string(merged, "method", "analytic", "case"));
  c.n_reps = get_size(merged, "n_reps", c.n_reps, "case");
  c.horizon = get_size(merged, "horizon", 0, "case");
  if (merged.contains("expect")) c.expect = merged.at("expect");
  if (c.name.empty()) c.name = c.strategy.label();
  return c;
}

PayoffMatrix parse_payoff_matrix(const Json& j, const std::string& where) {
  const auto rows = get_matrix(j, where);
  std::vector<double> table;
  for (const auto& r : rows) table.insert(table.end(), r.begin(), r.end());
  return PayoffMatrix(rows.size(), rows.front().size(), std::move(table));
}

Mechanism parse_mechanism(const Json& j, const std::string& where) {
  Mechanism m;
  m.map = get_matrix(j, where);
  m.n_consequences = m.map.front().size();
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return m;
}

ContractorScenario parse_contractor(const Json& j) {
  const std::string w = "scenario";
  ContractorScenario sc;
  for (const auto& c : require(j, "contracts", w)) sc.contracts.push_back(c.get<std::string>());
  sc.profit = get_doubles(require(j, "profit", w), w + ".profit");
  sc.outside_option = get_size(j, "outside_option", 0, w);
  sc.prior = get_doubles(require(j, "prior", w), w + ".prior");
  sc.customer = get_matrix(require(j, "customer", w), w + ".customer");
  if (j.contains("effort_grid")) sc.effort_grid = get_doubles(j.at("effort_grid"), w + ".effort_grid");
  try {
    sc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return sc;
}

std::vector<Lottery> parse_target(const Json& j, const ContractorScenario& sc) {
  // Either one lottery per state, or a contract name per state.
  if (!j.is_array() || j.size() != sc.n_states())
    throw ConfigError("target needs one entry per state");
  std::vector<Lottery> out;
  for (const auto& e : j) {
    if (e.is_string()) {
      const auto name = e.get<std::string>();
      std::size_t idx = sc.n_contracts();
      for (std::size_t c = 0; c < sc.n_contracts(); ++c)
        if (sc.contracts[c] == name) idx = c;
      if (idx == sc.n_contracts()) throw ConfigError("unknown contract '" + name + "' in target");
      out.push_back(point_mass(sc.n_contracts(), idx));
    } else {
      auto l = get_doubles(e, "target");
      if (l.size() != sc.n_contracts() || !is_valid_lottery(l, 1e-9))
        throw ConfigError("target lottery must be a distribution over the contracts");
      out.push_back(std::move(l));
    }
  }
  return out;
}

Json verification_to_json(const VerificationReport& r) {
  Json j{{"feasible", r.feasible},
         {"worst_gain", r.worst_gain},
         {"worst_gain_std_error", r.worst_gain_std_error},
         {"worst_agent", r.worst_agent},
         {"worst_action", r.worst_action},
         {"worst_probe", r.worst_probe},
         {"residual", r.residual},
         {"value", r.value},
         {"value_std_error", r.value_std_error},
         {"horizon", r.horizon},
         {"truncation_bound", r.truncation_bound},
         {"n_probes", r.n_probes},
         {"n_evaluations", r.n_evaluations},
         {"tol", r.tol},
         {"method", value_method_name(r.method)}};
  if (r.flags) j["flags"] = flags_to_json(*r.flags);
  return j;
}

Json flags_to_json(const ClassifierFlags& f) {
  return Json{{"ppe", f.ppe},
              {"ppe_public", f.ppe_public},
              {"info_subset", f.info_subset},
              {"belief_free", f.belief_free},
              {"atonement", f.atonement},
              {"reneg_proof", f.reneg_proof},
              {"stage_nash", f.stage_nash}};
}

Json fragility_to_json(const FragilityResult& r) {
  return Json{{"n_draws", r.n_draws},
              {"interior_br_frequency", r.interior_br_frequency},
              {"br_state_dependence_frequency", r.br_state_dependence_frequency},
              {"mean_ic_violation", r.mean_ic_violation},
              {"analytic_ic_violation", r.analytic_ic_violation},
              {"population_ic_violation", r.population_ic_violation},
              {"non_stage_nash_ic_frequency", r.non_stage_nash_ic_frequency},
              {"action_lo", r.action_lo},
              {"action_hi", r.action_hi},
              {"kappa_bar", r.kappa_bar}};
}

Json contractor_report_to_json(const ContractorReport& r) {
  return Json{{"reservation_utility", r.reservation_utility},
              {"target_utility", r.target_utility},
              {"induced_utility", r.induced_utility},
              {"max_profit", r.max_profit},
              {"sender_payoff_spread", r.sender_payoff_spread},
              {"best_outside_payoff", r.best_outside_payoff},
              {"sender_ic", r.sender_ic},
              {"customer_ok", r.customer_ok}};
}

Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace purify
