#include "purify/game.hpp"

#include <cmath>

namespace purify {

void GameParams::validate() const {
  if (n_agents < 2) throw ConfigError("the public-goods game needs N >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
  kappa.validate();
}

double stage_payoff(double kappa, std::size_t agent, std::span<const double> actions) {
  double total = 0.0;
  for (double a : actions) {
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("contribution outside [0, 1]");
    total += a;
  }
  return kappa * total - actions[agent];
}

std::vector<double> stage_payoff(std::span<const double> kappas, std::span<const double> actions) {
  if (kappas.size() != actions.size()) throw DomainError("need one kappa per agent");
  std::vector<double> out(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) out[i] = stage_payoff(kappas[i], i, actions);
  return out;
}

std::vector<double> stage_payoff(const GameParams& params, std::span<const double> actions) {
  std::vector<double> k(actions.size(), params.kappa_bar());
  return stage_payoff(k, actions);
}

double proportionality_constant(double kappa, double delta, std::size_t n, ResponseScope scope) {
  if (scope == ResponseScope::Neighbor) return (1.0 - kappa) / (delta * kappa);
  return (1.0 - kappa) / (delta * static_cast<double>(n - 1) * kappa);
}

double proportionality_constant(const GameParams& params, ResponseScope scope) {
  return proportionality_constant(params.kappa_bar(), params.delta, params.n_agents, scope);
}

double grim_trigger_threshold(double kappa, std::size_t n) {
  return (1.0 - kappa) / (static_cast<double>(n - 1) * kappa);
}

double public_proportional_threshold(double kappa, std::size_t n) {
  const double nn = static_cast<double>(n);
  return (1.0 - kappa) / kappa * nn / (nn - 1.0);
}

double atonement_threshold(double kappa) { return (1.0 - kappa) / kappa; }

std::size_t default_horizon(double delta, double payoff_range, double bound) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
  if (payoff_range <= bound) return 1;
  auto t = static_cast<std::size_t>(std::ceil(std::log(bound / payoff_range) / std::log(delta)));
  while (std::pow(delta, static_cast<double>(t)) * payoff_range >= bound) ++t;
  return std::max<std::size_t>(t, 1);
}

double stage_payoff_range(double kappa_max, std::size_t n) {
  // best: everyone else gives 1, i gives 0; worst: i alone gives 1
  const double nn = static_cast<double>(n);
  return kappa_max * (nn - 1.0) - (kappa_max - 1.0);
}

}  // namespace purify
