#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "purify/prefs.hpp"

namespace purify {

// Public-goods stage game: agent i earns kappa_i * sum_j a_j - a_i.
struct GameParams {
  std::size_t n_agents = 2;
  double delta = 0.5;
  ShockDistribution kappa = ShockDistribution::point(0.75);

  double kappa_bar() const { return kappa.mean(); }
  void validate() const;
  friend bool operator==(const GameParams&, const GameParams&) = default;
};

double stage_payoff(double kappa, std::size_t agent, std::span<const double> actions);
std::vector<double> stage_payoff(std::span<const double> kappas, std::span<const double> actions);
// Same kappa for every agent.
std::vector<double> stage_payoff(const GameParams& params, std::span<const double> actions);

enum class ResponseScope { Neighbor, Public };

// alpha_2 = (1 - kappa) / (delta kappa); alpha_N = (1 - kappa) / (delta (N - 1) kappa)
double proportionality_constant(double kappa, double delta, std::size_t n, ResponseScope scope);
double proportionality_constant(const GameParams& params, ResponseScope scope);

// (1 - kappa) / ((N - 1) kappa)
double grim_trigger_threshold(double kappa, std::size_t n);
// (1 - kappa) / kappa * N / (N - 1)
double public_proportional_threshold(double kappa, std::size_t n);
// (1 - kappa) / kappa
double atonement_threshold(double kappa);

// Smallest T with delta^T * range < bound.
std::size_t default_horizon(double delta, double payoff_range, double bound = 1e-10);
// max - min of a stage payoff over [0,1]^N for valuations up to kappa_max.
double stage_payoff_range(double kappa_max, std::size_t n);

}  // namespace purify
