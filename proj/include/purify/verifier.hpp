#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "purify/engine.hpp"

namespace purify {

// 21 uniform points on [0, 1] (0 and 1 included).
std::vector<double> default_deviation_grid();

struct ProbeOptions {
  std::size_t depth = 3;
  std::vector<double> action_alphabet{0.0, 0.25, 0.5, 0.75, 1.0};
  bool signal_probes = true;  // noisy kinds only
};

// On-path histories of length 0..depth plus every single-deviation history
// (one action override, or one signal override under noise) up to depth.
std::vector<History> probe_histories(const ValueQuery& q, const ProbeOptions& opt = {});
// Signal values probed for a noisy monitored quantity with on-path mean m.
std::vector<double> signal_probe_values(const SignalStructure& ss, double mean);

struct ClassifierFlags {
  bool ppe = false;         // adapted to the common-knowledge partition
  bool ppe_public = false;  // adapted to the public signal path alone
  bool info_subset = false;
  bool belief_free = false;
  bool atonement = false;
  bool reneg_proof = false;
  bool stage_nash = false;
};

struct VerificationReport {
  bool feasible = false;
  double worst_gain = 0.0;
  double worst_gain_std_error = 0.0;
  std::size_t worst_agent = 0;
  double worst_action = 0.0;
  std::string worst_probe;
  double residual = 0.0;  // max |gain| over grid x probes
  std::vector<double> value;
  std::vector<double> value_std_error;
  std::size_t horizon = 0;
  double truncation_bound = 0.0;
  std::size_t n_probes = 0;
  std::size_t n_evaluations = 0;
  double tol = 0.0;
  ValueMethod method = ValueMethod::Analytic;
  std::optional<ClassifierFlags> flags;
};

VerificationReport verify_equilibrium(const ValueQuery& q, const std::vector<double>& grid,
                                      double tol = 1e-9, const ProbeOptions& probes = {});

// Bisection for the smallest delta in [lo, hi] at which the builder's profile
// verifies. Assumes feasibility is monotone in delta.
struct CriticalDelta {
  double delta = 0.0;
  bool bracketed = false;  // infeasible at lo and feasible at hi
  std::size_t iterations = 0;
};
CriticalDelta measured_critical_delta(const std::function<ValueQuery(double)>& build, double lo,
                                      double hi, double tol = 1e-9, double resolution = 1e-6,
                                      const ProbeOptions& probes = {});

// --- classifiers -----------------------------------------------------------

struct ClassifierOptions {
  std::size_t depth = 3;
  std::vector<double> action_alphabet{0.0, 0.25, 0.5, 0.75, 1.0};
  double tol = 1e-9;
};

bool classify_ppe(const ValueQuery& q, const ClassifierOptions& opt = {});
bool public_path_adapted(const ValueQuery& q, const ClassifierOptions& opt = {});
bool info_subset_check(const ValueQuery& q, const ClassifierOptions& opt = {});
bool belief_free_check(const ValueQuery& q, const ClassifierOptions& opt = {},
                       const std::vector<std::size_t>& block_starts = {});
bool atonement_check(const ValueQuery& q, const ClassifierOptions& opt = {});
bool reneg_proof_check(const ValueQuery& q, const ClassifierOptions& opt = {});
bool stage_nash_check(std::span<const double> actions, const GameParams& params);
// Prescribed on-path play is stage-Nash in every probed period.
bool on_path_stage_nash(const ValueQuery& q, std::size_t periods = 4);

ClassifierFlags classify_all(const ValueQuery& q, const ClassifierOptions& opt = {});

// --- fragility ---------------------------------------------------------------

struct FragilityResult {
  std::size_t n_draws = 0;
  double interior_br_frequency = 0.0;
  double br_state_dependence_frequency = 0.0;
  double mean_ic_violation = 0.0;
  double analytic_ic_violation = 0.0;    // (1 - delta) |k/kbar - 1| (hi - lo), same draws
  double population_ic_violation = 0.0;  // same with E|k/kbar - 1| in closed form
  double non_stage_nash_ic_frequency = 0.0;
  double action_lo = 0.0;
  double action_hi = 0.0;
  double kappa_bar = 0.0;
};

// E|k / kbar - 1| for the shock distribution.
double expected_abs_relative_shock(const ShockDistribution& d);

FragilityResult fragility_experiment(const ValueQuery& q, std::size_t agent,
                                     const ShockDistribution& shocks, std::size_t n_draws,
                                     RandomSeed rng, std::size_t action_grid = 101,
                                     double tol = 1e-9);

}  // namespace purify
