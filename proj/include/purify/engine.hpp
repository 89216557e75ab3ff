#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "purify/game.hpp"
#include "purify/machines.hpp"
#include "purify/monitoring.hpp"
#include "purify/rng.hpp"

namespace purify {

enum class ValueMethod { Analytic, MonteCarlo };

std::string_view value_method_name(ValueMethod m);
ValueMethod parse_value_method(std::string_view name);

// Forces agent's action in a past period.
struct ActionOverride {
  std::size_t period = 0;
  std::size_t agent = 0;
  double action = 0.0;
};

// Forces the monitored value seen by one agent (or by everyone for public
// signals when agent is empty) in a past period.
struct SignalOverride {
  std::size_t period = 0;
  std::optional<std::size_t> agent;
  double value = 0.0;
};

// A probe history of `length` periods. Periods without overrides follow the
// machines, with randomizing machines taking their prescription and noisy
// signals replaced by their means.
struct History {
  std::size_t length = 0;
  std::vector<ActionOverride> actions;
  std::vector<SignalOverride> signals;
  std::string label = "on-path";
};

struct ValueQuery {
  Profile profile;
  GameParams params;
  SignalStructure structure;
  std::size_t horizon = 0;  // 0 picks the default truncation
  ValueMethod method = ValueMethod::Analytic;
  std::size_t n_reps = 10000;
  RandomSeed seed{};
  unsigned jobs = 1;
  std::vector<double> kappas;  // realized valuations; empty means kappa_bar for all

  void validate() const;
  std::size_t resolved_horizon() const;
  double payoff_range() const;
  double truncation_bound() const;
  std::vector<double> valuations() const;
  // Exact propagation is available: linear machines, or deterministic signals.
  bool analytic_supported() const;
};

using JointState = std::vector<MachineState>;

JointState initial_states(const Profile& p);
JointState step_states(const Profile& p, const JointState& s, std::span<const double> actions,
                       const std::vector<AgentSignal>& sig);
// Deterministic prescriptions of every machine.
std::vector<double> prescriptions(const Profile& p, const JointState& s);

// State of every machine after replaying a probe history.
struct HistoryState {
  JointState states;
  std::vector<std::vector<double>> actions;           // per period
  std::vector<std::vector<AgentSignal>> signals;      // per period
};

HistoryState replay_history(const ValueQuery& q, const History& h);

struct ValueResult {
  std::vector<double> value;      // per agent, normalized by (1 - delta)
  std::vector<double> std_error;  // zero for analytic
  std::size_t horizon = 0;
  double truncation_bound = 0.0;
};

// Continuation value from `start` onward, beginning at the joint state. When
// `first` is set, that agent plays the given action in the first period.
struct FirstAction {
  std::size_t agent;
  double action;
};
ValueResult continuation_value(const ValueQuery& q, const JointState& start,
                               std::optional<FirstAction> first = std::nullopt);

ValueResult value(const ValueQuery& q);

struct GainResult {
  double gain = 0.0;
  double std_error = 0.0;
  double deviate_value = 0.0;
  double conform_value = 0.0;
  double prescribed = 0.0;  // deterministic prescription at the probe
};

// Value of playing a' at the end of h then reverting, minus conformity.
GainResult one_shot_deviation_gain(const ValueQuery& q, std::size_t agent, const History& h,
                                   double alternative);
// Same, from an explicit joint state.
GainResult deviation_gain_from(const ValueQuery& q, const JointState& start, std::size_t agent,
                               double alternative);
// Value of playing `action` now and reverting (no comparison).
double action_value(const ValueQuery& q, const JointState& start, std::size_t agent, double action);

struct TracePeriod {
  std::size_t t = 0;
  std::vector<double> actions;
  std::vector<double> latent;  // latent uniforms; NaN when unused
  std::vector<AgentSignal> signals;
  std::vector<double> payoffs;
  JointState states;  // states at the start of the period
};

struct Trace {
  std::vector<TracePeriod> periods;
  std::vector<double> discounted_value;  // per agent, (1 - delta) sum delta^t payoff
};

// Samples a path. Overrides from `h` apply where their period falls inside
// the simulated range.
Trace simulate(const ValueQuery& q, std::size_t periods, const History& h = {},
               RandomSeed seed = {});

void write_trace_csv(std::ostream& os, const Trace& trace, const SignalStructure& ss);
inline constexpr const char* kTraceCsvHeader =
    "t,agent,action,latent,own_action,public_signal,private_signal,payoff,punished,raw,expected_total";

}  // namespace purify
