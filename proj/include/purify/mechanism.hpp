#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "purify/prefs.hpp"
#include "purify/rng.hpp"

namespace purify {

// Probability vector over a finite index set.
using Lottery = std::vector<double>;

Lottery point_mass(std::size_t size, std::size_t index);
bool is_valid_lottery(std::span<const double> p, double tol = 1e-12);
double total_variation(std::span<const double> p, std::span<const double> q);

// Agent utility u0(a, c) over a finite action set A and consequence set C,
// stored row-major (row = action).
class PayoffMatrix {
 public:
  PayoffMatrix(std::size_t n_actions, std::size_t n_consequences, std::vector<double> table);
  // Views a finite UtilityFn over A x C (row-major) as a matrix.
  PayoffMatrix(const UtilityFn& u, std::size_t n_actions, std::size_t n_consequences);

  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_consequences() const { return n_consequences_; }
  double at(std::size_t a, std::size_t c) const { return table_[a * n_consequences_ + c]; }
  std::span<const double> row(std::size_t a) const {
    return {table_.data() + a * n_consequences_, n_consequences_};
  }
  const std::vector<double>& table() const { return table_; }
  UtilityFn as_utility() const;

 private:
  std::size_t n_actions_;
  std::size_t n_consequences_;
  std::vector<double> table_;
};

// Consequence map c-hat: A -> Delta(C).
struct Mechanism {
  std::size_t n_consequences = 0;
  std::vector<Lottery> map;  // one lottery per action

  std::size_t n_actions() const { return map.size(); }
  void validate() const;
  // Expected u0(a, c-hat(a)).
  double expected_utility(const PayoffMatrix& u, std::size_t action) const;
  // Pushforward of an action lottery.
  Lottery pushforward(std::span<const double> action_lottery) const;
};

// a-hat: S x Omega -> Delta(A). A public strategy has a single type.
struct StrategyTable {
  std::size_t n_states = 0;
  std::size_t n_types = 1;
  std::size_t n_actions = 0;
  std::vector<Lottery> map;  // index = state * n_types + type

  static StrategyTable pure(std::size_t n_actions, std::vector<std::size_t> action_by_state);
  static StrategyTable constant(std::size_t n_states, Lottery lottery);

  const Lottery& at(std::size_t state, std::size_t type) const {
    return map[state * n_types + type];
  }
  void validate() const;
};

// max_a min_c u0(a, c)
double maxmin_value(const PayoffMatrix& u);
std::vector<std::size_t> undominated_actions(const PayoffMatrix& u, double tol = 1e-12);

struct IndifferenceMechanism {
  Mechanism mechanism;
  double value = 0.0;  // u*
  std::vector<std::size_t> undominated;
  std::vector<std::size_t> row_min;  // c_lower(a)
  std::vector<std::size_t> row_max;  // c_upper(a)
};

// Makes every undominated action worth exactly u*; dominated actions receive
// their row-minimizing consequence.
IndifferenceMechanism build_indifference_mechanism(const PayoffMatrix& u);

struct ICViolation {
  std::size_t state;
  std::size_t type;
  std::size_t action;
  double gap;
};

struct ICReport {
  bool feasible = true;
  double worst_gap = 0.0;
  std::vector<ICViolation> violating;
};

// utility_by_type has one matrix per type (size 1 for public preferences).
ICReport check_incentive_compat(const StrategyTable& strategy, const Mechanism& mech,
                                std::span<const PayoffMatrix> utility_by_type,
                                double tol = 1e-9);
ICReport check_incentive_compat(const StrategyTable& strategy, const Mechanism& mech,
                                const PayoffMatrix& utility, double tol = 1e-9);

bool informativeness(const StrategyTable& strategy, double tol = 1e-12);

// The convex outcome set Gamma generated by a mechanism.
struct Generator {
  Lottery action_lottery;
  Lottery consequence_lottery;  // pushforward of action_lottery
  std::vector<double> joint;    // p(a) * c-hat(a)(c), row-major over A x C
};

class OutcomeSet {
 public:
  OutcomeSet(std::size_t n_actions, std::size_t n_consequences);
  // One generator per pure action; these are the extreme points of Gamma.
  static OutcomeSet from_mechanism(const Mechanism& mech);
  static OutcomeSet from_mechanism(const Mechanism& mech, std::span<const std::size_t> actions);

  void add(const Mechanism& mech, Lottery action_lottery);
  std::size_t size() const { return generators_.size(); }
  bool empty() const { return generators_.empty(); }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_consequences() const { return n_consequences_; }
  const std::vector<Generator>& generators() const { return generators_; }
  // Generator joints stacked row-major, one row per generator.
  const std::vector<double>& stacked() const { return stacked_; }

  // Recomputes every pushforward and compares with the stored marginal.
  bool consistent(const Mechanism& mech, double tol = 1e-12) const;

 private:
  std::size_t n_actions_;
  std::size_t n_consequences_;
  std::vector<Generator> generators_;
  std::vector<double> stacked_;
};

// Expected utility of every generator.
std::vector<double> generator_values(std::span<const double> utility_table,
                                     const OutcomeSet& gamma);
// f_Gamma(u) = max over Gamma of the expected utility.
double value_fgamma(std::span<const double> utility_table, const OutcomeSet& gamma);
double value_fgamma(const PayoffMatrix& u, const OutcomeSet& gamma);
std::vector<std::size_t> argmax_outcomes(std::span<const double> utility_table,
                                         const OutcomeSet& gamma, double tie_tol = 1e-12);

// Source of utilities for the tie-frequency experiment.
struct PointMassUtility {
  UtilityFn utility;
};
using UtilitySampler = std::variant<PrevalentFamily, PointMassUtility>;

struct TieFrequencyResult {
  std::size_t n_samples = 0;
  std::size_t n_ties = 0;
  double frequency = 0.0;
};

TieFrequencyResult tie_frequency_experiment(const UtilitySampler& sampler,
                                            const OutcomeSet& gamma, std::size_t n_samples,
                                            double tie_tol, RandomSeed rng,
                                            unsigned jobs = 1);

enum class PrevalentSide { Actions, Consequences };

// u(a, c) = v1(a) + v0(c)
PayoffMatrix compose_semi_prevalent(std::span<const double> v_actions,
                                    std::span<const double> v_consequences);

// False iff the strategy is an IC-feasible witness against prevalence: an
// informative strategy (prevalence over actions) or a strategy whose induced
// consequence map c-hat o a-hat varies with the state (prevalence over
// consequences).
bool semi_prevalent_check(const PayoffMatrix& u, PrevalentSide side, const Mechanism& mech,
                          const StrategyTable& strategy, double ic_tol = 1e-9,
                          double info_tol = 1e-12);

// ---------------------------------------------------------------------------
// Contractor persuasion scenario.

struct ContractorScenario {
  std::vector<std::string> contracts;
  std::vector<double> profit;                   // pi(c) >= 0
  std::size_t outside_option = 0;               // index with pi = 0
  std::vector<double> prior;                    // mu over states
  std::vector<std::vector<double>> customer;    // customer[s][c] = u_R(c | s)
  std::vector<double> effort_grid{0.0};         // admissible a2 levels

  std::size_t n_states() const { return prior.size(); }
  std::size_t n_contracts() const { return contracts.size(); }
  void validate() const;
};

// u_R* = max_c sum_s mu(s) u_R(c|s)
double reservation_utility(const ContractorScenario& sc);
double target_customer_utility(const ContractorScenario& sc,
                               std::span<const Lottery> target);

struct ContractorMessage {
  std::size_t advised;  // m1
  double effort;        // m2
};

struct ContractorReport {
  double reservation_utility = 0.0;
  double target_utility = 0.0;
  double induced_utility = 0.0;
  double max_profit = 0.0;             // pi-bar over the target's support
  double sender_payoff_spread = 0.0;   // max - min payoff over M(A_c)
  double best_outside_payoff = 0.0;    // best payoff from a message outside M(A_c)
  bool sender_ic = false;
  bool customer_ok = false;
};

struct ContractorEquilibrium {
  std::vector<ContractorMessage> messages;       // M(A_c) on the effort grid
  std::vector<Lottery> mechanism;                // c-hat(m), over contracts
  std::vector<Lottery> strategy;                 // per state, over messages
  std::vector<std::size_t> support;              // A_c
  ContractorReport report;
};

class BelowReservation : public DomainError {
 public:
  BelowReservation(double target, double reservation);
  double target;
  double reservation;
};

ContractorEquilibrium contractor_equilibrium(const ContractorScenario& sc,
                                             std::span<const Lottery> target);
// Profit minus effort for a message (m1, m2), with off-menu effort allowed.
double contractor_sender_payoff(const ContractorScenario& sc, std::span<const double> outcome,
                                double effort);

}  // namespace purify
