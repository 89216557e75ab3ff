#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "purify/mechanism.hpp"

namespace purify {

namespace {

constexpr double kTol = 1e-12;

std::string below_message(double target, double reservation) {
  std::ostringstream os;
  os.precision(17);
  os << "target customer utility " << target << " is below the reservation utility u*_R = "
     << reservation;
  return os.str();
}

double lottery_profit(const ContractorScenario& sc, std::span<const double> l) {
  double acc = 0.0;
  for (std::size_t c = 0; c < l.size(); ++c) acc += l[c] * sc.profit[c];
  return acc;
}

// Lottery over the pool with expected profit m2: mixes the two pool members
// whose profits bracket m2. Below the pool's range the cheapest member is used.
Lottery profit_lottery(const ContractorScenario& sc, std::span<const std::size_t> pool, double m2) {
  std::size_t lo = pool.front();
  std::size_t hi = pool.front();
  double lo_p = -std::numeric_limits<double>::infinity();
  double hi_p = std::numeric_limits<double>::infinity();
  for (std::size_t c : pool) {
    const double p = sc.profit[c];
    if (p <= m2 && p > lo_p) lo_p = p, lo = c;
    if (p >= m2 && p < hi_p) hi_p = p, hi = c;
  }
  Lottery l(sc.n_contracts(), 0.0);
  if (!std::isfinite(lo_p)) {
    l[hi] = 1.0;
  } else if (!std::isfinite(hi_p)) {
    l[lo] = 1.0;
  } else if (hi_p - lo_p <= 0.0) {
    l[lo] = 1.0;
  } else {
    const double w = (m2 - lo_p) / (hi_p - lo_p);
    l[hi] += w;
    l[lo] += 1.0 - w;
  }
  return l;
}

}  // namespace

void ContractorScenario::validate() const {
  if (contracts.empty()) throw ConfigError("contractor scenario needs contracts");
  if (profit.size() != contracts.size()) throw ConfigError("one profit per contract required");
  for (double p : profit)
    if (!(p >= 0.0)) throw ConfigError("contract profits must be non-negative");
  if (outside_option >= contracts.size() || profit[outside_option] != 0.0)
    throw ConfigError("outside option must be a contract with zero profit");
  if (prior.empty() || !is_valid_lottery(prior)) throw ConfigError("prior must sum to 1");
  if (customer.size() != prior.size()) throw ConfigError("one customer value row per state");
  for (const auto& row : customer)
    if (row.size() != contracts.size()) throw ConfigError("customer values need one entry per contract");
  if (effort_grid.empty()) throw ConfigError("effort grid must be non-empty");
  for (double e : effort_grid)
    if (!(e >= 0.0)) throw ConfigError("effort levels must be non-negative");
}

double reservation_utility(const ContractorScenario& sc) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < sc.n_contracts(); ++c) {
    double v = 0.0;
    for (std::size_t s = 0; s < sc.n_states(); ++s) v += sc.prior[s] * sc.customer[s][c];
    best = std::max(best, v);
  }
  return best;
}

double target_customer_utility(const ContractorScenario& sc, std::span<const Lottery> target) {
  if (target.size() != sc.n_states()) throw DomainError("target needs one lottery per state");
  double v = 0.0;
  for (std::size_t s = 0; s < sc.n_states(); ++s) {
    if (target[s].size() != sc.n_contracts() || !is_valid_lottery(target[s]))
      throw DomainError("target lottery is not a distribution over contracts");
    for (std::size_t c = 0; c < sc.n_contracts(); ++c)
      v += sc.prior[s] * target[s][c] * sc.customer[s][c];
  }
  return v;
}

BelowReservation::BelowReservation(double t, double r)
    : DomainError(below_message(t, r)), target(t), reservation(r) {}

double contractor_sender_payoff(const ContractorScenario& sc, std::span<const double> outcome,
                                double effort) {
  return lottery_profit(sc, outcome) - effort;
}

ContractorEquilibrium contractor_equilibrium(const ContractorScenario& sc,
                                             std::span<const Lottery> target) {
  sc.validate();
  ContractorEquilibrium eq;
  ContractorReport& rep = eq.report;
  rep.reservation_utility = reservation_utility(sc);
  rep.target_utility = target_customer_utility(sc, target);
  if (rep.target_utility < rep.reservation_utility - kTol)
    throw BelowReservation(rep.target_utility, rep.reservation_utility);

  const std::size_t nc = sc.n_contracts();
  std::vector<bool> in_support(nc, false);
  for (const auto& l : target)
    for (std::size_t c = 0; c < nc; ++c)
      if (l[c] > 0.0) in_support[c] = true;
  for (std::size_t c = 0; c < nc; ++c)
    if (in_support[c]) eq.support.push_back(c);
  rep.max_profit = 0.0;
  for (std::size_t c : eq.support) rep.max_profit = std::max(rep.max_profit, sc.profit[c]);

  // Effort levels: the grid plus every supported profit level, capped at pi-bar.
  std::vector<double> efforts;
  for (double e : sc.effort_grid)
    if (e <= rep.max_profit) efforts.push_back(e);
  for (std::size_t c : eq.support) efforts.push_back(sc.profit[c]);
  std::sort(efforts.begin(), efforts.end());
  efforts.erase(std::unique(efforts.begin(), efforts.end()), efforts.end());

  // The outside option joins the pool only for efforts below every supported
  // profit, where no lottery over A_c can match m2.
  std::vector<std::size_t> pool = eq.support;
  if (!in_support[sc.outside_option]) pool.push_back(sc.outside_option);

  for (std::size_t m1 = 0; m1 < nc; ++m1) {
    for (double m2 : efforts) {
      eq.messages.push_back({m1, m2});
      if (in_support[m1] && sc.profit[m1] == m2) {
        eq.mechanism.push_back(point_mass(nc, m1));
        continue;
      }
      double min_supported = std::numeric_limits<double>::infinity();
      for (std::size_t c : eq.support) min_supported = std::min(min_supported, sc.profit[c]);
      if (m2 >= min_supported)
        eq.mechanism.push_back(profit_lottery(sc, eq.support, m2));
      else
        eq.mechanism.push_back(profit_lottery(sc, pool, m2));
    }
  }

  // Each state mixes over the revealing messages (c, pi(c)).
  const std::size_t nm = eq.messages.size();
  auto revealing = [&](std::size_t c) {
    for (std::size_t m = 0; m < nm; ++m)
      if (eq.messages[m].advised == c && eq.messages[m].effort == sc.profit[c]) return m;
    throw DomainError("revealing message missing");
  };
  for (std::size_t s = 0; s < sc.n_states(); ++s) {
    Lottery l(nm, 0.0);
    for (std::size_t c = 0; c < nc; ++c)
      if (target[s][c] > 0.0) l[revealing(c)] += target[s][c];
    eq.strategy.push_back(std::move(l));
  }

  double pmin = std::numeric_limits<double>::infinity();
  double pmax = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < nm; ++m) {
    const double p = contractor_sender_payoff(sc, eq.mechanism[m], eq.messages[m].effort);
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
  }
  rep.sender_payoff_spread = pmax - pmin;

  // Off-menu probes: effort above pi-bar, answered with the outside option.
  rep.best_outside_payoff = -std::numeric_limits<double>::infinity();
  std::vector<double> probes;
  for (double e : sc.effort_grid)
    if (e > rep.max_profit) probes.push_back(e);
  probes.push_back(rep.max_profit + 1.0);
  const Lottery walk = point_mass(nc, sc.outside_option);
  for (double e : probes)
    rep.best_outside_payoff = std::max(rep.best_outside_payoff, contractor_sender_payoff(sc, walk, e));
  rep.sender_ic = rep.sender_payoff_spread <= kTol && rep.best_outside_payoff <= pmin + kTol;

  double induced = 0.0;
  for (std::size_t s = 0; s < sc.n_states(); ++s)
    for (std::size_t m = 0; m < nm; ++m) {
      const double pm = eq.strategy[s][m];
      if (pm == 0.0) continue;
      for (std::size_t c = 0; c < nc; ++c)
        induced += sc.prior[s] * pm * eq.mechanism[m][c] * sc.customer[s][c];
    }
  rep.induced_utility = induced;
  rep.customer_ok = std::abs(induced - rep.target_utility) <= 1e-12 &&
                    induced >= rep.reservation_utility - kTol;
  return eq;
}

}  // namespace purify
