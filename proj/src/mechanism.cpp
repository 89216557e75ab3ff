#include "purify/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "purify/kernels.hpp"

namespace purify {

Lottery point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw DomainError("point mass index out of range");
  Lottery p(size, 0.0);
  p[index] = 1.0;
  return p;
}

bool is_valid_lottery(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("lotteries over different supports");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

PayoffMatrix::PayoffMatrix(std::size_t n_actions, std::size_t n_consequences,
                           std::vector<double> table)
    : n_actions_(n_actions), n_consequences_(n_consequences), table_(std::move(table)) {
  if (n_actions == 0 || n_consequences == 0)
    throw DomainError("action and consequence sets must be non-empty");
  if (table_.size() != n_actions * n_consequences)
    throw ConfigError("payoff table length must be |A| * |C|");
}

PayoffMatrix::PayoffMatrix(const UtilityFn& u, std::size_t n_actions, std::size_t n_consequences)
    : PayoffMatrix(n_actions, n_consequences, u.table()) {}

UtilityFn PayoffMatrix::as_utility() const { return UtilityFn::finite(table_); }

void Mechanism::validate() const {
  if (map.empty()) throw ConfigError("mechanism has no actions");
  for (const auto& l : map) {
    if (l.size() != n_consequences) throw ConfigError("mechanism lottery has wrong support size");
    if (!is_valid_lottery(l)) throw ConfigError("mechanism lottery is not a probability vector");
  }
}

double Mechanism::expected_utility(const PayoffMatrix& u, std::size_t action) const {
  return kernels::dot(u.row(action), map[action]);
}

Lottery Mechanism::pushforward(std::span<const double> action_lottery) const {
  if (action_lottery.size() != map.size())
    throw DomainError("action lottery size does not match the mechanism");
  Lottery out(n_consequences, 0.0);
  for (std::size_t a = 0; a < map.size(); ++a) {
    const double pa = action_lottery[a];
    if (pa == 0.0) continue;
    for (std::size_t c = 0; c < n_consequences; ++c) out[c] += pa * map[a][c];
  }
  return out;
}

StrategyTable StrategyTable::pure(std::size_t n_actions, std::vector<std::size_t> action_by_state) {
  StrategyTable s;
  s.n_states = action_by_state.size();
  s.n_types = 1;
  s.n_actions = n_actions;
  for (std::size_t a : action_by_state) s.map.push_back(point_mass(n_actions, a));
  return s;
}

StrategyTable StrategyTable::constant(std::size_t n_states, Lottery lottery) {
  StrategyTable s;
  s.n_states = n_states;
  s.n_types = 1;
  s.n_actions = lottery.size();
  s.map.assign(n_states, std::move(lottery));
  return s;
}

void StrategyTable::validate() const {
  if (n_states == 0 || n_types == 0) throw ConfigError("strategy needs states and types");
  if (map.size() != n_states * n_types) throw ConfigError("strategy table has wrong length");
  for (const auto& l : map) {
    if (l.size() != n_actions) throw ConfigError("strategy lottery has wrong support size");
    if (!is_valid_lottery(l)) throw ConfigError("strategy lottery is not a probability vector");
  }
}

double maxmin_value(const PayoffMatrix& u) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < u.n_actions(); ++a) {
    const auto row = u.row(a);
    best = std::max(best, *std::min_element(row.begin(), row.end()));
  }
  return best;
}

std::vector<std::size_t> undominated_actions(const PayoffMatrix& u, double tol) {
  const double ustar = maxmin_value(u);
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < u.n_actions(); ++a) {
    if (kernels::max_value(u.row(a)) >= ustar - tol) out.push_back(a);
  }
  return out;
}

IndifferenceMechanism build_indifference_mechanism(const PayoffMatrix& u) {
  IndifferenceMechanism res;
  res.value = maxmin_value(u);
  res.undominated = undominated_actions(u);
  const std::size_t nc = u.n_consequences();
  res.mechanism.n_consequences = nc;
  res.mechanism.map.resize(u.n_actions());
  res.row_min.resize(u.n_actions());
  res.row_max.resize(u.n_actions());

  std::vector<bool> undominated(u.n_actions(), false);
  for (std::size_t a : res.undominated) undominated[a] = true;

  for (std::size_t a = 0; a < u.n_actions(); ++a) {
    const auto row = u.row(a);
    const std::size_t lo = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
    const std::size_t hi = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    res.row_min[a] = lo;
    res.row_max[a] = hi;
    Lottery l(nc, 0.0);
    const double span = row[hi] - row[lo];
    if (!undominated[a] || span <= 0.0) {
      l[lo] = 1.0;
    } else {
      // weight on c_upper so that w u(hi) + (1 - w) u(lo) = u*
      const double w = std::clamp((res.value - row[lo]) / span, 0.0, 1.0);
      l[hi] += w;
      l[lo] += 1.0 - w;
    }
    res.mechanism.map[a] = std::move(l);
  }
  return res;
}

ICReport check_incentive_compat(const StrategyTable& strategy, const Mechanism& mech,
                                std::span<const PayoffMatrix> utility_by_type, double tol) {
  if (strategy.n_actions != mech.n_actions())
    throw DomainError("strategy and mechanism use different action sets");
  if (utility_by_type.size() != 1 && utility_by_type.size() != strategy.n_types)
    throw DomainError("need one utility per type");
  ICReport rep;
  std::vector<double> value(mech.n_actions());
  for (std::size_t w = 0; w < strategy.n_types; ++w) {
    const PayoffMatrix& u = utility_by_type[utility_by_type.size() == 1 ? 0 : w];
    for (std::size_t a = 0; a < value.size(); ++a) value[a] = mech.expected_utility(u, a);
    const double best = kernels::max_value(value);
    for (std::size_t s = 0; s < strategy.n_states; ++s) {
      const Lottery& l = strategy.at(s, w);
      for (std::size_t a = 0; a < l.size(); ++a) {
        if (l[a] <= 0.0) continue;
        const double gap = best - value[a];
        rep.worst_gap = std::max(rep.worst_gap, gap);
        if (gap > tol) rep.violating.push_back({s, w, a, gap});
      }
    }
  }
  rep.feasible = rep.worst_gap <= tol;
  return rep;
}

ICReport check_incentive_compat(const StrategyTable& strategy, const Mechanism& mech,
                                const PayoffMatrix& utility, double tol) {
  return check_incentive_compat(strategy, mech, std::span<const PayoffMatrix>(&utility, 1), tol);
}

bool informativeness(const StrategyTable& strategy, double tol) {
  for (std::size_t w = 0; w < strategy.n_types; ++w) {
    const Lottery& first = strategy.at(0, w);
    for (std::size_t s = 1; s < strategy.n_states; ++s) {
      if (total_variation(first, strategy.at(s, w)) > tol) return true;
    }
  }
  return false;
}

OutcomeSet::OutcomeSet(std::size_t n_actions, std::size_t n_consequences)
    : n_actions_(n_actions), n_consequences_(n_consequences) {}

OutcomeSet OutcomeSet::from_mechanism(const Mechanism& mech) {
  OutcomeSet g(mech.n_actions(), mech.n_consequences);
  for (std::size_t a = 0; a < mech.n_actions(); ++a) g.add(mech, point_mass(mech.n_actions(), a));
  return g;
}

OutcomeSet OutcomeSet::from_mechanism(const Mechanism& mech, std::span<const std::size_t> actions) {
  OutcomeSet g(mech.n_actions(), mech.n_consequences);
  for (std::size_t a : actions) g.add(mech, point_mass(mech.n_actions(), a));
  return g;
}

void OutcomeSet::add(const Mechanism& mech, Lottery action_lottery) {
  if (mech.n_actions() != n_actions_ || mech.n_consequences != n_consequences_)
    throw DomainError("mechanism shape does not match the outcome set");
  if (!is_valid_lottery(action_lottery)) throw DomainError("generator is not a lottery");
  Generator g;
  g.consequence_lottery = mech.pushforward(action_lottery);
  g.joint.resize(n_actions_ * n_consequences_);
  for (std::size_t a = 0; a < n_actions_; ++a)
    for (std::size_t c = 0; c < n_consequences_; ++c)
      g.joint[a * n_consequences_ + c] = action_lottery[a] * mech.map[a][c];
  g.action_lottery = std::move(action_lottery);
  stacked_.insert(stacked_.end(), g.joint.begin(), g.joint.end());
  generators_.push_back(std::move(g));
}

bool OutcomeSet::consistent(const Mechanism& mech, double tol) const {
  for (const auto& g : generators_) {
    const Lottery push = mech.pushforward(g.action_lottery);
    for (std::size_t c = 0; c < push.size(); ++c)
      if (std::abs(push[c] - g.consequence_lottery[c]) > tol) return false;
  }
  return true;
}

std::vector<double> generator_values(std::span<const double> utility_table,
                                     const OutcomeSet& gamma) {
  const std::size_t cols = gamma.n_actions() * gamma.n_consequences();
  if (utility_table.size() != cols) throw DomainError("utility table does not cover A x C");
  std::vector<double> out(gamma.size());
  kernels::gemv(gamma.stacked(), gamma.size(), cols, utility_table, out);
  return out;
}

double value_fgamma(std::span<const double> utility_table, const OutcomeSet& gamma) {
  if (gamma.empty()) throw DomainError("outcome set is empty");
  const auto v = generator_values(utility_table, gamma);
  return kernels::max_value(v);
}

double value_fgamma(const PayoffMatrix& u, const OutcomeSet& gamma) {
  return value_fgamma(u.table(), gamma);
}

std::vector<std::size_t> argmax_outcomes(std::span<const double> utility_table,
                                         const OutcomeSet& gamma, double tie_tol) {
  if (gamma.empty()) throw DomainError("outcome set is empty");
  const auto v = generator_values(utility_table, gamma);
  const double best = kernels::max_value(v);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] >= best - tie_tol) out.push_back(k);
  return out;
}

namespace {

std::size_t count_ties(const UtilitySampler& sampler, const OutcomeSet& gamma,
                       std::size_t begin, std::size_t end, double tie_tol, RandomSeed rng) {
  const std::size_t cols = gamma.n_actions() * gamma.n_consequences();
  std::vector<double> values(gamma.size());
  std::size_t ties = 0;
  for (std::size_t k = begin; k < end; ++k) {
    std::vector<double> table;
    if (const auto* fam = std::get_if<PrevalentFamily>(&sampler)) {
      table = sample_prevalent(*fam, rng.substream(k)).table();
    } else {
      table = std::get<PointMassUtility>(sampler).utility.table();
    }
    if (table.size() != cols) throw DomainError("sampled utility does not cover A x C");
    kernels::gemv(gamma.stacked(), gamma.size(), cols, table, values);
    const double best = kernels::max_value(values);
    if (kernels::count_at_least(values, best - tie_tol) >= 2) ++ties;
  }
  return ties;
}

}  // namespace

TieFrequencyResult tie_frequency_experiment(const UtilitySampler& sampler,
                                            const OutcomeSet& gamma, std::size_t n_samples,
                                            double tie_tol, RandomSeed rng, unsigned jobs) {
  if (n_samples == 0) throw DomainError("tie frequency needs at least one sample");
  if (gamma.empty()) throw DomainError("outcome set is empty");
  if (const auto* fam = std::get_if<PrevalentFamily>(&sampler)) fam->validate();

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_samples)));
  std::vector<std::size_t> partial(jobs, 0);
  if (jobs == 1) {
    partial[0] = count_ties(sampler, gamma, 0, n_samples, tie_tol, rng);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_samples + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t b = std::min(n_samples, j * chunk);
      const std::size_t e = std::min(n_samples, b + chunk);
      pool.emplace_back([&, j, b, e] { partial[j] = count_ties(sampler, gamma, b, e, tie_tol, rng); });
    }
    for (auto& t : pool) t.join();
  }
  TieFrequencyResult r;
  r.n_samples = n_samples;
  for (std::size_t p : partial) r.n_ties += p;
  r.frequency = static_cast<double>(r.n_ties) / static_cast<double>(n_samples);
  return r;
}

PayoffMatrix compose_semi_prevalent(std::span<const double> v_actions,
                                    std::span<const double> v_consequences) {
  std::vector<double> table;
  table.reserve(v_actions.size() * v_consequences.size());
  for (double va : v_actions)
    for (double vc : v_consequences) table.push_back(va + vc);
  return PayoffMatrix(v_actions.size(), v_consequences.size(), std::move(table));
}

bool semi_prevalent_check(const PayoffMatrix& u, PrevalentSide side, const Mechanism& mech,
                          const StrategyTable& strategy, double ic_tol, double info_tol) {
  const ICReport ic = check_incentive_compat(strategy, mech, u, ic_tol);
  if (!ic.feasible) return true;
  if (side == PrevalentSide::Actions) return !informativeness(strategy, info_tol);
  for (std::size_t w = 0; w < strategy.n_types; ++w) {
    const Lottery first = mech.pushforward(strategy.at(0, w));
    for (std::size_t s = 1; s < strategy.n_states; ++s) {
      if (total_variation(first, mech.pushforward(strategy.at(s, w))) > info_tol) return false;
    }
  }
  return true;
}

}  // namespace purify
