#include "purify/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <thread>

#include "purify/kernels.hpp"

namespace purify {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void set_monitored(AgentSignal& s, double v) {
  if (!std::isnan(s.public_signal)) s.public_signal = v;
  else s.private_signal = v;
}

void apply_signal_overrides(const History& h, std::size_t period, std::vector<AgentSignal>& sig) {
  for (const auto& o : h.signals) {
    if (o.period != period) continue;
    if (o.agent) {
      set_monitored(sig.at(*o.agent), o.value);
    } else {
      for (auto& s : sig) set_monitored(s, o.value);
    }
  }
}

void apply_action_overrides(const History& h, std::size_t period, std::vector<double>& actions) {
  for (const auto& o : h.actions)
    if (o.period == period) actions.at(o.agent) = o.action;
}

double discounted(const std::vector<double>& payoffs, double delta) {
  return (1.0 - delta) * kernels::discounted_sum(payoffs, delta);
}

// Exact expected payoffs per agent and period by propagating the distribution
// over joint machine states.
std::vector<std::vector<double>> analytic_payoffs(const ValueQuery& q, const JointState& start,
                                                  std::optional<FirstAction> first) {
  const std::size_t n = q.profile.size();
  const std::size_t horizon = q.resolved_horizon();
  const auto kappas = q.valuations();
  std::vector<std::vector<double>> payoff(n, std::vector<double>(horizon, 0.0));

  const bool pure = std::none_of(q.profile.begin(), q.profile.end(),
                                 [](const Machine& m) { return m.randomizes() && m.rho > 0.0; });
  if (pure) {
    // Single deterministic path.
    JointState states = start;
    std::vector<double> actions(n);
    std::vector<AgentSignal> sig;
    for (std::size_t k = 0; k < horizon; ++k) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        actions[j] = q.profile[j].prescription(states[j]);
        if (k == 0 && first && first->agent == j) actions[j] = first->action;
        total += actions[j];
      }
      mean_signals_into(q.structure, actions, sig);
      for (std::size_t j = 0; j < n; ++j) {
        payoff[j][k] = kappas[j] * total - actions[j];
        states[j] = q.profile[j].observe(states[j], actions[j], sig[j]);
      }
    }
    return payoff;
  }

  std::map<JointState, double> support{{start, 1.0}};
  std::vector<double> actions(n);
  std::vector<std::size_t> mixers;
  for (std::size_t k = 0; k < horizon; ++k) {
    std::map<JointState, double> next;
    for (const auto& [states, weight] : support) {
      mixers.clear();
      for (std::size_t j = 0; j < n; ++j) {
        const bool forced = k == 0 && first && first->agent == j;
        if (!forced && q.profile[j].randomizes() && q.profile[j].rho > 0.0) mixers.push_back(j);
      }
      const std::size_t branches = std::size_t{1} << mixers.size();
      for (std::size_t mask = 0; mask < branches; ++mask) {
        double prob = weight;
        for (std::size_t j = 0; j < n; ++j) actions[j] = q.profile[j].prescription(states[j]);
        for (std::size_t b = 0; b < mixers.size(); ++b) {
          const double rho = q.profile[mixers[b]].rho;
          if (mask >> b & 1u) {
            prob *= rho;
            actions[mixers[b]] = 0.0;
          } else {
            prob *= 1.0 - rho;
          }
        }
        if (prob == 0.0) continue;
        if (k == 0 && first) actions[first->agent] = first->action;
        const auto sig = mean_signals(q.structure, actions);
        const auto pay = stage_payoff(kappas, actions);
        for (std::size_t j = 0; j < n; ++j) payoff[j][k] += prob * pay[j];
        next[step_states(q.profile, states, actions, sig)] += prob;
      }
    }
    support = std::move(next);
  }
  return payoff;
}

// Per-agent discounted payoff of one sampled path.
std::vector<double> sampled_values(const ValueQuery& q, const JointState& start,
                                   std::optional<FirstAction> first, RandomSeed rep) {
  const std::size_t n = q.profile.size();
  const std::size_t horizon = q.resolved_horizon();
  const auto kappas = q.valuations();
  CounterRng latent(rep.substream(0));
  CounterRng noise(rep.substream(1));
  std::vector<std::vector<double>> payoff(n, std::vector<double>(horizon));
  JointState states = start;
  std::vector<double> actions(n);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j < n; ++j) actions[j] = q.profile[j].act(states[j], latent.uniform());
    if (k == 0 && first) actions[first->agent] = first->action;
    const auto sig = sample_signals(q.structure, actions, noise);
    const auto pay = stage_payoff(kappas, actions);
    for (std::size_t j = 0; j < n; ++j) payoff[j][k] = pay[j];
    states = step_states(q.profile, states, actions, sig);
  }
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = discounted(payoff[j], q.params.delta);
  return v;
}

template <class Fn>
void parallel_reps(std::size_t n_reps, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n_reps, 1))));
  if (jobs == 1) {
    for (std::size_t r = 0; r < n_reps; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_reps + jobs - 1) / jobs;
  for (unsigned j = 0; j < jobs; ++j) {
    const std::size_t b = std::min(n_reps, j * chunk);
    const std::size_t e = std::min(n_reps, b + chunk);
    pool.emplace_back([&fn, b, e] {
      for (std::size_t r = b; r < e; ++r) fn(r);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

JointState initial_states(const Profile& p) {
  JointState s;
  s.reserve(p.size());
  for (const auto& m : p) s.push_back(m.initial());
  return s;
}

JointState step_states(const Profile& p, const JointState& s, std::span<const double> actions,
                       const std::vector<AgentSignal>& sig) {
  JointState next(s.size());
  for (std::size_t i = 0; i < p.size(); ++i) next[i] = p[i].observe(s[i], actions[i], sig[i]);
  return next;
}

std::vector<double> prescriptions(const Profile& p, const JointState& s) {
  std::vector<double> a(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) a[i] = p[i].prescription(s[i]);
  return a;
}

std::string_view value_method_name(ValueMethod m) {
  return m == ValueMethod::Analytic ? "analytic" : "monte_carlo";
}

ValueMethod parse_value_method(std::string_view name) {
  if (name == "analytic" || name == "analytic_linear") return ValueMethod::Analytic;
  if (name == "monte_carlo") return ValueMethod::MonteCarlo;
  throw ConfigError("unknown value method '" + std::string(name) + "'");
}

void ValueQuery::validate() const {
  params.validate();
  structure.validate();
  if (profile.size() != params.n_agents || structure.n_agents != params.n_agents)
    throw ConfigError("profile, game and monitoring disagree on the number of agents");
  if (!kappas.empty() && kappas.size() != params.n_agents)
    throw ConfigError("need one realized kappa per agent");
  if (method == ValueMethod::MonteCarlo && n_reps == 0)
    throw ConfigError("monte carlo needs n_reps >= 1");
  if (method == ValueMethod::Analytic && !analytic_supported())
    throw DomainError("analytic method requested for a nonlinear machine under noisy monitoring");
}

bool ValueQuery::analytic_supported() const {
  if (!structure.noisy()) return true;
  return std::all_of(profile.begin(), profile.end(), [](const Machine& m) { return m.linear(); });
}

std::vector<double> ValueQuery::valuations() const {
  if (!kappas.empty()) return kappas;
  return std::vector<double>(params.n_agents, params.kappa_bar());
}

double ValueQuery::payoff_range() const {
  double kmax = params.kappa.hi;
  for (double k : kappas) kmax = std::max(kmax, k);
  return stage_payoff_range(kmax, params.n_agents);
}

std::size_t ValueQuery::resolved_horizon() const {
  return horizon != 0 ? horizon : default_horizon(params.delta, payoff_range());
}

double ValueQuery::truncation_bound() const {
  return std::pow(params.delta, static_cast<double>(resolved_horizon())) * payoff_range();
}

HistoryState replay_history(const ValueQuery& q, const History& h) {
  HistoryState out;
  out.states = initial_states(q.profile);
  const std::size_t n = q.profile.size();
  std::vector<double> actions(n);
  for (std::size_t t = 0; t < h.length; ++t) {
    for (std::size_t j = 0; j < n; ++j) actions[j] = q.profile[j].prescription(out.states[j]);
    apply_action_overrides(h, t, actions);
    auto sig = mean_signals(q.structure, actions);
    apply_signal_overrides(h, t, sig);
    out.states = step_states(q.profile, out.states, actions, sig);
    out.actions.push_back(actions);
    out.signals.push_back(std::move(sig));
  }
  return out;
}

ValueResult continuation_value(const ValueQuery& q, const JointState& start,
                               std::optional<FirstAction> first) {
  q.validate();
  const std::size_t n = q.profile.size();
  ValueResult res;
  res.horizon = q.resolved_horizon();
  res.truncation_bound = q.truncation_bound();
  res.value.assign(n, 0.0);
  res.std_error.assign(n, 0.0);
  if (q.method == ValueMethod::Analytic) {
    const auto pay = analytic_payoffs(q, start, first);
    for (std::size_t j = 0; j < n; ++j) res.value[j] = discounted(pay[j], q.params.delta);
    return res;
  }
  std::vector<std::vector<double>> per_agent(n, std::vector<double>(q.n_reps));
  parallel_reps(q.n_reps, q.jobs, [&](std::size_t r) {
    const auto v = sampled_values(q, start, first, q.seed.substream(r));
    for (std::size_t j = 0; j < n; ++j) per_agent[j][r] = v[j];
  });
  for (std::size_t j = 0; j < n; ++j) {
    const auto m = kernels::moments(per_agent[j]);
    res.value[j] = m.mean();
    res.std_error[j] = q.n_reps > 1 ? std::sqrt(m.variance() / static_cast<double>(q.n_reps)) : 0.0;
  }
  return res;
}

ValueResult value(const ValueQuery& q) {
  return continuation_value(q, initial_states(q.profile));
}

double action_value(const ValueQuery& q, const JointState& start, std::size_t agent, double action) {
  return continuation_value(q, start, FirstAction{agent, action}).value[agent];
}

GainResult deviation_gain_from(const ValueQuery& q, const JointState& start, std::size_t agent,
                               double alternative) {
  if (!(alternative >= 0.0 && alternative <= 1.0)) throw DomainError("deviation outside [0, 1]");
  GainResult g;
  g.prescribed = q.profile.at(agent).prescription(start.at(agent));
  if (q.method == ValueMethod::Analytic) {
    g.conform_value = continuation_value(q, start).value[agent];
    g.deviate_value = continuation_value(q, start, FirstAction{agent, alternative}).value[agent];
    g.gain = g.deviate_value - g.conform_value;
    return g;
  }
  q.validate();
  // Common random numbers: both branches replay the same rep streams.
  std::vector<double> diff(q.n_reps), conf(q.n_reps), dev(q.n_reps);
  parallel_reps(q.n_reps, q.jobs, [&](std::size_t r) {
    const RandomSeed rep = q.seed.substream(r);
    conf[r] = sampled_values(q, start, std::nullopt, rep)[agent];
    dev[r] = sampled_values(q, start, FirstAction{agent, alternative}, rep)[agent];
    diff[r] = dev[r] - conf[r];
  });
  const auto md = kernels::moments(diff);
  g.gain = md.mean();
  g.std_error = q.n_reps > 1 ? std::sqrt(md.variance() / static_cast<double>(q.n_reps)) : 0.0;
  g.conform_value = kernels::moments(conf).mean();
  g.deviate_value = kernels::moments(dev).mean();
  return g;
}

GainResult one_shot_deviation_gain(const ValueQuery& q, std::size_t agent, const History& h,
                                   double alternative) {
  return deviation_gain_from(q, replay_history(q, h).states, agent, alternative);
}

Trace simulate(const ValueQuery& q, std::size_t periods, const History& h, RandomSeed seed) {
  q.params.validate();
  q.structure.validate();
  const std::size_t n = q.profile.size();
  const auto kappas = q.valuations();
  CounterRng latent(seed.substream(0));
  CounterRng noise(seed.substream(1));
  Trace tr;
  JointState states = initial_states(q.profile);
  std::vector<std::vector<double>> pay(n);
  for (std::size_t t = 0; t < periods; ++t) {
    TracePeriod p;
    p.t = t;
    p.states = states;
    p.actions.resize(n);
    p.latent.assign(n, kNaN);
    for (std::size_t j = 0; j < n; ++j) {
      const double u = latent.uniform();
      if (q.profile[j].randomizes()) p.latent[j] = u;
      p.actions[j] = q.profile[j].act(states[j], u);
    }
    apply_action_overrides(h, t, p.actions);
    p.signals = sample_signals(q.structure, p.actions, noise);
    apply_signal_overrides(h, t, p.signals);
    p.payoffs = stage_payoff(kappas, p.actions);
    for (std::size_t j = 0; j < n; ++j) pay[j].push_back(p.payoffs[j]);
    states = step_states(q.profile, states, p.actions, p.signals);
    tr.periods.push_back(std::move(p));
  }
  tr.discounted_value.resize(n);
  for (std::size_t j = 0; j < n; ++j) tr.discounted_value[j] = discounted(pay[j], q.params.delta);
  return tr;
}

namespace {

void put(std::ostream& os, double v) {
  if (std::isnan(v)) return;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, const Trace& trace, const SignalStructure&) {
  os << kTraceCsvHeader << '\n';
  for (const auto& p : trace.periods) {
    for (std::size_t j = 0; j < p.actions.size(); ++j) {
      const auto& s = p.signals[j];
      os << p.t << ',' << j << ',';
      put(os, p.actions[j]);
      os << ',';
      put(os, p.latent[j]);
      os << ',';
      put(os, s.own_action);
      os << ',';
      put(os, s.public_signal);
      os << ',';
      put(os, s.private_signal);
      os << ',';
      put(os, p.payoffs[j]);
      os << ',' << (p.states[j].punished ? 1 : 0) << ',';
      put(os, p.states[j].raw);
      os << ',';
      put(os, p.states[j].expected_total);
      os << '\n';
    }
  }
}

}  // namespace purify
