#include "purify/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace purify {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<double> default_deviation_grid() {
  std::vector<double> g(21);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = static_cast<double>(k) / 20.0;
  return g;
}

std::vector<double> signal_probe_values(const SignalStructure& ss, double mean) {
  const double lo = ss.signal_lower();
  const double hi = ss.signal_upper();
  const double half = 0.5 * (hi - lo);
  std::vector<double> v{lo, mean - half, mean, mean + half, hi};
  for (double& x : v) x = std::clamp(x, lo, hi);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<History> probe_histories(const ValueQuery& q, const ProbeOptions& opt) {
  std::vector<History> out;
  History path;
  path.length = opt.depth;
  const HistoryState on_path = replay_history(q, path);

  for (std::size_t t = 0; t <= opt.depth; ++t) {
    History h;
    h.length = t;
    h.label = "on-path t=" + std::to_string(t);
    out.push_back(std::move(h));
  }
  const std::size_t n = q.profile.size();
  for (std::size_t tau = 0; tau < opt.depth; ++tau) {
    for (std::size_t j = 0; j < n; ++j) {
      for (double b : opt.action_alphabet) {
        if (b == on_path.actions[tau][j]) continue;
        for (std::size_t t = tau + 1; t <= opt.depth; ++t) {
          History h;
          h.length = t;
          h.actions.push_back({tau, j, b});
          h.label = "agent " + std::to_string(j) + " plays " + fmt(b) + " at " + std::to_string(tau) +
                    ", t=" + std::to_string(t);
          out.push_back(std::move(h));
        }
      }
    }
  }
  if (opt.signal_probes && q.structure.noisy()) {
    for (std::size_t tau = 0; tau < opt.depth; ++tau) {
      const auto m = monitored_means(q.structure, on_path.actions[tau]);
      const std::size_t slots = q.structure.public_kind() ? 1 : n;
      for (std::size_t slot = 0; slot < slots; ++slot) {
        for (double v : signal_probe_values(q.structure, m[slot])) {
          if (v == m[slot]) continue;
          for (std::size_t t = tau + 1; t <= opt.depth; ++t) {
            History h;
            h.length = t;
            SignalOverride o;
            o.period = tau;
            if (slots > 1) o.agent = slot;
            o.value = v;
            h.signals.push_back(o);
            h.label = (slots > 1 ? "agent " + std::to_string(slot) + " observes " : "public signal ") +
                      fmt(v) + " at " + std::to_string(tau) + ", t=" + std::to_string(t);
            out.push_back(std::move(h));
          }
        }
      }
    }
  }
  return out;
}

VerificationReport verify_equilibrium(const ValueQuery& q, const std::vector<double>& grid,
                                      double tol, const ProbeOptions& probes) {
  q.validate();
  VerificationReport rep;
  rep.tol = tol;
  rep.method = q.method;
  rep.horizon = q.resolved_horizon();
  rep.truncation_bound = q.truncation_bound();
  const auto v = value(q);
  rep.value = v.value;
  rep.value_std_error = v.std_error;

  const auto hist = probe_histories(q, probes);
  rep.n_probes = hist.size();

  // Histories that land in the same joint state share one evaluation.
  std::map<JointState, std::size_t> seen;
  bool first = true;
  bool feasible = true;
  for (std::size_t hi = 0; hi < hist.size(); ++hi) {
    const JointState states = replay_history(q, hist[hi]).states;
    if (!seen.emplace(states, hi).second) continue;
    std::vector<double> conform;
    if (q.method == ValueMethod::Analytic) conform = continuation_value(q, states).value;
    for (std::size_t i = 0; i < q.profile.size(); ++i) {
      std::vector<double> alts = grid;
      alts.push_back(q.profile[i].prescription(states[i]));
      std::sort(alts.begin(), alts.end());
      alts.erase(std::unique(alts.begin(), alts.end()), alts.end());
      for (double a : alts) {
        GainResult g;
        if (q.method == ValueMethod::Analytic) {
          g.deviate_value = action_value(q, states, i, a);
          g.conform_value = conform[i];
          g.gain = g.deviate_value - g.conform_value;
        } else {
          g = deviation_gain_from(q, states, i, a);
        }
        ++rep.n_evaluations;
        rep.residual = std::max(rep.residual, std::abs(g.gain));
        if (g.gain - 3.0 * g.std_error > tol) feasible = false;
        if (first || g.gain > rep.worst_gain) {
          first = false;
          rep.worst_gain = g.gain;
          rep.worst_gain_std_error = g.std_error;
          rep.worst_agent = i;
          rep.worst_action = a;
          rep.worst_probe = hist[hi].label;
        }
      }
    }
  }
  rep.feasible = feasible;
  return rep;
}

CriticalDelta measured_critical_delta(const std::function<ValueQuery(double)>& build, double lo,
                                      double hi, double tol, double resolution,
                                      const ProbeOptions& probes) {
  const auto grid = default_deviation_grid();
  auto ok = [&](double d) { return verify_equilibrium(build(d), grid, tol, probes).feasible; };
  CriticalDelta c;
  c.bracketed = !ok(lo) && ok(hi);
  if (!c.bracketed) {
    c.delta = ok(lo) ? lo : hi;
    return c;
  }
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid; else lo = mid;
    ++c.iterations;
  }
  c.delta = hi;
  return c;
}

}  // namespace purify
