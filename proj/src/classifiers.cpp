#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "purify/verifier.hpp"

namespace purify {

namespace {

struct Probed {
  std::size_t t;
  JointState states;
  std::vector<std::vector<double>> obs;  // per agent, flattened observation path
  std::vector<double> pub;               // public part of the path
};

void push_finite(std::vector<double>& out, double v) {
  if (!std::isnan(v)) out.push_back(v);
}

std::vector<Probed> probe_all(const ValueQuery& q, const ClassifierOptions& opt) {
  ProbeOptions po;
  po.depth = opt.depth;
  po.action_alphabet = opt.action_alphabet;
  const std::size_t n = q.profile.size();
  std::vector<Probed> out;
  for (const History& h : probe_histories(q, po)) {
    const HistoryState hs = replay_history(q, h);
    Probed p;
    p.t = h.length;
    p.states = hs.states;
    p.obs.resize(n);
    for (std::size_t tau = 0; tau < hs.actions.size(); ++tau) {
      for (std::size_t i = 0; i < n; ++i) {
        const AgentSignal& s = hs.signals[tau][i];
        auto& o = p.obs[i];
        o.push_back(s.own_action);
        push_finite(o, s.public_signal);
        push_finite(o, s.private_signal);
        o.insert(o.end(), s.profile.begin(), s.profile.end());
      }
      const AgentSignal& s0 = hs.signals[tau][0];
      if (q.structure.kind == MonitoringKind::Perfect)
        p.pub.insert(p.pub.end(), s0.profile.begin(), s0.profile.end());
      else
        push_finite(p.pub, s0.public_signal);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::size_t, std::vector<const Probed*>> by_period(const std::vector<Probed>& all) {
  std::map<std::size_t, std::vector<const Probed*>> m;
  for (const auto& p : all) m[p.t].push_back(&p);
  return m;
}

std::vector<JointState> unique_states(const std::vector<const Probed*>& ps) {
  std::set<JointState> s;
  for (const auto* p : ps) s.insert(p->states);
  return {s.begin(), s.end()};
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

bool constant_on_cells(const std::vector<const Probed*>& ps, UnionFind& uf) {
  std::map<std::size_t, const JointState*> rep;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto [it, fresh] = rep.emplace(uf.find(k), &ps[k]->states);
    if (!fresh && *it->second != ps[k]->states) return false;
  }
  return true;
}

// Largest one-shot gain over the grid for agent i at a joint state.
double max_gain(const ValueQuery& q, const JointState& x, std::size_t i,
                const std::vector<double>& grid) {
  const double conform = continuation_value(q, x).value[i];
  double best = -INFINITY;
  for (double a : grid) best = std::max(best, action_value(q, x, i, a) - conform);
  best = std::max(best, action_value(q, x, i, q.profile[i].prescription(x[i])) - conform);
  return best;
}

}  // namespace

bool classify_ppe(const ValueQuery& q, const ClassifierOptions& opt) {
  const auto all = probe_all(q, opt);
  for (const auto& [t, ps] : by_period(all)) {
    // Common knowledge is the meet of the agents' information partitions.
    UnionFind uf(ps.size());
    for (std::size_t i = 0; i < q.profile.size(); ++i) {
      std::map<std::vector<double>, std::size_t> first;
      for (std::size_t k = 0; k < ps.size(); ++k) {
        auto [it, fresh] = first.emplace(ps[k]->obs[i], k);
        if (!fresh) uf.unite(k, it->second);
      }
    }
    if (!constant_on_cells(ps, uf)) return false;
  }
  return true;
}

bool public_path_adapted(const ValueQuery& q, const ClassifierOptions& opt) {
  const auto all = probe_all(q, opt);
  for (const auto& [t, ps] : by_period(all)) {
    UnionFind uf(ps.size());
    std::map<std::vector<double>, std::size_t> first;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto [it, fresh] = first.emplace(ps[k]->pub, k);
      if (!fresh) uf.unite(k, it->second);
    }
    if (!constant_on_cells(ps, uf)) return false;
  }
  return true;
}

bool info_subset_check(const ValueQuery& q, const ClassifierOptions& opt) {
  const auto all = probe_all(q, opt);
  const std::size_t n = q.profile.size();
  for (const auto& [t, ps] : by_period(all)) {
    for (std::size_t i = 0; i < n; ++i) {
      std::map<JointState, MachineState> own;
      for (const auto* p : ps) {
        JointState others = p->states;
        others.erase(others.begin() + static_cast<std::ptrdiff_t>(i));
        auto [it, fresh] = own.emplace(std::move(others), p->states[i]);
        if (!fresh && it->second != p->states[i]) return false;
      }
    }
  }
  return true;
}

bool belief_free_check(const ValueQuery& q, const ClassifierOptions& opt,
                       const std::vector<std::size_t>& block_starts) {
  const auto all = probe_all(q, opt);
  const auto grid = default_deviation_grid();
  const std::size_t n = q.profile.size();
  auto periods = by_period(all);
  std::set<std::size_t> starts(block_starts.begin(), block_starts.end());
  for (const auto& [t, ps] : periods) {
    if (!starts.empty() && !starts.count(t)) continue;
    const auto u = unique_states(ps);
    // Agent i's own state from one history, the others' from another.
    std::set<std::pair<std::size_t, JointState>> mixed;
    for (const auto& a : u)
      for (const auto& b : u)
        for (std::size_t i = 0; i < n; ++i) {
          JointState x = b;
          x[i] = a[i];
          mixed.emplace(i, std::move(x));
        }
    for (const auto& [i, x] : mixed)
      if (max_gain(q, x, i, grid) > opt.tol) return false;
  }
  return true;
}

bool atonement_check(const ValueQuery& q, const ClassifierOptions& opt) {
  const SignalStructure& ss = q.structure;
  if (!ss.public_kind() || ss.kind == MonitoringKind::Perfect) return false;
  const std::size_t n = q.profile.size();
  const std::size_t n_s = 4 * n + 1;
  std::vector<double> sgrid(n_s);
  for (std::size_t k = 0; k < n_s; ++k)
    sgrid[k] = ss.signal_lower() +
               (ss.signal_upper() - ss.signal_lower()) * static_cast<double>(k) / static_cast<double>(n_s - 1);
  std::vector<double> alphabet = opt.action_alphabet;
  std::sort(alphabet.begin(), alphabet.end());

  const auto all = probe_all(q, opt);
  for (const auto& [t, ps] : by_period(all)) {
    for (const auto& x : unique_states(ps)) {
      const auto base = prescriptions(q.profile, x);
      for (std::size_t i = 0; i < n; ++i) {
        // vc[k][m]: continuation for i after playing alphabet[k] and seeing
        // sgrid[m]; NaN where no consistent profile produces that signal.
        std::vector<std::vector<double>> vc(alphabet.size(), std::vector<double>(n_s, NAN));
        for (std::size_t k = 0; k < alphabet.size(); ++k) {
          for (std::size_t m = 0; m < n_s; ++m) {
            auto acts = base;
            acts[i] = alphabet[k];
            if (!ss.noisy()) {
              // A deterministic sum pins the others' total; split it evenly.
              const double each = (sgrid[m] - alphabet[k]) / static_cast<double>(n - 1);
              if (each < 0.0 || each > 1.0) continue;
              for (std::size_t j = 0; j < n; ++j)
                if (j != i) acts[j] = each;
            }
            const std::vector<double> obs(n, sgrid[m]);
            const auto sig = signals_with_values(ss, acts, obs);
            vc[k][m] = continuation_value(q, step_states(q.profile, x, acts, sig)).value[i];
          }
        }
        for (std::size_t lo = 0; lo < alphabet.size(); ++lo)
          for (std::size_t hi = lo + 1; hi < alphabet.size(); ++hi) {
            bool weak = true, strict = false, any = false;
            for (std::size_t m = 0; m < n_s; ++m) {
              if (std::isnan(vc[lo][m]) || std::isnan(vc[hi][m])) continue;
              any = true;
              if (vc[lo][m] > vc[hi][m] + opt.tol) weak = false;
              if (vc[lo][m] < vc[hi][m] - opt.tol) strict = true;
            }
            if (any && weak && strict) return true;
          }
      }
    }
  }
  return false;
}

bool reneg_proof_check(const ValueQuery& q, const ClassifierOptions& opt) {
  const auto all = probe_all(q, opt);
  for (const auto& [t, ps] : by_period(all)) {
    const auto u = unique_states(ps);
    std::vector<std::vector<double>> v;
    v.reserve(u.size());
    for (const auto& x : u) v.push_back(continuation_value(q, x).value);
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (a == b) continue;
        bool weak = true, strict = false;
        for (std::size_t i = 0; i < v[a].size(); ++i) {
          if (v[b][i] > v[a][i] + opt.tol) weak = false;
          if (v[b][i] < v[a][i] - opt.tol) strict = true;
        }
        if (weak && strict) return false;  // v[a] Pareto dominates v[b]
      }
  }
  return true;
}

bool stage_nash_check(std::span<const double> actions, const GameParams&) {
  // kappa < 1 makes zero the dominant stage action.
  return std::all_of(actions.begin(), actions.end(), [](double a) { return a <= 1e-12; });
}

bool on_path_stage_nash(const ValueQuery& q, std::size_t periods) {
  History h;
  h.length = periods;
  const auto hs = replay_history(q, h);
  for (const auto& a : hs.actions)
    if (!stage_nash_check(a, q.params)) return false;
  return stage_nash_check(prescriptions(q.profile, hs.states), q.params);
}

ClassifierFlags classify_all(const ValueQuery& q, const ClassifierOptions& opt) {
  ClassifierFlags f;
  f.ppe = classify_ppe(q, opt);
  f.ppe_public = public_path_adapted(q, opt);
  f.info_subset = info_subset_check(q, opt);
  f.belief_free = belief_free_check(q, opt);
  f.atonement = atonement_check(q, opt);
  f.reneg_proof = reneg_proof_check(q, opt);
  f.stage_nash = on_path_stage_nash(q, opt.depth + 1);
  return f;
}

}  // namespace purify
