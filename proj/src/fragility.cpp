#include <algorithm>
#include <cmath>

#include "purify/verifier.hpp"

namespace purify {

double expected_abs_relative_shock(const ShockDistribution& d) {
  d.validate();
  if (d.degenerate()) return 0.0;
  // |k - m| is uniform on [0, (hi - lo) / 2].
  return 0.25 * (d.hi - d.lo) / d.mean();
}

FragilityResult fragility_experiment(const ValueQuery& q, std::size_t agent,
                                     const ShockDistribution& shocks, std::size_t n_draws,
                                     RandomSeed rng, std::size_t action_grid, double tol) {
  q.validate();
  shocks.validate();
  if (agent >= q.profile.size()) throw ConfigError("fragility agent out of range");
  if (action_grid < 2) throw ConfigError("fragility needs at least two grid actions");
  if (n_draws == 0) throw ConfigError("fragility needs at least one draw");
  const std::size_t n = q.profile.size();
  const SignalStructure& ss = q.structure;
  const double delta = q.params.delta;
  const double kbar = shocks.mean();

  // States after the first period with the agent's monitored signal forced to
  // each probe value.
  const JointState x0 = initial_states(q.profile);
  const auto a0 = prescriptions(q.profile, x0);
  const auto means = monitored_means(ss, a0);
  const std::size_t slot = ss.public_kind() ? 0 : agent;
  std::vector<JointState> probes;
  std::vector<double> presc;
  for (double v : signal_probe_values(ss, means[slot])) {
    auto obs = means;
    if (ss.public_kind()) std::fill(obs.begin(), obs.end(), v);
    else obs[agent] = v;
    probes.push_back(step_states(q.profile, x0, a0, signals_with_values(ss, a0, obs)));
    presc.push_back(q.profile[agent].prescription(probes.back()[agent]));
  }

  FragilityResult r;
  r.n_draws = n_draws;
  r.kappa_bar = kbar;
  r.action_lo = *std::min_element(presc.begin(), presc.end());
  r.action_hi = *std::max_element(presc.begin(), presc.end());
  const double lo = r.action_lo, hi = r.action_hi;
  const double range = hi - lo;

  std::vector<double> grid(action_grid);
  for (std::size_t k = 0; k < action_grid; ++k)
    grid[k] = lo + range * static_cast<double>(k) / static_cast<double>(action_grid - 1);

  // others[v][k]: the others' total contribution next period when the agent
  // plays grid[k] at probe v.
  auto others_next = [&](const JointState& x, double a) {
    auto acts = prescriptions(q.profile, x);
    acts[agent] = a;
    const auto nx = step_states(q.profile, x, acts, mean_signals(ss, acts));
    const auto p = prescriptions(q.profile, nx);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != agent) s += p[j];
    return s;
  };
  std::vector<std::vector<double>> others(probes.size(), std::vector<double>(action_grid));
  std::vector<double> at_presc(probes.size());
  std::vector<double> ratio(probes.size(), 0.0);
  for (std::size_t v = 0; v < probes.size(); ++v) {
    for (std::size_t k = 0; k < action_grid; ++k) others[v][k] = others_next(probes[v], grid[k]);
    at_presc[v] = others_next(probes[v], presc[v]);
    if (range > 0.0) ratio[v] = (others[v].back() - others[v].front()) / range;
  }
  const bool informative = range > 0.0;
  const bool presc_stage_nash =
      std::all_of(presc.begin(), presc.end(), [](double a) { return a <= 1e-12; });

  CounterRng draws(rng);
  std::size_t interior = 0, dependent = 0, non_nash_ic = 0;
  double viol = 0.0, analytic = 0.0;
  std::vector<double> u(action_grid);
  for (std::size_t d = 0; d < n_draws; ++d) {
    const double k = liquidity_shock_draw(shocks, draws);
    bool any_interior = false, ic = true;
    std::size_t first_br = 0;
    bool varies = false;
    double slope_sum = 0.0;
    for (std::size_t v = 0; v < probes.size(); ++v) {
      // Terms that do not move with the agent's action are dropped.
      for (std::size_t g = 0; g < action_grid; ++g)
        u[g] = (1.0 - delta) * ((k - 1.0) * grid[g] + delta * k * others[v][g]);
      const auto best_it = std::max_element(u.begin(), u.end());
      const double best = *best_it;
      const std::size_t br = static_cast<std::size_t>(best_it - u.begin());
      const auto ties = std::count_if(u.begin(), u.end(), [&](double x) { return x >= best - tol; });
      if (ties > 1 || (br != 0 && br != action_grid - 1)) any_interior = true;
      if (v == 0) first_br = br;
      else if (br != first_br) varies = true;
      const double up = (1.0 - delta) * ((k - 1.0) * presc[v] + delta * k * at_presc[v]);
      if (up < best - tol) ic = false;
      slope_sum += (1.0 - delta) * ((k - 1.0) + delta * k * ratio[v]);
    }
    if (any_interior) ++interior;
    if (varies) ++dependent;
    if (ic && !presc_stage_nash) ++non_nash_ic;
    if (informative) {
      viol += std::abs(slope_sum / static_cast<double>(probes.size())) * range;
      analytic += (1.0 - delta) * std::abs(k / kbar - 1.0) * range;
    }
  }
  const double nd = static_cast<double>(n_draws);
  r.interior_br_frequency = static_cast<double>(interior) / nd;
  r.br_state_dependence_frequency = static_cast<double>(dependent) / nd;
  r.non_stage_nash_ic_frequency = static_cast<double>(non_nash_ic) / nd;
  r.mean_ic_violation = viol / nd;
  r.analytic_ic_violation = analytic / nd;
  r.population_ic_violation = (1.0 - delta) * expected_abs_relative_shock(shocks) * range;
  return r;
}

}  // namespace purify
