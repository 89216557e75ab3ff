#include "purify/runner.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "purify/game.hpp"

namespace purify {

namespace {

// Runs f(0..n-1) on up to `jobs` threads; results come back in index order.
template <class F>
auto parallel_map(std::size_t n, unsigned jobs, F f) {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> out(n);
  std::vector<std::exception_ptr> err(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        err[i] = std::current_exception();
      }
    }
  };
  const unsigned w = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(jobs, n)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < w; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  std::vector<R> r;
  r.reserve(n);
  for (auto& o : out) r.push_back(std::move(*o));
  return r;
}

std::string num(double v) { return format_double(v); }

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

struct Context {
  const ExperimentConfig& cfg;
  std::vector<Check> checks;
  std::vector<CsvTable> tables;

  void check(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
  RandomSeed seed(std::uint64_t index) const { return RandomSeed{cfg.seed, 0}.substream(index); }
};

const Json& body(const Context& c) { return c.cfg.body; }

std::vector<CaseSpec> parse_cases(const Json& j) {
  const Json defaults = j.contains("defaults") ? j.at("defaults") : Json::object();
  const Json& list = require(j, "cases", "config");
  if (!list.is_array() || list.empty()) throw ConfigError("config.cases must be a non-empty array");
  std::vector<CaseSpec> out;
  for (const auto& c : list) out.push_back(parse_case(c, defaults));
  return out;
}

// Builds every case up front so bad parameters surface before computing.
std::vector<ValueQuery> build_queries(const Context& ctx, const std::vector<CaseSpec>& cases) {
  std::vector<ValueQuery> q;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    try {
      q.push_back(cases[k].query(ctx.seed(k), ctx.cfg.jobs));
      q.back().validate();
    } catch (const ConfigError& e) {
      throw ConfigError("case '" + cases[k].name + "': " + e.what());
    } catch (const DomainError& e) {
      throw ConfigError("case '" + cases[k].name + "': " + e.what());
    }
  }
  return q;
}

bool expect_bool(const Json& e, const char* key, bool& out) {
  if (!e.contains(key)) return false;
  if (!e.at(key).is_boolean()) throw ConfigError(std::string("expect.") + key + " must be a boolean");
  out = e.at(key).get<bool>();
  return true;
}

// --- mech --------------------------------------------------------------------

Json mech_instance(Context& ctx) {
  const Json& j = body(ctx);
  const PayoffMatrix u = parse_payoff_matrix(require(j, "table", "config"), "config.table");
  const double tol = get_double(j, "tol", 1e-9, "config");
  const auto im = build_indifference_mechanism(u);
  std::vector<double> eu(u.n_actions());
  for (std::size_t a = 0; a < u.n_actions(); ++a) eu[a] = im.mechanism.expected_utility(u, a);
  const auto gamma = OutcomeSet::from_mechanism(im.mechanism);
  const double f = value_fgamma(u, gamma);
  double worst = 0.0;
  for (std::size_t a : im.undominated) worst = std::max(worst, std::abs(eu[a] - im.value));
  ctx.check("undominated_indifferent", worst <= tol, "max |EU - u*| = " + num(worst));
  if (j.contains("expect") && j.at("expect").contains("u_star")) {
    const double want = get_double(j.at("expect"), "u_star", "expect");
    ctx.check("u_star", std::abs(im.value - want) <= tol, "u* = " + num(im.value));
  }
  return Json{{"u_star", im.value},
              {"undominated", im.undominated},
              {"per_action_utility", eu},
              {"mechanism", im.mechanism.map},
              {"row_min", im.row_min},
              {"row_max", im.row_max},
              {"f_gamma", f}};
}

Json mech_random_exactness(Context& ctx) {
  const Json& j = body(ctx);
  const std::size_t n = get_size(j, "n_instances", 1000, "config");
  const std::size_t max_a = get_size(j, "max_actions", 8, "config");
  const std::size_t max_c = get_size(j, "max_consequences", 8, "config");
  const double tol = get_double(j, "tol", 1e-9, "config");
  if (n == 0 || max_a == 0 || max_c == 0) throw ConfigError("instance counts and sizes must be positive");
  struct Out {
    double err = 0.0, excess = -INFINITY;
    std::size_t checked = 0;
  };
  const auto res = parallel_map(n, ctx.cfg.jobs, [&](std::size_t k) {
    CounterRng rng(ctx.seed(k));
    const auto na = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_a));
    const auto nc = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_c));
    std::vector<double> t(na * nc);
    for (double& v : t) v = rng.uniform();
    const PayoffMatrix u(na, nc, std::move(t));
    const auto im = build_indifference_mechanism(u);
    Out o;
    std::vector<bool> und(na, false);
    for (std::size_t a : im.undominated) und[a] = true;
    for (std::size_t a = 0; a < na; ++a) {
      const double eu = im.mechanism.expected_utility(u, a);
      if (und[a]) {
        o.err = std::max(o.err, std::abs(eu - im.value));
        ++o.checked;
      } else {
        o.excess = std::max(o.excess, eu - im.value);
      }
    }
    return o;
  });
  double err = 0.0, excess = -INFINITY;
  std::size_t checked = 0, bad = 0;
  for (const auto& o : res) {
    err = std::max(err, o.err);
    excess = std::max(excess, o.excess);
    checked += o.checked;
    if (o.err > tol || o.excess > tol) ++bad;
  }
  if (!std::isfinite(excess)) excess = 0.0;
  ctx.check("undominated_equal_u_star", err <= tol, "max |EU - u*| = " + num(err));
  ctx.check("dominated_below_u_star", excess <= tol, "max EU - u* over dominated = " + num(excess));
  return Json{{"n_instances", n},
              {"n_undominated_checked", checked},
              {"max_abs_error", err},
              {"max_dominated_excess", excess},
              {"n_failing_instances", bad},
              {"tol", tol}};
}

LambdaDensity parse_density(const Json& j, std::size_t dim) {
  const std::string kind = get_string(j, "density", "gaussian", "family");
  if (kind == "gaussian")
    return GaussianDensity{std::vector<double>(dim, get_double(j, "mean", 0.0, "family")),
                           std::vector<double>(dim, get_double(j, "stddev", 1.0, "family"))};
  if (kind == "uniform")
    return UniformDensity{std::vector<double>(dim, get_double(j, "lo", 0.0, "family")),
                          std::vector<double>(dim, get_double(j, "hi", 1.0, "family"))};
  throw ConfigError("unknown density '" + kind + "'");
}

Json mech_tie_frequency(Context& ctx) {
  const Json& j = body(ctx);
  const Mechanism mech = parse_mechanism(require(require(j, "gamma", "config"), "mechanism", "gamma"),
                                         "gamma.mechanism");
  const OutcomeSet gamma = OutcomeSet::from_mechanism(mech);
  const std::size_t dim = mech.n_actions() * mech.n_consequences;
  PrevalentFamily fam{UtilityFn::finite(std::vector<double>(dim, 0.0)),
                      parse_density(require(j, "family", "config"), dim)};
  fam.validate();
  const std::size_t n = get_size(j, "n_samples", 100000, "config");
  const double tie_tol = get_double(j, "tie_tol", 1e-12, "config");
  const double expected = get_double(j, "expected_frequency", 0.0, "config");
  if (n == 0) throw ConfigError("n_samples must be positive");
  std::optional<PayoffMatrix> control;
  if (j.contains("control")) {
    control = parse_payoff_matrix(require(j.at("control"), "table", "control"), "control.table");
    if (control->table().size() != dim) throw ConfigError("control table has the wrong shape");
  }

  const auto r = tie_frequency_experiment(fam, gamma, n, tie_tol, ctx.seed(0), ctx.cfg.jobs);
  ctx.check("tie_frequency", r.frequency == expected,
            "frequency = " + num(r.frequency) + " over " + std::to_string(r.n_samples) + " draws");
  Json out{{"n_samples", r.n_samples},
           {"n_ties", r.n_ties},
           {"frequency", r.frequency},
           {"tie_tol", tie_tol},
           {"table_size", dim}};
  if (control) {
    const auto c = tie_frequency_experiment(PointMassUtility{control->as_utility()}, gamma, 1000,
                                            tie_tol, ctx.seed(1), ctx.cfg.jobs);
    ctx.check("control_tie_frequency", c.frequency == 1.0, "control frequency = " + num(c.frequency));
    out["control_frequency"] = c.frequency;
    out["control_samples"] = c.n_samples;
  }
  return out;
}

Json mech_contractor(Context& ctx) {
  const Json& j = body(ctx);
  const ContractorScenario sc = parse_contractor(require(j, "scenario", "config"));
  const Json& targets = require(j, "targets", "config");
  struct T {
    std::string name, expect;
    std::vector<Lottery> target;
  };
  std::vector<T> ts;
  for (const auto& t : targets) {
    T x;
    x.name = get_string(t, "name", "target", "target");
    x.expect = get_string(t, "expect", "pass", "target");
    if (x.expect != "pass" && x.expect != "reservation" && x.expect != "reject")
      throw ConfigError("target.expect must be pass, reservation or reject");
    x.target = parse_target(require(t, "target", "target"), sc);
    ts.push_back(std::move(x));
  }
  Json out = Json::array();
  const double u_star = reservation_utility(sc);
  for (const auto& t : ts) {
    Json r{{"name", t.name}, {"reservation_utility", u_star},
           {"target_utility", target_customer_utility(sc, t.target)}};
    try {
      const auto eq = contractor_equilibrium(sc, t.target);
      r["rejected"] = false;
      r["report"] = contractor_report_to_json(eq.report);
      r["n_messages"] = eq.messages.size();
      r["support"] = eq.support;
      const auto& rep = eq.report;
      if (t.expect == "pass")
        ctx.check(t.name, rep.sender_ic && rep.customer_ok,
                  "spread = " + num(rep.sender_payoff_spread) + ", induced = " + num(rep.induced_utility));
      else if (t.expect == "reservation")
        ctx.check(t.name, rep.sender_ic && std::abs(rep.induced_utility - u_star) <= 1e-12,
                  "induced = " + num(rep.induced_utility) + ", u*_R = " + num(u_star));
      else
        ctx.check(t.name, false, "target was accepted");
    } catch (const BelowReservation& e) {
      r["rejected"] = true;
      ctx.check(t.name, t.expect == "reject",
                "rejected: target " + num(e.target) + " < u*_R " + num(e.reservation));
    }
    out.push_back(std::move(r));
  }
  return Json{{"reservation_utility", u_star}, {"targets", out}};
}

Json run_mech(Context& ctx) {
  const std::string mode = get_string(body(ctx), "mode", "instance", "config");
  if (mode == "instance") return mech_instance(ctx);
  if (mode == "random_exactness") return mech_random_exactness(ctx);
  if (mode == "tie_frequency") return mech_tie_frequency(ctx);
  if (mode == "contractor") return mech_contractor(ctx);
  throw ConfigError("unknown mech mode '" + mode + "'");
}

// --- simulate ----------------------------------------------------------------

History parse_overrides(const Json& j, std::size_t n_agents) {
  History h;
  if (j.contains("deviations"))
    for (const auto& d : j.at("deviations")) {
      ActionOverride o{get_size(d, "period", 0, "deviation"), get_size(d, "agent", 0, "deviation"),
                       get_double(d, "action", "deviation")};
      if (o.agent >= n_agents) throw ConfigError("deviation agent out of range");
      if (!(o.action >= 0.0 && o.action <= 1.0)) throw ConfigError("deviation action outside [0, 1]");
      h.actions.push_back(o);
    }
  if (j.contains("signal_overrides"))
    for (const auto& d : j.at("signal_overrides")) {
      SignalOverride o;
      o.period = get_size(d, "period", 0, "signal_override");
      if (d.contains("agent")) o.agent = get_size(d, "agent", 0, "signal_override");
      o.value = get_double(d, "value", "signal_override");
      h.signals.push_back(o);
    }
  return h;
}

double state_field(const MachineState& s, const std::string& f) {
  if (f == "expected_total") return s.expected_total;
  if (f == "raw") return s.raw;
  if (f == "punished") return s.punished ? 1.0 : 0.0;
  throw ConfigError("unknown state field '" + f + "'");
}

Json simulate_trace(Context& ctx) {
  const Json& j = body(ctx);
  const CaseSpec c = parse_case(require(j, "case", "config"));
  const ValueQuery q = build_queries(ctx, {c}).front();
  const std::size_t periods = get_size(j, "periods", 10, "config");
  if (periods == 0) throw ConfigError("periods must be positive");
  const History h = parse_overrides(j, c.game.n_agents);
  const Trace tr = simulate(q, periods, h, ctx.seed(0));

  std::ostringstream csv;
  write_trace_csv(csv, tr, q.structure);
  ctx.tables.push_back({"trace.csv", csv.str()});

  Json rows = Json::array();
  for (const auto& p : tr.periods) {
    Json states = Json::array();
    for (const auto& s : p.states)
      states.push_back({{"punished", s.punished}, {"raw", s.raw}, {"expected_total", s.expected_total}});
    Json observed = Json::array();
    for (const auto& s : p.signals)
      observed.push_back(std::isnan(s.public_signal) ? s.private_signal : s.public_signal);
    rows.push_back({{"t", p.t}, {"actions", p.actions}, {"observed", observed},
                    {"payoffs", p.payoffs}, {"states", states}});
  }
  if (j.contains("expect") && j.at("expect").contains("states")) {
    for (const auto& e : j.at("expect").at("states")) {
      const std::size_t t = get_size(e, "t", 0, "expect.states");
      const std::size_t a = get_size(e, "agent", 0, "expect.states");
      const std::string f = get_string(e, "field", "expected_total", "expect.states");
      const double want = get_double(e, "value", "expect.states");
      const double tol = get_double(e, "tol", 0.0, "expect.states");
      if (t >= tr.periods.size() || a >= c.game.n_agents) throw ConfigError("expect.states index out of range");
      const double got = state_field(tr.periods[t].states[a], f);
      ctx.check(f + "[t=" + std::to_string(t) + ",agent=" + std::to_string(a) + "]",
                std::abs(got - want) <= tol, "got " + num(got) + ", want " + num(want));
    }
  }
  return Json{{"name", c.name},
              {"strategy", c.strategy.label()},
              {"periods", rows},
              {"discounted_value", tr.discounted_value}};
}

struct Moments {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

Json simulate_signal_stats(Context& ctx) {
  const Json& j = body(ctx);
  const std::size_t n_agents = get_size(j, "n_agents", 3, "config");
  const double eps0 = get_double(j, "eps0", 0.05, "config");
  const double eps1 = get_double(j, "eps1", 0.05, "config");
  const std::size_t n_means = get_size(j, "n_means", 20, "config");
  const std::size_t n_mean_samples = get_size(j, "n_samples", 10000, "config");
  const std::size_t n_support = get_size(j, "n_support", 1000000, "config");
  const std::size_t n_corr = get_size(j, "n_correlation", 10000, "config");
  const double corr_tol = get_double(j, "correlation_tol", 0.02, "config");
  const std::size_t n_perm = get_size(j, "permutations", 100, "config");
  std::vector<NoiseFamily> families;
  for (const auto& f : require(j, "families", "config")) families.push_back(parse_noise(f));
  if (families.empty() || n_means < 2 || n_mean_samples < 2 || n_corr < 2)
    throw ConfigError("signal_stats needs families and at least two means and samples");

  struct Job {
    std::size_t fam;
    bool pub;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < families.size(); ++f) {
    jobs.push_back({f, true});
    jobs.push_back({f, false});
  }
  auto structure = [&](const Job& jb) {
    return jb.pub ? SignalStructure::noisy_public_sum(n_agents, families[jb.fam], eps0, eps1)
                  : SignalStructure::private_neighbor(SignalStructure::cyclic(n_agents),
                                                      families[jb.fam], eps0, eps1);
  };
  auto observed = [](const AgentSignal& s) {
    return std::isnan(s.public_signal) ? s.private_signal : s.public_signal;
  };

  const auto res = parallel_map(jobs.size(), ctx.cfg.jobs, [&](std::size_t k) {
    const Job& jb = jobs[k];
    const SignalStructure ss = structure(jb);
    const double m = jb.pub ? static_cast<double>(n_agents) : 1.0;
    Json r{{"family", families[jb.fam].shape == NoiseFamily::Shape::Triangular ? "triangular"
                                                                               : "truncated_gaussian"},
           {"kind", monitoring_kind_name(ss.kind)}};
    // Mean correctness on a grid of means.
    double worst_z = 0.0;
    std::size_t mean_failures = 0;
    Json grid = Json::array();
    for (std::size_t g = 0; g < n_means; ++g) {
      const double y = m * static_cast<double>(g) / static_cast<double>(n_means - 1);
      std::vector<double> acts(n_agents, jb.pub ? y / static_cast<double>(n_agents) : y);
      CounterRng rng(ctx.seed(1000 * k + g));
      Moments mo;
      for (std::size_t s = 0; s < n_mean_samples; ++s)
        mo.add(observed(sample_signals(ss, acts, rng)[0]));
      const double se = mo.sd() / std::sqrt(mo.n);
      const double err = std::abs(mo.mean - y);
      const bool ok = err <= 3.0 * se;
      if (!ok) ++mean_failures;
      worst_z = std::max(worst_z, se > 0 ? err / se : (err > 0 ? INFINITY : 0.0));
      grid.push_back({{"y", y}, {"mean", mo.mean}, {"stddev", mo.sd()}, {"ok", ok}});
    }
    r["means"] = grid;
    r["mean_failures"] = mean_failures;
    r["worst_z"] = worst_z;
    // Support over random action profiles.
    CounterRng rng(ctx.seed(1000 * k + 999));
    double lo = INFINITY, hi = -INFINITY;
    std::size_t outside = 0;
    std::vector<double> acts(n_agents);
    for (std::size_t s = 0; s < n_support; ++s) {
      for (double& a : acts) a = rng.uniform();
      for (const auto& sig : sample_signals(ss, acts, rng)) {
        const double v = observed(sig);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v < ss.signal_lower() || v > ss.signal_upper()) ++outside;
      }
    }
    r["support"] = {{"draws", n_support}, {"min", lo}, {"max", hi}, {"outside", outside},
                    {"lower", ss.signal_lower()}, {"upper", ss.signal_upper()}};
    // Conditional independence between agents 0 and 1 at fixed actions.
    if (!jb.pub) {
      CounterRng cr(ctx.seed(1000 * k + 998));
      const std::vector<double> fixed(n_agents, 0.5);
      Moments a, b;
      double cov = 0.0;
      std::vector<std::pair<double, double>> xs;
      xs.reserve(n_corr);
      for (std::size_t s = 0; s < n_corr; ++s) {
        const auto sig = sample_signals(ss, fixed, cr);
        xs.emplace_back(sig[0].private_signal, sig[1].private_signal);
        a.add(xs.back().first);
        b.add(xs.back().second);
      }
      for (const auto& [x, y] : xs) cov += (x - a.mean) * (y - b.mean);
      cov /= static_cast<double>(n_corr - 1);
      r["correlation"] = cov / (a.sd() * b.sd());
    }
    return r;
  });

  std::size_t mean_failures = 0, outside = 0;
  double worst_corr = 0.0;
  for (const auto& r : res) {
    mean_failures += r.at("mean_failures").get<std::size_t>();
    outside += r.at("support").at("outside").get<std::size_t>();
    if (r.contains("correlation")) worst_corr = std::max(worst_corr, std::abs(r.at("correlation").get<double>()));
  }
  ctx.check("mean_correctness", mean_failures == 0,
            std::to_string(mean_failures) + " grid means outside 3 standard errors");
  ctx.check("support", outside == 0, std::to_string(outside) + " draws outside the support");
  ctx.check("conditional_independence", worst_corr <= corr_tol, "max |corr| = " + num(worst_corr));

  // Permutation invariance for anonymous kinds, and its absence elsewhere.
  Json perm = Json::array();
  bool perm_ok = true;
  const NoiseFamily f0 = families.front();
  const std::vector<std::pair<SignalStructure, bool>> kinds{
      {SignalStructure::perfect(n_agents), false},
      {SignalStructure::deterministic_public_sum(n_agents), true},
      {SignalStructure::noisy_public_sum(n_agents, f0, eps0, eps1), true},
      {SignalStructure::private_neighbor(SignalStructure::cyclic(n_agents), f0, eps0, eps1), false},
      {SignalStructure::deterministic_private_neighbor(SignalStructure::cyclic(n_agents)), false}};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto flags = classify_structure(kinds[k].first, n_perm, ctx.seed(5000 + k));
    perm_ok = perm_ok && flags.anonymous == kinds[k].second;
    perm.push_back({{"kind", monitoring_kind_name(kinds[k].first.kind)},
                    {"anonymous", flags.anonymous},
                    {"public", flags.is_public},
                    {"noisy", flags.noisy}});
  }
  ctx.check("permutation_invariance", perm_ok, "anonymous exactly for the public-sum kinds");
  return Json{{"families", res}, {"permutation", perm}, {"correlation_tol", corr_tol}};
}

Json run_simulate(Context& ctx) {
  const std::string mode = get_string(body(ctx), "mode", "trace", "config");
  if (mode == "trace") return simulate_trace(ctx);
  if (mode == "signal_stats") return simulate_signal_stats(ctx);
  throw ConfigError("unknown simulate mode '" + mode + "'");
}

// --- verify / classify ---------------------------------------------------------

ProbeOptions parse_probes(const Json& j) {
  ProbeOptions p;
  p.depth = get_size(j, "probe_depth", p.depth, "config");
  if (j.contains("action_alphabet")) p.action_alphabet = get_doubles(j.at("action_alphabet"), "config.action_alphabet");
  p.signal_probes = get_bool(j, "signal_probes", true, "config");
  return p;
}

Json run_verify(Context& ctx) {
  const Json& j = body(ctx);
  const auto cases = parse_cases(j);
  const auto queries = build_queries(ctx, cases);
  const auto grid = j.contains("grid") ? get_doubles(j.at("grid"), "config.grid") : default_deviation_grid();
  const double tol = get_double(j, "tol", 1e-9, "config");
  const ProbeOptions probes = parse_probes(j);
  const Json& raw_cases = j.at("cases");
  const Json defaults = j.contains("defaults") ? j.at("defaults") : Json::object();

  // Cases run one at a time; each query parallelizes internally.
  Json out = Json::array();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    const auto& q = queries[k];
    const auto rep = verify_equilibrium(q, grid, tol, probes);
    Json r{{"name", c.name}, {"strategy", c.strategy.label()}, {"game", game_to_json(c.game)},
           {"monitoring", monitoring_to_json(c.monitoring)}, {"verification", verification_to_json(rep)}};

    // Gains at the start of play, per agent and grid action.
    const JointState x0 = initial_states(q.profile);
    Json gains = Json::array();
    std::vector<std::vector<double>> g(q.profile.size());
    for (std::size_t i = 0; i < q.profile.size(); ++i) {
      for (double a : grid) g[i].push_back(deviation_gain_from(q, x0, i, a).gain);
      gains.push_back(g[i]);
    }
    r["on_path_gains"] = gains;
    r["grid"] = grid;

    Json raw = defaults;
    raw.merge_patch(raw_cases[k]);
    if (raw.contains("critical_delta")) {
      const Json& cd = raw.at("critical_delta");
      const double lo = get_double(cd, "lo", "critical_delta");
      const double hi = get_double(cd, "hi", "critical_delta");
      const double res = get_double(cd, "resolution", 1e-6, "critical_delta");
      auto build = [&](double d) {
        CaseSpec cc = c;
        cc.game.delta = d;
        return cc.query(q.seed, q.jobs);
      };
      const auto crit = measured_critical_delta(build, lo, hi, tol, res, probes);
      r["critical_delta"] = {{"delta", crit.delta}, {"bracketed", crit.bracketed},
                             {"iterations", crit.iterations}, {"resolution", res}};
    }

    const Json& e = c.expect;
    bool want = true;
    const bool has_feasible = expect_bool(e, "feasible", want);
    if (has_feasible || !e.contains("indifferent"))
      ctx.check(c.name + ": feasible=" + (want ? "true" : "false"), rep.feasible == want,
                "worst gain " + num(rep.worst_gain) + " (agent " + std::to_string(rep.worst_agent) +
                    ", action " + num(rep.worst_action) + ", " + rep.worst_probe + ")");
    if (e.contains("max_residual")) {
      const double m = get_double(e, "max_residual", "expect");
      ctx.check(c.name + ": residual", rep.residual <= m, "residual " + num(rep.residual));
    }
    if (e.contains("indifferent")) {
      const Json& ind = e.at("indifferent");
      const auto acts = get_doubles(require(ind, "actions", "expect.indifferent"), "expect.indifferent.actions");
      const double itol = get_double(ind, "tol", 1e-6, "expect.indifferent");
      double worst = 0.0;
      for (std::size_t i = 0; i < q.profile.size(); ++i)
        for (double a : acts) worst = std::max(worst, std::abs(deviation_gain_from(q, x0, i, a).gain));
      ctx.check(c.name + ": indifferent", worst <= itol, "max |gain| over the listed actions " + num(worst));
    }
    if (e.contains("interior_loss")) {
      const double ltol = get_double(e, "interior_loss", "expect");
      double worst = -INFINITY;
      for (std::size_t i = 0; i < q.profile.size(); ++i)
        for (std::size_t k2 = 0; k2 < grid.size(); ++k2)
          if (grid[k2] > 0.0 && grid[k2] < 1.0) worst = std::max(worst, g[i][k2]);
      ctx.check(c.name + ": interior_loss", worst < -ltol, "largest interior gain " + num(worst));
    }
    out.push_back(std::move(r));
  }
  return Json{{"cases", out}, {"tol", tol}, {"probe_depth", probes.depth}};
}

Json run_classify(Context& ctx) {
  const Json& j = body(ctx);
  const auto cases = parse_cases(j);
  const auto queries = build_queries(ctx, cases);
  ClassifierOptions opt;
  opt.depth = get_size(j, "depth", opt.depth, "config");
  if (j.contains("action_alphabet")) opt.action_alphabet = get_doubles(j.at("action_alphabet"), "config.action_alphabet");
  opt.tol = get_double(j, "tol", opt.tol, "config");

  const auto flags = parallel_map(cases.size(), ctx.cfg.jobs,
                                  [&](std::size_t k) { return classify_all(queries[k], opt); });
  Json out = Json::array();
  std::ostringstream csv;
  csv << "case,strategy,ppe,ppe_public,info_subset,belief_free,atonement,reneg_proof,stage_nash\n";
  bool fact2 = true;
  std::string fact2_detail = "no case is public-path adapted and atoning";
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    const Json fj = flags_to_json(flags[k]);
    out.push_back({{"name", c.name}, {"strategy", c.strategy.label()}, {"flags", fj}});
    csv << csv_text(c.name) << ',' << csv_text(c.strategy.label());
    for (const char* key : {"ppe", "ppe_public", "info_subset", "belief_free", "atonement",
                            "reneg_proof", "stage_nash"})
      csv << ',' << (fj.at(key).get<bool>() ? 1 : 0);
    csv << '\n';
    for (const auto& [key, want] : c.expect.items()) {
      if (!fj.contains(key)) throw ConfigError("unknown classifier '" + key + "' in expect");
      const bool got = fj.at(key).get<bool>();
      ctx.check(c.name + ": " + key, got == want.get<bool>(), std::string("got ") + (got ? "true" : "false"));
    }
    if (flags[k].ppe_public && flags[k].atonement) {
      fact2 = false;
      fact2_detail = c.name + " is public-path adapted and atoning";
    }
  }
  ctx.check("fact2: public-path PPE never atones", fact2, fact2_detail);
  ctx.tables.push_back({"classify.csv", csv.str()});
  return Json{{"cases", out}, {"depth", opt.depth}, {"tol", opt.tol}};
}

// --- fragility ---------------------------------------------------------------

Json run_fragility(Context& ctx) {
  const Json& j = body(ctx);
  const CaseSpec c = parse_case(require(j, "case", "config"));
  const ValueQuery q = build_queries(ctx, {c}).front();
  const ShockDistribution shocks = parse_shocks(require(j, "shocks", "config"), "config.shocks");
  const std::size_t agent = get_size(j, "agent", 0, "config");
  const std::size_t n = get_size(j, "n_draws", 10000, "config");
  const std::size_t grid = get_size(j, "action_grid", 101, "config");
  if (agent >= c.game.n_agents) throw ConfigError("config.agent out of range");
  if (n == 0 || grid < 2) throw ConfigError("fragility needs draws and at least two grid actions");
  if (std::abs(shocks.mean() - c.game.kappa_bar()) > 1e-12)
    throw ConfigError("shock mean must equal the calibration kappa of the case");

  const auto r = fragility_experiment(q, agent, shocks, n, ctx.seed(1), grid);
  const Json& e = c.expect.is_object() && !c.expect.empty() ? c.expect
                  : (j.contains("expect") ? j.at("expect") : Json::object());
  if (e.contains("interior_br_frequency")) {
    const double w = get_double(e, "interior_br_frequency", "expect");
    ctx.check("interior_br_frequency", r.interior_br_frequency == w, "frequency " + num(r.interior_br_frequency));
  }
  if (e.contains("br_state_dependence_frequency")) {
    const double w = get_double(e, "br_state_dependence_frequency", "expect");
    ctx.check("br_state_dependence_frequency", r.br_state_dependence_frequency == w,
              "frequency " + num(r.br_state_dependence_frequency));
  }
  if (e.contains("non_stage_nash_ic_frequency")) {
    const double w = get_double(e, "non_stage_nash_ic_frequency", "expect");
    ctx.check("non_stage_nash_ic_frequency", r.non_stage_nash_ic_frequency == w,
              "frequency " + num(r.non_stage_nash_ic_frequency));
  }
  if (get_bool(e, "positive_violation", false, "expect"))
    ctx.check("positive_violation", r.mean_ic_violation > 0.0, "mean violation " + num(r.mean_ic_violation));
  if (e.contains("violation_matches_analytic")) {
    const double t = get_double(e, "violation_matches_analytic", "expect");
    const double d = std::abs(r.mean_ic_violation - r.analytic_ic_violation);
    ctx.check("violation_matches_analytic", d <= t, "|mean - analytic| = " + num(d));
  }
  Json out = fragility_to_json(r);
  out["name"] = c.name;
  out["strategy"] = c.strategy.label();
  out["agent"] = agent;
  out["shocks"] = shocks_to_json(shocks);
  out["population_gap"] = std::abs(r.mean_ic_violation - r.population_ic_violation);
  return out;
}

// --- sweep -------------------------------------------------------------------

double printed_threshold(MachineKind k, double kappa, std::size_t n) {
  switch (k) {
    case MachineKind::Grim: return grim_trigger_threshold(kappa, n);
    case MachineKind::PublicProportional: return public_proportional_threshold(kappa, n);
    case MachineKind::Atonement: return atonement_threshold(kappa);
    default: throw ConfigError("no printed threshold for this strategy");
  }
}

Json run_sweep(Context& ctx) {
  const Json& j = body(ctx);
  const Json& base = require(j, "base", "config");
  const Json& axes = require(j, "axes", "config");
  auto axis = [&](const char* key, std::vector<double> fallback) {
    return axes.contains(key) ? get_doubles(axes.at(key), std::string("axes.") + key) : fallback;
  };
  std::vector<Json> monitors{base.contains("monitoring") ? base.at("monitoring") : Json()};
  if (axes.contains("monitoring")) {
    if (!axes.at("monitoring").is_array() || axes.at("monitoring").empty())
      throw ConfigError("axes.monitoring must be a non-empty array");
    monitors.assign(axes.at("monitoring").begin(), axes.at("monitoring").end());
  }
  Json proto_json = base;
  proto_json["monitoring"] = monitors.front();
  const CaseSpec proto = parse_case(proto_json);
  const auto kappas = axis("kappa", {proto.game.kappa_bar()});
  const auto deltas = axis("delta", {proto.game.delta});
  const auto ns = axis("n_agents", {static_cast<double>(proto.game.n_agents)});
  const auto xs = axis("x", {});
  const double tol = get_double(j, "tol", 1e-9, "config");
  const ProbeOptions probes = parse_probes(j);
  const auto grid = j.contains("grid") ? get_doubles(j.at("grid"), "config.grid") : default_deviation_grid();
  const Json& e = j.contains("expect") ? j.at("expect") : Json::object();
  const std::string boundary = get_string(e, "boundary", "", "expect");

  struct Point {
    CaseSpec c;
    double kappa, delta;
    std::size_t n;
    std::optional<double> x;
    std::optional<ValueQuery> q;
    std::string skipped;
  };
  std::vector<Point> pts;
  const std::size_t nx = std::max<std::size_t>(1, xs.size());
  for (const Json& mon : monitors)
    for (double n : ns)
      for (double k : kappas)
        for (double d : deltas)
          for (std::size_t xi = 0; xi < nx; ++xi) {
            Json cj = base;
            cj["monitoring"] = mon;
            cj["game"]["n_agents"] = static_cast<std::size_t>(n);
            cj["game"]["kappa"] = k;
            cj["game"]["delta"] = d;
            if (!xs.empty()) cj["strategy"]["x"] = xs[xi];
            Point p{parse_case(cj), k, d, static_cast<std::size_t>(n), std::nullopt, std::nullopt, ""};
            if (!xs.empty()) p.x = xs[xi];
            try {
              p.q = p.c.query(ctx.seed(pts.size()), 1);
              p.q->validate();
            } catch (const ConfigError& err) {
              // Parameters outside the strategy's feasibility bounds.
              p.skipped = err.what();
            }
            pts.push_back(std::move(p));
          }

  const auto reps = parallel_map(pts.size(), ctx.cfg.jobs, [&](std::size_t k) {
    return pts[k].q ? std::optional(verify_equilibrium(*pts[k].q, grid, tol, probes)) : std::nullopt;
  });

  std::ostringstream csv;
  csv << "kappa,delta,N,strategy,feasible,worst_gain,residual\n";
  // Rows for points outside the strategy's bounds are left out of the CSV.
  Json out = Json::array();
  std::size_t n_feasible = 0, n_run = 0, boundary_mismatch = 0;
  double max_residual = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& p = pts[k];
    Json r{{"kappa", p.kappa}, {"delta", p.delta}, {"n_agents", p.n}, {"strategy", p.c.strategy.label()},
           {"monitoring", monitoring_kind_name(p.c.monitoring.kind)}};
    if (p.x) r["x"] = *p.x;
    if (!reps[k]) {
      r["skipped"] = p.skipped;
      out.push_back(std::move(r));
      continue;
    }
    const auto& rep = *reps[k];
    ++n_run;
    if (rep.feasible) ++n_feasible;
    max_residual = std::max(max_residual, rep.residual);
    r["feasible"] = rep.feasible;
    r["worst_gain"] = rep.worst_gain;
    r["residual"] = rep.residual;
    if (!boundary.empty()) {
      const double th = printed_threshold(p.c.strategy.kind, p.kappa, p.n);
      r["printed_threshold"] = th;
      if (rep.feasible != (p.delta >= th)) ++boundary_mismatch;
    }
    csv << num(p.kappa) << ',' << num(p.delta) << ',' << p.n << ',' << csv_text(p.c.strategy.label()) << ','
        << (rep.feasible ? 1 : 0) << ',' << num(rep.worst_gain) << ',' << num(rep.residual) << '\n';
    out.push_back(std::move(r));
  }
  ctx.tables.push_back({"sweep.csv", csv.str()});
  if (get_bool(e, "all_feasible", false, "expect"))
    ctx.check("all_feasible", n_feasible == n_run,
              std::to_string(n_feasible) + " of " + std::to_string(n_run) + " points feasible");
  if (e.contains("max_residual")) {
    const double m = get_double(e, "max_residual", "expect");
    ctx.check("max_residual", max_residual <= m, "max residual " + num(max_residual));
  }
  if (e.contains("min_points")) {
    const std::size_t m = get_size(e, "min_points", 0, "expect");
    ctx.check("min_points", n_run >= m, std::to_string(n_run) + " points verified");
  }
  if (!boundary.empty())
    ctx.check("printed_boundary", boundary_mismatch == 0,
              std::to_string(boundary_mismatch) + " points disagree with the printed threshold");
  return Json{{"points", out}, {"n_verified", n_run}, {"n_feasible", n_feasible},
              {"max_residual", max_residual}, {"tol", tol}};
}

std::string summarize(const Json& report, const std::vector<Check>& checks) {
  std::ostringstream os;
  os << report.at("name").get<std::string>() << " (" << report.at("kind").get<std::string>()
     << ", seed " << report.at("seed").get<std::uint64_t>() << ")\n";
  os << "status: " << report.at("status").get<std::string>() << "\n";
  for (const auto& c : checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  return os.str();
}

void write_atomic(const std::filesystem::path& p, const std::string& text) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write " + tmp.string());
    o << text;
    if (!o.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace

std::string_view experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Mech: return "mech";
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::Fragility: return "fragility";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Mech, ExperimentKind::Simulate, ExperimentKind::Verify,
                 ExperimentKind::Classify, ExperimentKind::Fragility, ExperimentKind::Sweep})
    if (experiment_kind_name(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const std::string schema = get_string(j, "schema", "", "config");
  if (schema != kConfigSchema)
    throw ConfigError("config.schema must be \"" + std::string(kConfigSchema) + "\"");
  ExperimentConfig c;
  c.kind = parse_experiment_kind(get_string(j, "kind", "", "config"));
  c.name = get_string(j, "name", "", "config");
  if (c.name.empty()) throw ConfigError("config.name is required");
  c.seed = get_u64(j, "seed", "config");
  c.jobs = static_cast<unsigned>(get_size(j, "jobs", 1, "config"));
  if (c.jobs == 0) throw ConfigError("config.jobs must be at least 1");
  c.out = get_string(j, "out", "", "config");
  c.body = j;
  return c;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  body["seed"] = s;
}

void ExperimentConfig::set_jobs(unsigned j) {
  if (j == 0) throw ConfigError("--jobs must be at least 1");
  jobs = j;
  body["jobs"] = j;
}

ExperimentConfig load_config(const std::filesystem::path& p) {
  return ExperimentConfig::from_json(read_json_file(p));
}

bool ReportBundle::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ReportBundle run(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Context ctx{cfg, {}, {}};
  Json payload;
  try {
    switch (cfg.kind) {
      case ExperimentKind::Mech: payload = run_mech(ctx); break;
      case ExperimentKind::Simulate: payload = run_simulate(ctx); break;
      case ExperimentKind::Verify: payload = run_verify(ctx); break;
      case ExperimentKind::Classify: payload = run_classify(ctx); break;
      case ExperimentKind::Fragility: payload = run_fragility(ctx); break;
      case ExperimentKind::Sweep: payload = run_sweep(ctx); break;
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ReportBundle b;
  b.checks = std::move(ctx.checks);
  b.tables = std::move(ctx.tables);
  Json checks = Json::array();
  for (const auto& c : b.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  Json config = cfg.body;
  config.erase("jobs");
  config.erase("out");
  b.report = Json{{"schema", kReportSchema},
                  {"version", kVersion},
                  {"name", cfg.name},
                  {"kind", experiment_kind_name(cfg.kind)},
                  {"seed", cfg.seed},
                  {"config", config},
                  {"status", b.passed() ? "pass" : "fail"},
                  {"checks", checks},
                  {"payload", payload},
                  {"timing", {{"runtime_seconds", secs}, {"jobs", cfg.jobs}}}};
  b.summary = summarize(b.report, b.checks);
  return b;
}

void write_bundle(const ReportBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / "report.json", b.report.dump(2) + "\n");
  write_atomic(dir / "summary.txt", b.summary);
  for (const auto& t : b.tables) write_atomic(dir / t.file, t.text);
}

std::optional<std::string> first_divergence(const Json& a, const Json& b, const std::string& path) {
  const std::string here = path.empty() ? "/" : path;
  if (a.type() != b.type()) {
    // 1 and 1.0 may round-trip as different JSON number types.
    if (a.is_number() && b.is_number() && a.get<double>() == b.get<double>()) return std::nullopt;
    return here;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) return path + "/" + k;
      if (auto d = first_divergence(v, b.at(k), path + "/" + k)) return d;
    }
    for (const auto& [k, v] : b.items())
      if (!a.contains(k)) return path + "/" + k;
    return std::nullopt;
  }
  if (a.is_array()) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i)
      if (auto d = first_divergence(a[i], b[i], path + "/" + std::to_string(i))) return d;
    if (a.size() != b.size()) return path + "/" + std::to_string(n);
    return std::nullopt;
  }
  if (a.is_number_float())
    return std::bit_cast<std::uint64_t>(a.get<double>()) == std::bit_cast<std::uint64_t>(b.get<double>())
               ? std::nullopt
               : std::optional(here);
  return a == b ? std::nullopt : std::optional(here);
}

ReplayResult replay(const Json& recorded, const std::optional<ExperimentConfig>& cfg) {
  if (!recorded.is_object() || recorded.value("schema", "") != kReportSchema)
    throw IncompatibleBundle("not a " + std::string(kReportSchema) + " report");
  const std::string version = recorded.value("version", "");
  if (version != kVersion)
    throw IncompatibleBundle("bundle version " + version + " does not match this build (" + kVersion + ")");
  ExperimentConfig c = cfg ? *cfg : ExperimentConfig::from_json(recorded.at("config"));
  ReplayResult r;
  r.rerun = run(c);
  for (const char* key : {"seed", "status", "checks", "payload"}) {
    if (!recorded.contains(key)) throw IncompatibleBundle(std::string("report lacks ") + key);
    if (auto d = first_divergence(recorded.at(key), r.rerun.report.at(key), std::string("/") + key)) {
      r.first_divergence = *d;
      r.detail = "first divergence at " + *d;
      return r;
    }
  }
  r.match = true;
  r.detail = "payload matches bit for bit";
  return r;
}

}  // namespace purify
