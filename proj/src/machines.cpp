#include "purify/machines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace purify {

namespace {

constexpr double kBoundTol = 1e-12;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double sum(std::span<const double> v) {
  double acc = 0.0;
  for (double a : v) acc += a;
  return acc;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void record(BoundCheck& c, double slack, const std::string& what) {
  if (slack < c.slack) c.slack = slack;
  if (slack < -kBoundTol && c.ok) {
    c.ok = false;
    c.violated = what;
  }
}

}  // namespace

std::string_view machine_kind_name(MachineKind kind) {
  switch (kind) {
    case MachineKind::Constant: return "constant";
    case MachineKind::Grim: return "grim_trigger";
    case MachineKind::ProportionalResponse: return "proportional_response";
    case MachineKind::PublicProportional: return "public_proportional";
    case MachineKind::Atonement: return "atonement";
    case MachineKind::BeliefBased: return "belief_based";
  }
  return "?";
}

MachineKind parse_machine_kind(std::string_view name) {
  for (auto k : {MachineKind::Constant, MachineKind::Grim, MachineKind::ProportionalResponse,
                 MachineKind::PublicProportional, MachineKind::Atonement, MachineKind::BeliefBased})
    if (machine_kind_name(k) == name) return k;
  throw ConfigError("unknown strategy kind '" + std::string(name) + "'");
}

MachineState Machine::initial() const {
  MachineState s;
  switch (kind) {
    case MachineKind::Constant: s.raw = constant; break;
    case MachineKind::Grim: s.raw = 1.0; break;
    case MachineKind::ProportionalResponse:
    case MachineKind::PublicProportional: s.raw = x[agent]; break;
    case MachineKind::Atonement:
    case MachineKind::BeliefBased:
      s.raw = 1.0;
      s.expected_total = static_cast<double>(n_agents);
      break;
  }
  return s;
}

double Machine::prescription(const MachineState& s) const {
  if (kind == MachineKind::Grim) return s.punished ? 0.0 : 1.0;
  return clip01(s.raw);
}

double Machine::act(const MachineState& s, double latent_uniform) const {
  if (kind == MachineKind::BeliefBased && latent_uniform < rho) return 0.0;
  return prescription(s);
}

bool Machine::linear() const {
  return kind == MachineKind::Constant || kind == MachineKind::ProportionalResponse ||
         kind == MachineKind::PublicProportional;
}

double monitored_signal(const Machine& m, const AgentSignal& sig) {
  if (m.kind == MachineKind::ProportionalResponse) {
    if (!std::isnan(sig.private_signal)) return sig.private_signal;
    if (!sig.profile.empty()) return sig.profile[m.observed];
    throw ConfigError("proportional response needs to observe its neighbour");
  }
  if (!std::isnan(sig.public_signal)) return sig.public_signal;
  return sig.private_signal;
}

MachineState Machine::observe(const MachineState& s, double own_action,
                              const AgentSignal& sig) const {
  MachineState next = s;
  const double n = static_cast<double>(n_agents);
  switch (kind) {
    case MachineKind::Constant:
      break;
    case MachineKind::Grim: {
      // Shortfall against the full-contribution benchmark of what is observed.
      const bool priv = std::isnan(sig.public_signal);
      const double benchmark = priv ? 1.0 : n;
      if (monitored_signal(*this, sig) < benchmark - kLowSignalTol) next.punished = true;
      next.raw = next.punished ? 0.0 : 1.0;
      break;
    }
    case MachineKind::ProportionalResponse:
      next.raw = x[agent] + alpha * (monitored_signal(*this, sig) - x[observed]);
      break;
    case MachineKind::PublicProportional:
      next.raw = x[agent] + alpha * (monitored_signal(*this, sig) - sum(x));
      break;
    case MachineKind::Atonement: {
      const double sp = monitored_signal(*this, sig);
      if (sp < s.expected_total - kLowSignalTol) {
        next.raw = 1.0 + alpha * ((sp - own_action) - (s.expected_total - s.raw));
        next.expected_total = n + (n - 1.0) * alpha * (sp - s.expected_total);
      } else {
        next.raw = 1.0;
        next.expected_total = n;
      }
      break;
    }
    case MachineKind::BeliefBased: {
      const double sp = monitored_signal(*this, sig);
      const double shaded = std::max(0.0, 1.0 - alpha);
      if (sp < s.expected_total - kLowSignalTol) {
        const bool followed = std::abs(own_action - prescription(s)) <= 1e-12;
        next.raw = followed ? shaded : 1.0;
        // Others who kept to their prescriptions shade; a shortfall among them
        // is attributed to a single agent, which is exact at N = 2.
        const double others_played = sp - own_action;
        const double others_prescribed = s.expected_total - prescription(s);
        const double others_next = others_played >= others_prescribed - kLowSignalTol
                                       ? (n - 1.0) * shaded
                                       : (n - 2.0) * shaded + 1.0;
        next.expected_total = next.raw + others_next;
      } else {
        next.raw = 1.0;
        next.expected_total = n;
      }
      break;
    }
  }
  return next;
}

BoundCheck proportional_response_bounds(double alpha, std::span<const double> x,
                                        std::span<const std::size_t> pi, double eps0,
                                        double eps1) {
  BoundCheck c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xo = x[pi[i]];
    record(c, x[i] - alpha * (xo + eps0),
           "agent " + std::to_string(i) + ": alpha2 (x_pi + eps0) <= x_i fails (" +
               fmt(alpha * (xo + eps0)) + " > " + fmt(x[i]) + ")");
    record(c, 1.0 - alpha * (1.0 + eps1 - xo) - x[i],
           "agent " + std::to_string(i) + ": x_i <= 1 - alpha2 (1 + eps1 - x_pi) fails (" +
               fmt(x[i]) + " > " + fmt(1.0 - alpha * (1.0 + eps1 - xo)) + ")");
  }
  return c;
}

BoundCheck public_proportional_bounds(double alpha, std::span<const double> x, double eps0,
                                      double eps1) {
  BoundCheck c;
  const double total = sum(x);
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    record(c, x[i] - alpha * (eps0 + total),
           "agent " + std::to_string(i) + ": alphaN (eps0 + x) <= x_i fails (" +
               fmt(alpha * (eps0 + total)) + " > " + fmt(x[i]) + ")");
    record(c, 1.0 - alpha * (n + eps1 - total) - x[i],
           "agent " + std::to_string(i) + ": x_i <= 1 - alphaN (N + eps1 - x) fails (" +
               fmt(x[i]) + " > " + fmt(1.0 - alpha * (n + eps1 - total)) + ")");
  }
  return c;
}

Profile constant_profile(std::size_t n, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("constant contribution must lie in [0, 1]");
  Profile p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i].kind = MachineKind::Constant;
    p[i].agent = i;
    p[i].n_agents = n;
    p[i].constant = c;
  }
  return p;
}

Profile grim_profile(std::size_t n) {
  Profile p = constant_profile(n, 0.0);
  for (auto& m : p) m.kind = MachineKind::Grim;
  return p;
}

Profile proportional_response_profile(const GameParams& g, std::vector<double> x,
                                      std::vector<std::size_t> pi, double eps0, double eps1,
                                      bool check_bounds) {
  g.validate();
  if (x.size() != g.n_agents || pi.size() != g.n_agents)
    throw ConfigError("proportional response needs x and pi for every agent");
  const double alpha = proportionality_constant(g, ResponseScope::Neighbor);
  if (check_bounds) {
    const auto c = proportional_response_bounds(alpha, x, pi, eps0, eps1);
    if (!c.ok) throw ConfigError("infeasible expected contributions: " + c.violated);
  }
  Profile p = constant_profile(g.n_agents, 0.0);
  for (std::size_t i = 0; i < g.n_agents; ++i) {
    p[i].kind = MachineKind::ProportionalResponse;
    p[i].alpha = alpha;
    p[i].x = x;
    p[i].observed = pi[i];
  }
  return p;
}

Profile public_proportional_profile(const GameParams& g, std::vector<double> x, double eps0,
                                    double eps1, Calibration calibration, bool check_bounds) {
  g.validate();
  if (x.size() != g.n_agents) throw ConfigError("public proportional needs x for every agent");
  double alpha = proportionality_constant(g, ResponseScope::Public);
  if (calibration == Calibration::Recursive) alpha *= g.kappa_bar();
  if (check_bounds) {
    const auto c = public_proportional_bounds(alpha, x, eps0, eps1);
    if (!c.ok) throw ConfigError("infeasible expected contributions: " + c.violated);
  }
  Profile p = constant_profile(g.n_agents, 0.0);
  for (std::size_t i = 0; i < g.n_agents; ++i) {
    p[i].kind = MachineKind::PublicProportional;
    p[i].alpha = alpha;
    p[i].x = x;
  }
  return p;
}

Profile atonement_profile(const GameParams& g) {
  g.validate();
  Profile p = constant_profile(g.n_agents, 0.0);
  const double alpha = proportionality_constant(g, ResponseScope::Public);
  for (auto& m : p) {
    m.kind = MachineKind::Atonement;
    m.alpha = alpha;
  }
  return p;
}

Profile belief_based_profile(const GameParams& g, double rho, std::optional<double> alpha) {
  g.validate();
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("belief-based rho must lie in [0, 1)");
  Profile p = constant_profile(g.n_agents, 0.0);
  const double a = alpha.value_or(proportionality_constant(g, ResponseScope::Public) / (1.0 - rho));
  for (auto& m : p) {
    m.kind = MachineKind::BeliefBased;
    m.alpha = a;
    m.rho = rho;
  }
  return p;
}

}  // namespace purify
