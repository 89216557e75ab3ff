#include "purify/monitoring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace purify {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Upper tail Q(x) = P(Z > x).
double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double std_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Mass P(a < Z < b), computed on the tail that keeps precision.
double interval_mass(double a, double b) {
  if (a > 0.0) return upper_tail(a) - upper_tail(b);
  if (b < 0.0) return upper_tail(-b) - upper_tail(-a);
  return 1.0 - upper_tail(b) - upper_tail(-a);
}

double truncated_mean(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double z = interval_mass(a, b);
  if (!(z > 0.0)) return a > 0.0 ? lo : hi;
  return mu + sigma * (std_pdf(a) - std_pdf(b)) / z;
}

double solve_location(double target, double sigma, double lo, double hi) {
  double a = lo - 40.0 * sigma;
  double b = hi + 40.0 * sigma;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (truncated_mean(m, sigma, lo, hi) < target) a = m; else b = m;
    if (b - a <= 1e-15 * std::max(1.0, std::abs(m))) break;
  }
  return 0.5 * (a + b);
}

void check_actions(std::span<const double> actions, std::size_t n) {
  if (actions.size() != n) throw DomainError("action profile has the wrong number of agents");
  for (double a : actions)
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("action outside [0, 1]");
}

}  // namespace

std::string_view monitoring_kind_name(MonitoringKind kind) {
  switch (kind) {
    case MonitoringKind::Perfect: return "perfect";
    case MonitoringKind::DeterministicPublicSum: return "deterministic_public_sum";
    case MonitoringKind::NoisyPublicSum: return "noisy_public_sum";
    case MonitoringKind::PrivateNeighbor: return "private_neighbor";
    case MonitoringKind::DeterministicPrivateNeighbor: return "deterministic_private_neighbor";
  }
  return "?";
}

MonitoringKind parse_monitoring_kind(std::string_view name) {
  for (auto k : {MonitoringKind::Perfect, MonitoringKind::DeterministicPublicSum,
                 MonitoringKind::NoisyPublicSum, MonitoringKind::PrivateNeighbor,
                 MonitoringKind::DeterministicPrivateNeighbor})
    if (monitoring_kind_name(k) == name) return k;
  throw ConfigError("unknown monitoring kind '" + std::string(name) + "'");
}

void NoiseFamily::validate() const {
  if (shape == Shape::Triangular && !(half_width > 0.0))
    throw ConfigError("triangular noise needs half_width > 0");
  if (shape == Shape::TruncatedGaussian && !(sigma > 0.0))
    throw ConfigError("truncated gaussian noise needs sigma > 0");
}

NoiseDraw resolve_noise(const NoiseFamily& family, double mean, double lo, double hi,
                        double eps0, double eps1) {
  if (!(mean >= lo + eps0 - 1e-12 && mean <= hi - eps1 + 1e-12))
    throw DomainError("signal mean outside the feasible range");
  NoiseDraw d;
  d.shape = family.shape;
  d.lo = lo;
  d.hi = hi;
  d.mean = mean;
  if (family.shape == NoiseFamily::Shape::Triangular) {
    d.eta = 0.5 * std::min(eps0, eps1) / (hi - lo);
    d.centre = (mean - d.eta * 0.5 * (lo + hi)) / (1.0 - d.eta);
    d.width = std::max(0.0, std::min({family.half_width, d.centre - lo, hi - d.centre}));
  } else {
    d.sigma = family.sigma;
    d.mu = solve_location(mean, family.sigma, lo, hi);
  }
  return d;
}

double noise_mean(const NoiseDraw& d) {
  if (d.shape == NoiseFamily::Shape::Triangular)
    return (1.0 - d.eta) * d.centre + d.eta * 0.5 * (d.lo + d.hi);
  return truncated_mean(d.mu, d.sigma, d.lo, d.hi);
}

double sample_noise(const NoiseDraw& d, CounterRng& rng) {
  if (d.shape == NoiseFamily::Shape::Triangular) {
    // Always three draws so the stream position does not depend on the branch.
    const double pick = rng.uniform();
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    if (pick < d.eta) return d.lo + (d.hi - d.lo) * u1;
    return d.centre + d.width * (u1 + u2 - 1.0);
  }
  static const boost::math::normal_distribution<double> z;
  const double a = (d.lo - d.mu) / d.sigma;
  const double b = (d.hi - d.mu) / d.sigma;
  const double u = rng.uniform_open();
  double x;
  if (a > 0.0) {
    const double qa = upper_tail(a), qb = upper_tail(b);
    x = boost::math::quantile(boost::math::complement(z, qa - u * (qa - qb)));
  } else {
    const double pa = upper_tail(-a), pb = upper_tail(-b);
    x = boost::math::quantile(z, pa + u * (pb - pa));
  }
  return std::clamp(d.mu + d.sigma * x, d.lo, d.hi);
}

SignalStructure SignalStructure::perfect(std::size_t n) {
  SignalStructure s;
  s.kind = MonitoringKind::Perfect;
  s.n_agents = n;
  s.eps0 = s.eps1 = 0.0;
  s.validate();
  return s;
}

SignalStructure SignalStructure::deterministic_public_sum(std::size_t n) {
  SignalStructure s = perfect(n);
  s.kind = MonitoringKind::DeterministicPublicSum;
  return s;
}

SignalStructure SignalStructure::noisy_public_sum(std::size_t n, NoiseFamily noise, double eps0,
                                                  double eps1) {
  SignalStructure s;
  s.kind = MonitoringKind::NoisyPublicSum;
  s.n_agents = n;
  s.noise = noise;
  s.eps0 = eps0;
  s.eps1 = eps1;
  s.validate();
  return s;
}

SignalStructure SignalStructure::private_neighbor(std::vector<std::size_t> pi, NoiseFamily noise,
                                                  double eps0, double eps1) {
  SignalStructure s;
  s.kind = MonitoringKind::PrivateNeighbor;
  s.n_agents = pi.size();
  s.neighbor = std::move(pi);
  s.noise = noise;
  s.eps0 = eps0;
  s.eps1 = eps1;
  s.validate();
  return s;
}

SignalStructure SignalStructure::deterministic_private_neighbor(std::vector<std::size_t> pi) {
  SignalStructure s;
  s.kind = MonitoringKind::DeterministicPrivateNeighbor;
  s.n_agents = pi.size();
  s.neighbor = std::move(pi);
  s.eps0 = s.eps1 = 0.0;
  s.validate();
  return s;
}

std::vector<std::size_t> SignalStructure::cyclic(std::size_t n) {
  std::vector<std::size_t> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = (i + 1) % n;
  return pi;
}

bool SignalStructure::noisy() const {
  return kind == MonitoringKind::NoisyPublicSum || kind == MonitoringKind::PrivateNeighbor;
}

bool SignalStructure::public_kind() const {
  return kind == MonitoringKind::Perfect || kind == MonitoringKind::DeterministicPublicSum ||
         kind == MonitoringKind::NoisyPublicSum;
}

bool SignalStructure::private_kind() const { return !public_kind(); }

double SignalStructure::signal_lower() const { return noisy() ? -eps0 : 0.0; }

double SignalStructure::signal_upper() const {
  const double m = private_kind() ? 1.0 : static_cast<double>(n_agents);
  return noisy() ? m + eps1 : m;
}

void SignalStructure::validate() const {
  if (n_agents < 2) throw ConfigError("monitoring needs at least two agents");
  if (!(eps0 >= 0.0 && eps1 >= 0.0)) throw ConfigError("eps0 and eps1 must be non-negative");
  if (noisy()) {
    if (!(eps0 > 0.0 && eps1 > 0.0))
      throw ConfigError("noisy monitoring needs eps0, eps1 > 0 for full support");
    noise.validate();
  }
  if (private_kind()) {
    if (neighbor.size() != n_agents) throw ConfigError("neighbour map needs one entry per agent");
    std::vector<bool> hit(n_agents, false);
    for (std::size_t i = 0; i < n_agents; ++i) {
      const std::size_t j = neighbor[i];
      if (j >= n_agents) throw ConfigError("neighbour index out of range");
      if (j == i) throw ConfigError("neighbour map has a fixed point");
      if (hit[j]) throw ConfigError("neighbour map is not a bijection");
      hit[j] = true;
    }
  }
}

std::vector<double> monitored_means(const SignalStructure& ss, std::span<const double> actions) {
  std::vector<double> out(ss.n_agents);
  if (ss.public_kind()) {
    double total = 0.0;
    for (double a : actions) total += a;
    std::fill(out.begin(), out.end(), total);
  } else {
    for (std::size_t i = 0; i < ss.n_agents; ++i) out[i] = actions[ss.neighbor[i]];
  }
  return out;
}

std::vector<AgentSignal> signals_with_values(const SignalStructure& ss,
                                             std::span<const double> actions,
                                             std::span<const double> observed) {
  std::vector<AgentSignal> out(ss.n_agents);
  for (std::size_t i = 0; i < ss.n_agents; ++i) {
    AgentSignal& s = out[i];
    s.own_action = actions[i];
    if (ss.public_kind()) {
      s.public_signal = observed[i];
      s.private_signal = kNaN;
      if (ss.kind == MonitoringKind::Perfect) s.profile.assign(actions.begin(), actions.end());
    } else {
      s.public_signal = kNaN;
      s.private_signal = observed[i];
    }
  }
  return out;
}

std::vector<AgentSignal> mean_signals(const SignalStructure& ss, std::span<const double> actions) {
  std::vector<AgentSignal> out;
  mean_signals_into(ss, actions, out);
  return out;
}

void mean_signals_into(const SignalStructure& ss, std::span<const double> actions,
                       std::vector<AgentSignal>& out) {
  check_actions(actions, ss.n_agents);
  out.resize(ss.n_agents);
  const bool pub = ss.public_kind();
  double total = 0.0;
  if (pub)
    for (double a : actions) total += a;
  for (std::size_t i = 0; i < ss.n_agents; ++i) {
    AgentSignal& s = out[i];
    s.own_action = actions[i];
    if (pub) {
      s.public_signal = total;
      s.private_signal = kNaN;
      if (ss.kind == MonitoringKind::Perfect) s.profile.assign(actions.begin(), actions.end());
      else s.profile.clear();
    } else {
      s.public_signal = kNaN;
      s.private_signal = actions[ss.neighbor[i]];
      s.profile.clear();
    }
  }
}

std::vector<AgentSignal> sample_signals(const SignalStructure& ss, std::span<const double> actions,
                                        CounterRng& rng) {
  check_actions(actions, ss.n_agents);
  std::vector<double> obs = monitored_means(ss, actions);
  if (ss.kind == MonitoringKind::NoisyPublicSum) {
    const auto d = resolve_noise(ss.noise, obs[0], ss.signal_lower(), ss.signal_upper(), ss.eps0, ss.eps1);
    const double s = sample_noise(d, rng);
    std::fill(obs.begin(), obs.end(), s);
  } else if (ss.kind == MonitoringKind::PrivateNeighbor) {
    for (std::size_t i = 0; i < ss.n_agents; ++i) {
      const auto d = resolve_noise(ss.noise, obs[i], ss.signal_lower(), ss.signal_upper(), ss.eps0, ss.eps1);
      obs[i] = sample_noise(d, rng);
    }
  }
  return signals_with_values(ss, actions, obs);
}

std::vector<std::vector<double>> signal_distribution_params(const SignalStructure& ss,
                                                            std::span<const double> actions) {
  check_actions(actions, ss.n_agents);
  std::vector<std::vector<double>> out(ss.n_agents);
  if (ss.kind == MonitoringKind::Perfect) {
    for (auto& p : out) p.assign(actions.begin(), actions.end());
    return out;
  }
  const auto m = monitored_means(ss, actions);
  for (std::size_t i = 0; i < ss.n_agents; ++i) {
    if (!ss.noisy()) {
      out[i] = {m[i]};
      continue;
    }
    const auto d = resolve_noise(ss.noise, m[i], ss.signal_lower(), ss.signal_upper(), ss.eps0, ss.eps1);
    out[i] = {d.lo, d.hi, d.mean, d.eta, d.centre, d.width, d.mu, d.sigma};
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

StructureFlags classify_structure(const SignalStructure& ss, std::size_t n_permutations,
                                  RandomSeed seed) {
  ss.validate();
  StructureFlags f;
  f.is_public = ss.public_kind();
  f.is_private = ss.private_kind();
  f.noisy = ss.noisy();
  f.deterministic = !f.noisy;

  // Distinct dyadic contributions keep every sum exact, so parameter
  // comparison can be bitwise.
  const std::size_t n = ss.n_agents;
  std::vector<double> probe(n);
  for (std::size_t i = 0; i < n; ++i)
    probe[i] = static_cast<double>(i + 1) / static_cast<double>(std::bit_ceil(n + 1));
  const auto base = signal_distribution_params(ss, probe);

  CounterRng rng(seed);
  f.anonymous = true;
  std::vector<double> permuted(n);
  for (std::size_t k = 0; k < n_permutations && f.anonymous; ++k) {
    const auto p = random_permutation(n, rng);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = probe[p[i]];
    if (signal_distribution_params(ss, permuted) != base) f.anonymous = false;
  }
  return f;
}

}  // namespace purify
