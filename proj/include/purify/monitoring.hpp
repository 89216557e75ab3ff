#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "purify/prefs.hpp"
#include "purify/rng.hpp"

namespace purify {

enum class MonitoringKind {
  Perfect,
  DeterministicPublicSum,
  NoisyPublicSum,
  PrivateNeighbor,
  DeterministicPrivateNeighbor,
};

std::string_view monitoring_kind_name(MonitoringKind kind);
MonitoringKind parse_monitoring_kind(std::string_view name);

// Bounded noise with an exact mean. A signal with mean y lives on [lo, hi].
//
// triangular: (1 - eta) * Tri(c - w', c, c + w') + eta * Uniform[lo, hi], with
//   eta = min(eps0, eps1) / (2 (hi - lo)) for full support, c chosen so the
//   mixture mean is exactly y, and w' = min(w, c - lo, hi - c).
// truncated_gaussian: N(mu, sigma) truncated to [lo, hi], mu solved so the
//   truncated mean is y.
struct NoiseFamily {
  enum class Shape { Triangular, TruncatedGaussian };
  Shape shape = Shape::Triangular;
  double half_width = 0.25;  // triangular
  double sigma = 0.1;        // truncated_gaussian

  void validate() const;
  friend bool operator==(const NoiseFamily&, const NoiseFamily&) = default;
};

// Parameters of one signal draw, resolved for a particular mean.
struct NoiseDraw {
  NoiseFamily::Shape shape = NoiseFamily::Shape::Triangular;
  double lo = 0.0, hi = 0.0;
  double mean = 0.0;
  // triangular
  double eta = 0.0, centre = 0.0, width = 0.0;
  // truncated_gaussian
  double mu = 0.0, sigma = 0.0;

  friend bool operator==(const NoiseDraw&, const NoiseDraw&) = default;
};

NoiseDraw resolve_noise(const NoiseFamily& family, double mean, double lo, double hi,
                        double eps0, double eps1);
double sample_noise(const NoiseDraw& d, CounterRng& rng);
// Analytic mean of the resolved distribution.
double noise_mean(const NoiseDraw& d);

struct SignalStructure {
  MonitoringKind kind = MonitoringKind::Perfect;
  std::size_t n_agents = 2;
  std::vector<std::size_t> neighbor;  // pi(i): whose action agent i observes
  NoiseFamily noise;
  double eps0 = 0.05;
  double eps1 = 0.05;

  static SignalStructure perfect(std::size_t n);
  static SignalStructure deterministic_public_sum(std::size_t n);
  static SignalStructure noisy_public_sum(std::size_t n, NoiseFamily noise, double eps0, double eps1);
  static SignalStructure private_neighbor(std::vector<std::size_t> pi, NoiseFamily noise,
                                          double eps0, double eps1);
  static SignalStructure deterministic_private_neighbor(std::vector<std::size_t> pi);
  // pi(i) = i + 1 mod n
  static std::vector<std::size_t> cyclic(std::size_t n);

  bool noisy() const;
  bool public_kind() const;
  bool private_kind() const;
  // Support [lower, upper] of the monitored signal (private part for neighbor
  // kinds, public sum otherwise).
  double signal_lower() const;
  double signal_upper() const;
  void validate() const;
  friend bool operator==(const SignalStructure&, const SignalStructure&) = default;
};

// What agent i sees at the end of a period. Fields that a structure does not
// provide are NaN (or empty for the profile).
struct AgentSignal {
  double own_action = 0.0;
  double public_signal = 0.0;
  double private_signal = 0.0;
  std::vector<double> profile;  // perfect monitoring only
};

std::vector<AgentSignal> sample_signals(const SignalStructure& ss, std::span<const double> actions,
                                        CounterRng& rng);
// Signals with every noisy draw replaced by its mean.
std::vector<AgentSignal> mean_signals(const SignalStructure& ss, std::span<const double> actions);
// Allocation-free variant for hot loops; reuses `out`.
void mean_signals_into(const SignalStructure& ss, std::span<const double> actions,
                       std::vector<AgentSignal>& out);
// Build signals from an explicit monitored value (public sum or the observed
// neighbour's signal per agent). Used by probes.
std::vector<AgentSignal> signals_with_values(const SignalStructure& ss,
                                             std::span<const double> actions,
                                             std::span<const double> observed);
// The mean of the monitored quantity for each agent: sum a (public kinds) or
// a_{pi(i)} (neighbour kinds).
std::vector<double> monitored_means(const SignalStructure& ss, std::span<const double> actions);

// Per-agent distribution parameters of the non-echo part of the signal.
std::vector<std::vector<double>> signal_distribution_params(const SignalStructure& ss,
                                                            std::span<const double> actions);

struct StructureFlags {
  bool is_public = false;
  bool is_private = false;
  bool noisy = false;
  bool deterministic = false;
  bool anonymous = false;
  friend bool operator==(const StructureFlags&, const StructureFlags&) = default;
};

StructureFlags classify_structure(const SignalStructure& ss, std::size_t n_permutations = 100,
                                  RandomSeed rng = {0x5eed, 0});

// Uniformly random permutation (Fisher-Yates on the counter stream).
std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng);

}  // namespace purify
