#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "purify/game.hpp"
#include "purify/monitoring.hpp"
#include "purify/rng.hpp"

namespace purify {

enum class MachineKind {
  Constant,
  Grim,
  ProportionalResponse,
  PublicProportional,
  Atonement,
  BeliefBased,
};

std::string_view machine_kind_name(MachineKind kind);
MachineKind parse_machine_kind(std::string_view name);

// Threshold below which an observed signal counts as low. Guards the
// deterministic comparisons against last-bit drift in the recursions.
inline constexpr double kLowSignalTol = 1e-9;

// Internal state of one agent's machine. Unused fields stay at zero so that
// states compare equal exactly when the machine would behave identically.
struct MachineState {
  bool punished = false;        // grim
  double raw = 0.0;             // own prescription before clipping to [0, 1]
  double expected_total = 0.0;  // atonement / belief-based x_t
  friend bool operator==(const MachineState&, const MachineState&) = default;
  friend auto operator<=>(const MachineState&, const MachineState&) = default;
};

struct Machine {
  MachineKind kind = MachineKind::Constant;
  std::size_t agent = 0;
  std::size_t n_agents = 2;
  double alpha = 0.0;
  double rho = 0.0;
  double constant = 0.0;
  std::vector<double> x;      // expected contributions (proportional kinds)
  std::size_t observed = 0;   // pi(i) for proportional response

  MachineState initial() const;
  // Deterministic part of the prescription, clipped to [0, 1].
  double prescription(const MachineState& s) const;
  // Action actually played. Belief-based machines use the latent coin.
  double act(const MachineState& s, double latent_uniform) const;
  // Probability and value of the latent-zero branch (belief-based).
  bool randomizes() const { return kind == MachineKind::BeliefBased; }
  // Prescription is an affine function of past signals.
  bool linear() const;

  MachineState observe(const MachineState& s, double own_action, const AgentSignal& sig) const;

  friend bool operator==(const Machine&, const Machine&) = default;
};

using Profile = std::vector<Machine>;

// The signal a machine responds to, extracted from what the agent saw.
double monitored_signal(const Machine& m, const AgentSignal& sig);

struct BoundCheck {
  bool ok = true;
  std::string violated;  // first violated bound, human readable
  double slack = 0.0;    // most negative slack over all bounds
};

BoundCheck proportional_response_bounds(double alpha, std::span<const double> x,
                                        std::span<const std::size_t> pi, double eps0, double eps1);
BoundCheck public_proportional_bounds(double alpha, std::span<const double> x, double eps0,
                                      double eps1);

enum class Calibration {
  Printed,    // alpha_N = (1 - kappa) / (delta (N - 1) kappa)
  Recursive,  // (1 - kappa) / (delta (N - 1)), absorbs the cascade of public responses
};

Profile constant_profile(std::size_t n, double c);
Profile grim_profile(std::size_t n);
// Throws ConfigError naming the violated bound unless check_bounds is false.
Profile proportional_response_profile(const GameParams& g, std::vector<double> x,
                                      std::vector<std::size_t> pi, double eps0, double eps1,
                                      bool check_bounds = true);
Profile public_proportional_profile(const GameParams& g, std::vector<double> x, double eps0,
                                    double eps1, Calibration calibration = Calibration::Printed,
                                    bool check_bounds = true);
Profile atonement_profile(const GameParams& g);
// alpha defaults to alpha_N / (1 - rho).
Profile belief_based_profile(const GameParams& g, double rho,
                             std::optional<double> alpha = std::nullopt);

}  // namespace purify
