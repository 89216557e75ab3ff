#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "purify/rng.hpp"

namespace purify {

// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when a configuration cannot be constructed (infeasible parameters,
// unresolved references).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutcomeSpace {
 public:
  enum class Kind { Finite, Box };

  static OutcomeSpace finite(std::vector<std::string> labels);
  static OutcomeSpace finite(std::size_t count);  // labels "x0", "x1", ...
  static OutcomeSpace box(std::vector<double> lower, std::vector<double> upper);

  Kind kind() const { return kind_; }
  std::size_t size() const;       // number of outcomes (finite only)
  std::size_t dimension() const;  // box dimension, or size() for finite
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  bool contains(std::size_t index) const;
  bool contains(std::span<const double> x) const;

  friend bool operator==(const OutcomeSpace&, const OutcomeSpace&) = default;

 private:
  Kind kind_ = Kind::Finite;
  std::vector<std::string> labels_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

// Closed-form base functions for box spaces, referenced by id so configs stay
// serializable:
//   "zero"      0
//   "linear"    sum_i p[i] x[i]
//   "bilinear"  p[0] x[0] x[1]
//   "quadratic" sum_i p[i] x[i]^2
struct BaseFunction {
  std::string id = "zero";
  std::vector<double> params;

  double operator()(std::span<const double> x) const;
  friend bool operator==(const BaseFunction&, const BaseFunction&) = default;
};

// Coordinate bases: "identity" (x_i), "cubic" (x_i^3), "exp" (e^{x_i}),
// "square" (x_i^2, injective only on a sign-definite box).
double eval_basis(const std::string& basis_id, std::size_t i, std::span<const double> x);
bool is_known_basis(const std::string& basis_id);

// Utility over a finite table, or base + sum_i coeffs[i] * basis_i on a box.
class UtilityFn {
 public:
  static UtilityFn finite(OutcomeSpace space, std::vector<double> table);
  static UtilityFn finite(std::vector<double> table);
  // Throws ConfigError when the basis is not injective on a sample grid.
  static UtilityFn box(OutcomeSpace space, BaseFunction base, std::string basis_id,
                       std::vector<double> coeffs);

  const OutcomeSpace& space() const { return space_; }
  const std::vector<double>& table() const { return table_; }
  const BaseFunction& base() const { return base_; }
  const std::string& basis() const { return basis_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  UtilityFn with_table(std::vector<double> table) const;
  UtilityFn with_coeffs(std::vector<double> coeffs) const;

  friend bool operator==(const UtilityFn&, const UtilityFn&) = default;

 private:
  OutcomeSpace space_;
  std::vector<double> table_;
  BaseFunction base_;
  std::string basis_;
  std::vector<double> coeffs_;
};

double eval_utility(const UtilityFn& u, std::size_t outcome);
double eval_utility(const UtilityFn& u, std::span<const double> outcome);

// Sample-grid injectivity check for box bases: no two grid points may map to
// basis vectors within tol (L-infinity). Uses 32 points per axis for n <= 3.
bool basis_injective_on_grid(const OutcomeSpace& space, const std::string& basis_id,
                             double tol = 1e-12);

struct UniformDensity {
  std::vector<double> lo;
  std::vector<double> hi;
  friend bool operator==(const UniformDensity&, const UniformDensity&) = default;
};

struct GaussianDensity {
  std::vector<double> mean;
  std::vector<double> stddev;
  friend bool operator==(const GaussianDensity&, const GaussianDensity&) = default;
};

using LambdaDensity = std::variant<UniformDensity, GaussianDensity>;

// Private utilities whose random coordinates admit a density. For finite
// spaces the whole table is drawn; for boxes only the coefficients.
struct PrevalentFamily {
  UtilityFn skeleton;
  LambdaDensity density;

  void validate() const;
};

UtilityFn sample_prevalent(const PrevalentFamily& family, RandomSeed rng);
UtilityFn sample_prevalent(const PrevalentFamily& family, CounterRng& rng);

// Distribution of the private liquidity shock kappa, supported in (1/2, 1).
struct ShockDistribution {
  enum class Kind { PointMass, Uniform };
  Kind kind = Kind::PointMass;
  double lo = 0.75;
  double hi = 0.75;

  static ShockDistribution point(double kappa);
  static ShockDistribution uniform(double lo, double hi);

  void validate() const;
  double mean() const { return 0.5 * (lo + hi); }
  bool degenerate() const { return kind == Kind::PointMass || lo == hi; }
  friend bool operator==(const ShockDistribution&, const ShockDistribution&) = default;
};

double liquidity_shock_draw(const ShockDistribution& dist, CounterRng& rng);
// Draw for a given (period, agent) cell; independent across cells.
double liquidity_shock_draw(const ShockDistribution& dist, RandomSeed rng,
                            std::uint64_t period, std::uint64_t agent);

}  // namespace purify
