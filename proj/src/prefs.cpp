#include "purify/prefs.hpp"

#include <algorithm>
#include <cmath>

namespace purify {

OutcomeSpace OutcomeSpace::finite(std::vector<std::string> labels) {
  if (labels.empty()) throw ConfigError("finite outcome space needs at least one outcome");
  OutcomeSpace s;
  s.kind_ = Kind::Finite;
  s.labels_ = std::move(labels);
  return s;
}

OutcomeSpace OutcomeSpace::finite(std::size_t count) {
  std::vector<std::string> labels;
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) labels.push_back("x" + std::to_string(i));
  return finite(std::move(labels));
}

OutcomeSpace OutcomeSpace::box(std::vector<double> lower, std::vector<double> upper) {
  if (lower.empty()) throw ConfigError("box outcome space needs dimension >= 1");
  if (lower.size() != upper.size()) throw ConfigError("box bounds have different lengths");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw ConfigError("box bound lower > upper");
  }
  OutcomeSpace s;
  s.kind_ = Kind::Box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

std::size_t OutcomeSpace::size() const { return labels_.size(); }

std::size_t OutcomeSpace::dimension() const {
  return kind_ == Kind::Finite ? labels_.size() : lower_.size();
}

bool OutcomeSpace::contains(std::size_t index) const {
  return kind_ == Kind::Finite && index < labels_.size();
}

bool OutcomeSpace::contains(std::span<const double> x) const {
  if (kind_ != Kind::Box || x.size() != lower_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

double BaseFunction::operator()(std::span<const double> x) const {
  if (id == "zero") return 0.0;
  if (id == "linear") {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size() && i < params.size(); ++i) acc += params[i] * x[i];
    return acc;
  }
  if (id == "bilinear") {
    if (x.size() < 2 || params.empty()) throw DomainError("bilinear base needs n >= 2 and one parameter");
    return params[0] * x[0] * x[1];
  }
  if (id == "quadratic") {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size() && i < params.size(); ++i) acc += params[i] * x[i] * x[i];
    return acc;
  }
  throw ConfigError("unknown base function id '" + id + "'");
}

bool is_known_basis(const std::string& basis_id) {
  return basis_id == "identity" || basis_id == "cubic" || basis_id == "exp" ||
         basis_id == "square";
}

double eval_basis(const std::string& basis_id, std::size_t i, std::span<const double> x) {
  const double v = x[i];
  if (basis_id == "identity") return v;
  if (basis_id == "cubic") return v * v * v;
  if (basis_id == "exp") return std::exp(v);
  if (basis_id == "square") return v * v;
  throw ConfigError("unknown basis id '" + basis_id + "'");
}

bool basis_injective_on_grid(const OutcomeSpace& space, const std::string& basis_id,
                             double tol) {
  const std::size_t n = space.dimension();
  const std::size_t per_axis = n <= 3 ? 32 : 4;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= per_axis;

  std::vector<std::vector<double>> images;
  images.reserve(total);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(rem % per_axis) / static_cast<double>(per_axis - 1);
      rem /= per_axis;
      x[i] = space.lower()[i] + t * (space.upper()[i] - space.lower()[i]);
    }
    std::vector<double> img(n);
    for (std::size_t i = 0; i < n; ++i) img[i] = eval_basis(basis_id, i, x);
    images.push_back(std::move(img));
  }
  // Degenerate axes (lower == upper) repeat grid points; those are the same
  // outcome, not a collision.
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());
  for (std::size_t k = 1; k < images.size(); ++k) {
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      dist = std::max(dist, std::abs(images[k][i] - images[k - 1][i]));
    if (dist <= tol) return false;
  }
  return true;
}

UtilityFn UtilityFn::finite(OutcomeSpace space, std::vector<double> table) {
  if (space.kind() != OutcomeSpace::Kind::Finite)
    throw ConfigError("finite utility needs a finite outcome space");
  if (table.size() != space.size())
    throw ConfigError("utility table length does not match the outcome count");
  UtilityFn u;
  u.space_ = std::move(space);
  u.table_ = std::move(table);
  return u;
}

UtilityFn UtilityFn::finite(std::vector<double> table) {
  auto space = OutcomeSpace::finite(table.size());
  return finite(std::move(space), std::move(table));
}

UtilityFn UtilityFn::box(OutcomeSpace space, BaseFunction base, std::string basis_id,
                         std::vector<double> coeffs) {
  if (space.kind() != OutcomeSpace::Kind::Box) throw ConfigError("box utility needs a box space");
  if (coeffs.size() != space.dimension())
    throw ConfigError("coefficient count must equal the box dimension");
  if (!is_known_basis(basis_id)) throw ConfigError("unknown basis id '" + basis_id + "'");
  if (!basis_injective_on_grid(space, basis_id))
    throw ConfigError("basis '" + basis_id + "' is not injective on the outcome box");
  UtilityFn u;
  u.space_ = std::move(space);
  u.base_ = std::move(base);
  u.basis_ = std::move(basis_id);
  u.coeffs_ = std::move(coeffs);
  return u;
}

UtilityFn UtilityFn::with_table(std::vector<double> table) const {
  if (table.size() != table_.size()) throw ConfigError("replacement table has wrong length");
  UtilityFn u = *this;
  u.table_ = std::move(table);
  return u;
}

UtilityFn UtilityFn::with_coeffs(std::vector<double> coeffs) const {
  if (coeffs.size() != coeffs_.size()) throw ConfigError("replacement coefficients have wrong length");
  UtilityFn u = *this;
  u.coeffs_ = std::move(coeffs);
  return u;
}

double eval_utility(const UtilityFn& u, std::size_t outcome) {
  if (!u.space().contains(outcome)) throw DomainError("outcome index outside the utility's space");
  return u.table()[outcome];
}

double eval_utility(const UtilityFn& u, std::span<const double> outcome) {
  if (!u.space().contains(outcome)) throw DomainError("outcome outside the utility's box");
  double acc = u.base()(outcome);
  for (std::size_t i = 0; i < u.coeffs().size(); ++i)
    acc += u.coeffs()[i] * eval_basis(u.basis(), i, outcome);
  return acc;
}

void PrevalentFamily::validate() const {
  const std::size_t n = skeleton.space().dimension();
  std::visit(
      [n](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformDensity>) {
          if (d.lo.size() != n || d.hi.size() != n)
            throw ConfigError("uniform density dimension mismatch");
          for (std::size_t i = 0; i < n; ++i)
            if (!(d.hi[i] > d.lo[i])) throw ConfigError("uniform density needs hi > lo");
        } else {
          if (d.mean.size() != n || d.stddev.size() != n)
            throw ConfigError("gaussian density dimension mismatch");
          for (double s : d.stddev)
            if (!(s > 0.0)) throw ConfigError("gaussian density needs stddev > 0");
        }
      },
      density);
}

UtilityFn sample_prevalent(const PrevalentFamily& family, CounterRng& rng) {
  family.validate();
  const std::size_t n = family.skeleton.space().dimension();
  std::vector<double> draw(n);
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        for (std::size_t i = 0; i < n; ++i) {
          if constexpr (std::is_same_v<D, UniformDensity>) {
            draw[i] = rng.uniform(d.lo[i], d.hi[i]);
          } else {
            draw[i] = rng.normal(d.mean[i], d.stddev[i]);
          }
        }
      },
      family.density);
  if (family.skeleton.space().kind() == OutcomeSpace::Kind::Finite)
    return family.skeleton.with_table(std::move(draw));
  return family.skeleton.with_coeffs(std::move(draw));
}

UtilityFn sample_prevalent(const PrevalentFamily& family, RandomSeed seed) {
  CounterRng rng(seed);
  return sample_prevalent(family, rng);
}

ShockDistribution ShockDistribution::point(double kappa) {
  ShockDistribution d{Kind::PointMass, kappa, kappa};
  d.validate();
  return d;
}

ShockDistribution ShockDistribution::uniform(double lo, double hi) {
  ShockDistribution d{Kind::Uniform, lo, hi};
  d.validate();
  return d;
}

void ShockDistribution::validate() const {
  if (!(lo > 0.5 && hi < 1.0 && lo <= hi))
    throw DomainError("liquidity shock support must satisfy 1/2 < lo <= hi < 1");
}

double liquidity_shock_draw(const ShockDistribution& dist, CounterRng& rng) {
  dist.validate();
  if (dist.degenerate()) return dist.lo;
  return rng.uniform(dist.lo, dist.hi);
}

double liquidity_shock_draw(const ShockDistribution& dist, RandomSeed rng,
                            std::uint64_t period, std::uint64_t agent) {
  CounterRng r(rng.substream(period).substream(agent));
  return liquidity_shock_draw(dist, r);
}

}  // namespace purify
