#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "purify/verifier.hpp"

using namespace purify;

namespace {

ValueQuery grim(double delta, double kappa = 0.6) {
  ValueQuery q;
  q.profile = grim_profile(2);
  q.structure = SignalStructure::deterministic_public_sum(2);
  q.params.delta = delta;
  q.params.kappa = ShockDistribution::point(kappa);
  return q;
}

ValueQuery atonement(double delta, double kappa, std::size_t n) {
  ValueQuery q;
  q.params.n_agents = n;
  q.params.delta = delta;
  q.params.kappa = ShockDistribution::point(kappa);
  q.profile = atonement_profile(q.params);
  q.structure = SignalStructure::deterministic_public_sum(n);
  return q;
}

}  // namespace

TEST_CASE("deviation grid") {
  const auto g = default_deviation_grid();
  REQUIRE(g.size() == 21);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[10] == doctest::Approx(0.5));
}

TEST_CASE("probe histories") {
  const auto hs = probe_histories(grim(0.8), {2, {0.0, 1.0}, true});
  std::size_t on_path = 0;
  for (const auto& h : hs) on_path += h.actions.empty() && h.signals.empty();
  CHECK(on_path == 3);
  CHECK(hs.size() > 3);
}

TEST_CASE("grim feasibility flips at the threshold") {
  const double thr = grim_trigger_threshold(0.6, 2);
  const auto grid = default_deviation_grid();
  const auto above = verify_equilibrium(grim(thr + 0.02), grid);
  CHECK(above.feasible);
  const auto below = verify_equilibrium(grim(thr - 0.02), grid);
  CHECK_FALSE(below.feasible);
  // worst deviation is to zero on path: 0.6 (1 - d) - 0.2
  CHECK(below.worst_gain == doctest::Approx(0.6 * (1 - (thr - 0.02)) - 0.2).epsilon(1e-9));
  CHECK(below.worst_action == 0.0);
}

TEST_CASE("critical delta for grim trigger") {
  const auto cd = measured_critical_delta([](double d) { return grim(d); }, 0.3, 0.95, 1e-9, 1e-6);
  CHECK(cd.bracketed);
  CHECK(std::abs(cd.delta - 2.0 / 3.0) < 2e-6);
}

TEST_CASE("atonement verifies above its threshold") {
  const auto grid = default_deviation_grid();
  const double thr = atonement_threshold(0.75);
  CHECK(verify_equilibrium(atonement(thr + 0.05, 0.75, 2), grid).feasible);
  CHECK_FALSE(verify_equilibrium(atonement(thr - 0.05, 0.75, 2), grid).feasible);
}

TEST_CASE("proportional response residual is at rounding level") {
  ValueQuery q;
  q.params.delta = 0.8;
  q.params.kappa = ShockDistribution::point(0.7);
  q.structure = SignalStructure::private_neighbor({1, 0}, {NoiseFamily::Shape::Triangular, 0.25, 0.1}, 0.05, 0.05);
  q.profile = proportional_response_profile(q.params, {0.5, 0.5}, {1, 0}, 0.05, 0.05);
  const auto r = verify_equilibrium(q, default_deviation_grid());
  CHECK(r.feasible);
  CHECK(r.residual < 1e-12);
  CHECK(r.n_evaluations > r.n_probes);
}

TEST_CASE("signal probe values span the support") {
  const auto ss = SignalStructure::noisy_public_sum(2, {}, 0.05, 0.05);
  const auto v = signal_probe_values(ss, 2.0);
  CHECK(v.size() >= 2);
  for (double s : v) {
    CHECK(s >= ss.signal_lower());
    CHECK(s <= ss.signal_upper());
  }
}
