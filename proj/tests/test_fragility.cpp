#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "purify/verifier.hpp"

using namespace purify;

namespace {

ValueQuery pr(double delta, double kappa_bar) {
  ValueQuery q;
  q.params.delta = delta;
  q.params.kappa = ShockDistribution::point(kappa_bar);
  q.structure = SignalStructure::private_neighbor({1, 0}, {NoiseFamily::Shape::Triangular, 0.25, 0.1}, 0.05, 0.05);
  q.profile = proportional_response_profile(q.params, {0.5, 0.5}, {1, 0}, 0.05, 0.05);
  return q;
}

}  // namespace

TEST_CASE("expected relative shock") {
  // E|k - 0.75| = (0.8 - 0.7) / 4 for U[0.7, 0.8]
  CHECK(expected_abs_relative_shock(ShockDistribution::uniform(0.7, 0.8)) == doctest::Approx(0.025 / 0.75));
  CHECK(expected_abs_relative_shock(ShockDistribution::point(0.7)) == 0.0);
}

TEST_CASE("private shocks push best responses to the corners") {
  const auto q = pr(0.5, 0.75);
  const auto shocks = ShockDistribution::uniform(0.7, 0.8);
  const auto r = fragility_experiment(q, 0, shocks, 2000, {8, 0});
  CHECK(r.n_draws == 2000);
  CHECK(r.interior_br_frequency == 0.0);
  CHECK(r.br_state_dependence_frequency == 0.0);
  CHECK(r.non_stage_nash_ic_frequency == 0.0);
  CHECK(r.kappa_bar == doctest::Approx(0.75));
  CHECK(r.action_hi > r.action_lo);
  CHECK(r.mean_ic_violation > 0.0);
  CHECK(std::abs(r.mean_ic_violation - r.analytic_ic_violation) < 1e-9);
  const double pop = 0.5 * (0.025 / 0.75) * (r.action_hi - r.action_lo);
  CHECK(r.population_ic_violation == doctest::Approx(pop));
  // sampling error of the mean of |k/kbar - 1| over 2000 draws
  CHECK(std::abs(r.analytic_ic_violation - pop) < 5 * 0.5 * (r.action_hi - r.action_lo) * 0.02 / std::sqrt(2000.0));
}

TEST_CASE("no shocks, no violation") {
  const auto r = fragility_experiment(pr(0.5, 0.75), 0, ShockDistribution::point(0.75), 200, {8, 1});
  CHECK(r.mean_ic_violation < 1e-12);
  CHECK(r.analytic_ic_violation == 0.0);
  // at kbar every action in range is a best response
  CHECK(r.interior_br_frequency == 1.0);
}
