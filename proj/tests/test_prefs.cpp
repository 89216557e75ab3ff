#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "purify/game.hpp"
#include "purify/prefs.hpp"

using namespace purify;

TEST_CASE("outcome spaces") {
  const auto f = OutcomeSpace::finite(3);
  CHECK(f.size() == 3);
  CHECK(f.labels()[2] == "x2");
  CHECK(f.contains(2));
  CHECK_FALSE(f.contains(3));
  const auto b = OutcomeSpace::box({0, -1}, {1, 1});
  CHECK(b.dimension() == 2);
  const double in[] = {0.5, -1.0}, out[] = {1.5, 0.0};
  CHECK(b.contains(in));
  CHECK_FALSE(b.contains(out));
  CHECK_THROWS_AS(OutcomeSpace::box({1}, {0}), ConfigError);
  CHECK_THROWS_AS(OutcomeSpace::finite(std::vector<std::string>{}), ConfigError);
}

TEST_CASE("utility evaluation") {
  const auto u = UtilityFn::finite({0.1, 0.7, -2.0});
  CHECK(eval_utility(u, 1) == 0.7);
  CHECK_THROWS_AS(eval_utility(u, 3), DomainError);

  // 0.5 x0 x1 + 2 x0^3 - x1^3 at (1, 2): 1 + 2 - 8
  const auto box = UtilityFn::box(OutcomeSpace::box({0, 0}, {2, 2}), {"bilinear", {0.5}}, "cubic",
                                  {2.0, -1.0});
  const double x[] = {1.0, 2.0};
  CHECK(eval_utility(box, x) == doctest::Approx(-5.0));
}

TEST_CASE("basis injectivity") {
  CHECK(basis_injective_on_grid(OutcomeSpace::box({-1}, {1}), "cubic"));
  CHECK(basis_injective_on_grid(OutcomeSpace::box({0}, {1}), "square"));
  CHECK_FALSE(basis_injective_on_grid(OutcomeSpace::box({-1}, {1}), "square"));
  CHECK_THROWS_AS(UtilityFn::box(OutcomeSpace::box({-1}, {1}), {}, "square", {1.0}), ConfigError);
  CHECK_THROWS_AS(UtilityFn::box(OutcomeSpace::box({0}, {1}), {}, "nope", {1.0}), ConfigError);
}

TEST_CASE("prevalent sampling keeps the skeleton and is reproducible") {
  const PrevalentFamily fam{UtilityFn::finite(std::vector<double>(6, 0.0)),
                            UniformDensity{std::vector<double>(6, -1.0), std::vector<double>(6, 1.0)}};
  fam.validate();
  const auto a = sample_prevalent(fam, RandomSeed{5, 0});
  const auto b = sample_prevalent(fam, RandomSeed{5, 0});
  const auto c = sample_prevalent(fam, RandomSeed{6, 0});
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.table().size() == 6);
  for (double v : a.table()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  const PrevalentFamily bad{UtilityFn::finite({0.0}), GaussianDensity{{0.0}, {0.0}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("liquidity shocks") {
  CHECK_THROWS_AS(ShockDistribution::point(0.5).validate(), DomainError);
  CHECK_THROWS_AS(ShockDistribution::uniform(0.6, 1.0).validate(), DomainError);
  const auto u = ShockDistribution::uniform(0.6, 0.9);
  CHECK(u.mean() == doctest::Approx(0.75));
  CHECK(ShockDistribution::point(0.7).degenerate());
  CounterRng r({3, 0});
  double s = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double x = liquidity_shock_draw(u, r);
    REQUIRE(x >= 0.6);
    REQUIRE(x <= 0.9);
    s += x;
  }
  CHECK(std::abs(s / n - 0.75) < 5 * 0.3 / std::sqrt(12.0 * n));
  CHECK(liquidity_shock_draw(u, RandomSeed{1, 0}, 4, 1) == liquidity_shock_draw(u, RandomSeed{1, 0}, 4, 1));
  CHECK(liquidity_shock_draw(u, RandomSeed{1, 0}, 4, 1) != liquidity_shock_draw(u, RandomSeed{1, 0}, 4, 0));
}

TEST_CASE("stage game and thresholds") {
  const double a[] = {1.0, 0.0, 0.5};
  // kappa * 1.5 - a_i
  CHECK(stage_payoff(0.6, 0, a) == doctest::Approx(0.9 - 1.0));
  CHECK(stage_payoff(0.6, 1, a) == doctest::Approx(0.9));
  CHECK(grim_trigger_threshold(0.6, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(public_proportional_threshold(0.6, 3) == doctest::Approx(1.0));
  CHECK(atonement_threshold(0.75) == doctest::Approx(1.0 / 3.0));
  CHECK(proportionality_constant(0.75, 0.5, 2, ResponseScope::Neighbor) == doctest::Approx(2.0 / 3.0));
  CHECK(proportionality_constant(0.75, 0.5, 3, ResponseScope::Public) == doctest::Approx(1.0 / 3.0));
  const std::size_t T = default_horizon(0.9, 2.0);
  CHECK(std::pow(0.9, double(T)) * 2.0 < 1e-10);
  CHECK(std::pow(0.9, double(T - 1)) * 2.0 >= 1e-10);
}
