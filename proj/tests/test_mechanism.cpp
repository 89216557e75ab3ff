#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "purify/mechanism.hpp"

using namespace purify;

TEST_CASE("lotteries") {
  CHECK(point_mass(3, 1) == Lottery{0, 1, 0});
  CHECK(is_valid_lottery(Lottery{0.25, 0.75}));
  CHECK_FALSE(is_valid_lottery(Lottery{0.5, 0.6}));
  CHECK_FALSE(is_valid_lottery(Lottery{-0.1, 1.1}));
  CHECK(total_variation(Lottery{1, 0}, Lottery{0.25, 0.75}) == doctest::Approx(0.75));
}

TEST_CASE("indifference mechanism on a 2x2 table") {
  // row minima 1 and 0, so u* = 1; action 1 mixes c0/c1 as 3/4, 1/4
  const PayoffMatrix u(2, 2, {3, 1, 0, 4});
  CHECK(maxmin_value(u) == 1.0);
  const auto im = build_indifference_mechanism(u);
  CHECK(im.value == 1.0);
  CHECK(im.undominated == std::vector<std::size_t>{0, 1});
  CHECK(im.mechanism.map[0] == Lottery{0, 1});
  CHECK(im.mechanism.map[1][0] == doctest::Approx(0.75));
  CHECK(im.mechanism.map[1][1] == doctest::Approx(0.25));
  for (std::size_t a = 0; a < 2; ++a) CHECK(im.mechanism.expected_utility(u, a) == doctest::Approx(1.0));
}

TEST_CASE("dominated actions get their row minimum") {
  // row 2 never reaches u* = 2
  const PayoffMatrix u(3, 2, {2, 5, 6, 2, 0, 1});
  const auto im = build_indifference_mechanism(u);
  CHECK(im.value == 2.0);
  CHECK(im.undominated == std::vector<std::size_t>{0, 1});
  CHECK(im.mechanism.map[2] == Lottery{1, 0});
  CHECK(im.mechanism.expected_utility(u, 2) == 0.0);
  const auto pure = StrategyTable::pure(3, {0, 1});
  CHECK(check_incentive_compat(pure, im.mechanism, u).feasible);
  const auto bad = StrategyTable::pure(3, {0, 2});
  const auto rep = check_incentive_compat(bad, im.mechanism, u);
  CHECK_FALSE(rep.feasible);
  CHECK(rep.worst_gap == doctest::Approx(2.0));
  REQUIRE(rep.violating.size() == 1);
  CHECK(rep.violating[0].state == 1);
  CHECK(rep.violating[0].action == 2);
}

TEST_CASE("random tables are exactly indifferent") {
  CounterRng r({77, 0});
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t na = 1 + r.next_u64() % 6, nc = 1 + r.next_u64() % 6;
    std::vector<double> t(na * nc);
    for (auto& x : t) x = r.uniform();
    const PayoffMatrix u(na, nc, t);
    const auto im = build_indifference_mechanism(u);
    im.mechanism.validate();
    // independent oracle for u*: best row minimum
    double ustar = -1;
    for (std::size_t a = 0; a < na; ++a)
      ustar = std::max(ustar, *std::min_element(t.begin() + a * nc, t.begin() + (a + 1) * nc));
    CHECK(im.value == ustar);
    for (std::size_t a = 0; a < na; ++a) {
      const double v = im.mechanism.expected_utility(u, a);
      if (std::find(im.undominated.begin(), im.undominated.end(), a) != im.undominated.end())
        CHECK(std::abs(v - ustar) <= 1e-12);
      else
        CHECK(v < ustar);
    }
  }
}

TEST_CASE("informativeness and semi-prevalence") {
  CHECK(informativeness(StrategyTable::pure(2, {0, 1})));
  CHECK_FALSE(informativeness(StrategyTable::pure(2, {1, 1})));

  // Both actions lead to c0; u(a, c) = v1(a) + v0(c).
  const Mechanism same{2, {Lottery{1, 0}, Lottery{1, 0}}};
  const auto informative = StrategyTable::pure(2, {0, 1});
  const auto generic = compose_semi_prevalent(std::vector<double>{0.0, 0.1}, std::vector<double>{0.0, 1.0});
  CHECK(generic.at(1, 1) == doctest::Approx(1.1));
  // a generic v1 breaks the tie, so the informative strategy is not IC
  CHECK(semi_prevalent_check(generic, PrevalentSide::Actions, same, informative));
  // a flat v1 is the non-generic witness
  const auto flat = compose_semi_prevalent(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 1.0});
  CHECK_FALSE(semi_prevalent_check(flat, PrevalentSide::Actions, same, informative));
  // over consequences the induced map is constant here, so no witness
  CHECK(semi_prevalent_check(flat, PrevalentSide::Consequences, same, informative));
  const Mechanism split{2, {Lottery{1, 0}, Lottery{0, 1}}};
  const auto flat_c = compose_semi_prevalent(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 0.0});
  CHECK_FALSE(semi_prevalent_check(flat_c, PrevalentSide::Consequences, split, informative));
}

TEST_CASE("outcome set and its value function") {
  const Mechanism m{3, {Lottery{0.5, 0.5, 0}, Lottery{0, 0.3, 0.7}}};
  const auto g = OutcomeSet::from_mechanism(m);
  CHECK(g.size() == 2);
  CHECK(g.consistent(m));
  const std::vector<double> u{1, 0, 0, 0, 0, 2};  // u(a0,c0)=1, u(a1,c2)=2
  const auto vals = generator_values(u, g);
  CHECK(vals[0] == doctest::Approx(0.5));
  CHECK(vals[1] == doctest::Approx(1.4));
  CHECK(value_fgamma(u, g) == doctest::Approx(1.4));
  CHECK(argmax_outcomes(u, g) == std::vector<std::size_t>{1});
  const std::vector<double> flat(6, 1.0);
  CHECK(argmax_outcomes(flat, g).size() == 2);
}

TEST_CASE("tie frequency: zero under a density, one for a constant table") {
  const Mechanism m{3, {Lottery{0.5, 0.5, 0}, Lottery{0, 0.3, 0.7}}};
  const auto g = OutcomeSet::from_mechanism(m);
  const PrevalentFamily fam{UtilityFn::finite(std::vector<double>(6, 0.0)),
                            GaussianDensity{std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)}};
  const auto dens = tie_frequency_experiment(fam, g, 20000, 1e-12, {9, 0}, 2);
  CHECK(dens.n_samples == 20000);
  CHECK(dens.n_ties == 0);
  const auto flat = tie_frequency_experiment(PointMassUtility{UtilityFn::finite(std::vector<double>(6, 1.0))},
                                             g, 100, 1e-12, {9, 0});
  CHECK(flat.frequency == 1.0);
  // thread count does not change the result
  const auto one = tie_frequency_experiment(fam, g, 5000, 0.05, {9, 1}, 1);
  const auto four = tie_frequency_experiment(fam, g, 5000, 0.05, {9, 1}, 4);
  CHECK(one.n_ties == four.n_ties);
  CHECK(one.n_ties > 0);
}
