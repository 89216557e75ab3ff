#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "purify/engine.hpp"

using namespace purify;

namespace {

ValueQuery query(Profile p, SignalStructure ss, std::size_t n, double delta, double kappa) {
  ValueQuery q;
  q.profile = std::move(p);
  q.structure = std::move(ss);
  q.params.n_agents = n;
  q.params.delta = delta;
  q.params.kappa = ShockDistribution::point(kappa);
  return q;
}

NoiseFamily tri() { return {NoiseFamily::Shape::Triangular, 0.25, 0.1}; }

}  // namespace

TEST_CASE("constant profile value is the stage payoff") {
  const auto q = query(constant_profile(3, 0.4), SignalStructure::deterministic_public_sum(3), 3, 0.9, 0.7);
  const auto v = value(q);
  for (double x : v.value) CHECK(x == doctest::Approx(0.7 * 1.2 - 0.4).epsilon(1e-9));
  CHECK(v.truncation_bound < 1e-9);
}

TEST_CASE("grim trigger deviation gain matches the closed form") {
  // deviating to a once: (1-d)(k(1+a) - a) then zero forever; conformity 2k - 1
  for (double delta : {0.5, 0.647, 0.687, 0.9}) {
    CAPTURE(delta);
    const auto q = query(grim_profile(2), SignalStructure::deterministic_public_sum(2), 2, delta, 0.6);
    for (double a : {0.0, 0.3, 0.9}) {
      const auto g = one_shot_deviation_gain(q, 0, History{}, a);
      const double oracle = (1 - delta) * (0.6 * (1 + a) - a) - 0.2;
      CHECK(g.gain == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(g.conform_value == doctest::Approx(0.2).epsilon(1e-9));
      CHECK(g.prescribed == 1.0);
    }
  }
}

TEST_CASE("proportional response is indifferent on path") {
  GameParams g;
  g.delta = 0.7;
  g.kappa = ShockDistribution::point(0.8);
  const auto ss = SignalStructure::deterministic_private_neighbor({1, 0});
  auto q = query(proportional_response_profile(g, {0.5, 0.5}, {1, 0}, 0.0, 0.0), ss, 2, 0.7, 0.8);
  CHECK(q.analytic_supported());
  const auto v = value(q);
  CHECK(v.value[0] == doctest::Approx(0.8 * 1.0 - 0.5));
  for (double a : {0.0, 0.25, 1.0}) CHECK(std::abs(one_shot_deviation_gain(q, 0, History{}, a).gain) < 1e-12);
}

TEST_CASE("monte carlo agrees with analytic on a noisy linear machine") {
  GameParams g;
  g.delta = 0.6;
  g.kappa = ShockDistribution::point(0.8);
  const auto ss = SignalStructure::private_neighbor({1, 0}, tri(), 0.05, 0.05);
  auto q = query(proportional_response_profile(g, {0.5, 0.5}, {1, 0}, 0.05, 0.05), ss, 2, 0.6, 0.8);
  const auto exact = deviation_gain_from(q, initial_states(q.profile), 0, 0.2);
  q.method = ValueMethod::MonteCarlo;
  q.n_reps = 4000;
  q.seed = {17, 0};
  const auto mc = deviation_gain_from(q, initial_states(q.profile), 0, 0.2);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.gain - exact.gain) < 4 * mc.std_error + 1e-12);
  const auto v = value(q);
  CHECK(std::abs(v.value[0] - 0.3) < 4 * v.std_error[0] + 1e-12);

  // results do not depend on the thread count
  q.jobs = 4;
  const auto mc4 = deviation_gain_from(q, initial_states(q.profile), 0, 0.2);
  CHECK(mc4.gain == mc.gain);
}

TEST_CASE("histories replay overrides") {
  const auto q = query(grim_profile(2), SignalStructure::deterministic_public_sum(2), 2, 0.8, 0.6);
  History h;
  h.length = 2;
  h.actions.push_back({0, 1, 0.5});
  const auto hs = replay_history(q, h);
  CHECK(hs.actions[0] == std::vector<double>{1.0, 0.5});
  CHECK(hs.actions[1] == std::vector<double>{0.0, 0.0});
  CHECK(hs.states[0].punished);
  History sig;
  sig.length = 1;
  sig.signals.push_back({0, std::nullopt, 1.0});
  CHECK(replay_history(q, sig).states[1].punished);
}

TEST_CASE("simulation is reproducible and writes a trace") {
  GameParams g;
  g.n_agents = 3;
  g.delta = 0.9;
  g.kappa = ShockDistribution::point(0.75);
  const auto ss = SignalStructure::noisy_public_sum(3, tri(), 0.05, 0.05);
  const auto q = query(belief_based_profile(g, 0.2), ss, 3, 0.9, 0.75);
  const auto a = simulate(q, 20, {}, {5, 0});
  const auto b = simulate(q, 20, {}, {5, 0});
  REQUIRE(a.periods.size() == 20);
  for (std::size_t t = 0; t < 20; ++t) CHECK(a.periods[t].actions == b.periods[t].actions);
  std::ostringstream os;
  write_trace_csv(os, a, ss);
  const std::string csv = os.str();
  CHECK(csv.rfind(kTraceCsvHeader, 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 20 * 3);
}

TEST_CASE("query validation") {
  auto q = query(grim_profile(2), SignalStructure::deterministic_public_sum(3), 2, 0.8, 0.6);
  CHECK_THROWS(q.validate());
  q = query(grim_profile(2), SignalStructure::deterministic_public_sum(2), 2, 1.0, 0.6);
  CHECK_THROWS(q.validate());
}
