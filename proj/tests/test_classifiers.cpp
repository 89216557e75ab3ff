#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "purify/verifier.hpp"

using namespace purify;

namespace {

GameParams game(std::size_t n, double delta, double kappa) {
  GameParams g;
  g.n_agents = n;
  g.delta = delta;
  g.kappa = ShockDistribution::point(kappa);
  return g;
}

ValueQuery make(GameParams g, Profile p, SignalStructure ss) {
  ValueQuery q;
  q.params = g;
  q.profile = std::move(p);
  q.structure = std::move(ss);
  return q;
}

NoiseFamily tri() { return {NoiseFamily::Shape::Triangular, 0.25, 0.1}; }

}  // namespace

TEST_CASE("stage Nash") {
  const GameParams g = game(2, 0.5, 0.75);
  CHECK(stage_nash_check(std::vector<double>{0.0, 0.0}, g));
  CHECK_FALSE(stage_nash_check(std::vector<double>{0.0, 0.1}, g));
  CHECK(on_path_stage_nash(make(g, constant_profile(2, 0.0), SignalStructure::deterministic_public_sum(2))));
  CHECK_FALSE(on_path_stage_nash(make(g, grim_profile(2), SignalStructure::deterministic_public_sum(2))));
}

TEST_CASE("public proportional is a public perfect equilibrium") {
  const auto g = game(3, 0.6, 0.75);
  const auto q = make(g, public_proportional_profile(g, {0.9, 0.9, 0.9}, 0, 0),
                      SignalStructure::deterministic_public_sum(3));
  CHECK(classify_ppe(q));
  CHECK(public_path_adapted(q));
  CHECK_FALSE(belief_free_check(q));
  CHECK_FALSE(atonement_check(q));
}

TEST_CASE("atonement conditions on the own action") {
  const auto g2 = game(2, 0.5, 0.75);
  const auto q2 = make(g2, atonement_profile(g2), SignalStructure::deterministic_public_sum(2));
  // with two agents the own action and the total reveal the whole profile
  CHECK(classify_ppe(q2));
  CHECK_FALSE(public_path_adapted(q2));
  CHECK(atonement_check(q2));
  CHECK(reneg_proof_check(q2));
  CHECK_FALSE(belief_free_check(q2));

  const auto g3 = game(3, 0.5, 0.75);
  const auto q3 = make(g3, atonement_profile(g3), SignalStructure::deterministic_public_sum(3));
  CHECK_FALSE(classify_ppe(q3));
}

TEST_CASE("proportional response under private noise is belief-free") {
  const auto g = game(2, 0.8, 0.75);
  const auto q = make(g, proportional_response_profile(g, {0.5, 0.5}, {1, 0}, 0.05, 0.05),
                      SignalStructure::private_neighbor({1, 0}, tri(), 0.05, 0.05));
  CHECK(belief_free_check(q));
  CHECK_FALSE(info_subset_check(q));
}

TEST_CASE("grim trigger is not renegotiation-proof") {
  const auto g = game(2, 0.8, 0.6);
  const auto q = make(g, grim_profile(2), SignalStructure::deterministic_public_sum(2));
  CHECK_FALSE(reneg_proof_check(q));
  const auto f = classify_all(q);
  CHECK_FALSE(f.reneg_proof);
  CHECK_FALSE(f.stage_nash);
  CHECK(f.ppe);
  CHECK(f.ppe_public);
}
