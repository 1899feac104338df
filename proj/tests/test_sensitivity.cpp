#include <doctest.h>

#include <cmath>
#include <random>

#include "planeval/cost_model.hpp"
#include "planeval/errors.hpp"
#include "planeval/sensitivity.hpp"

using namespace planeval;

namespace {

/// Ego drives straight along x at 1 m/s; agent tracks are placeholders so the
/// rollout validates, predictions are filled per test.
Rollout straight_rollout(std::size_t t_roll) {
  Rollout r;
  r.dt = 0.1;
  r.initial = {0.0, 0.0, 0.0};
  AgentTrack track;
  track.id = "a";
  track.positions.assign(t_roll + 1, Vec2(30.0, 30.0));
  r.agents = {track};
  for (std::size_t t = 0; t < t_roll; ++t) {
    r.controls.push_back({1.0, 0.0});
    r.predictions.push_back({{"a", {Vec2(30.0, 30.0)}}});
  }
  return r;
}

Rollout arc_rollout(std::mt19937_64& rng, std::size_t t_roll) {
  std::uniform_real_distribution<double> speed(0.5, 2.0);
  std::uniform_real_distribution<double> turn(0.1, 0.8);
  std::bernoulli_distribution flip;
  Rollout r;
  r.dt = 0.1;
  r.initial = {0.0, 0.0, 0.3};
  AgentTrack track;
  track.id = "a";
  track.positions.assign(t_roll + 1, Vec2::Zero());
  r.agents = {track};
  for (std::size_t t = 0; t < t_roll; ++t) {
    r.controls.push_back({speed(rng), (flip(rng) ? 1.0 : -1.0) * turn(rng)});
    r.predictions.push_back({{"a", {Vec2::Zero()}}});
  }
  return r;
}

const CostWeights kWeights{0.8, 0.5, 1.7, 1.3};

}  // namespace

TEST_CASE("distant candidates have negligible influence") {
  const Rollout r = straight_rollout(5);
  const Trajectory far(5, Vec2(40.0, 40.0));
  CHECK(sensitivity_of_trajectory(kWeights, r, far, SensitivityConfig{}) < 1e-6);
}

TEST_CASE("a candidate pinned to the ego path has zero influence") {
  const Rollout r = straight_rollout(5);
  const std::vector<EgoState> states = rollout_states(r);
  Trajectory pinned;
  for (std::size_t t = 1; t <= 5; ++t) {
    pinned.push_back(states[t].position());
  }
  CHECK(sensitivity_of_trajectory(kWeights, r, pinned, SensitivityConfig{}) == 0.0);
}

TEST_CASE("candidate points beyond the rollout horizon are ignored") {
  const Rollout r = straight_rollout(4);
  Trajectory cand{Vec2(0.2, 0.5), Vec2(0.3, 0.6), Vec2(0.4, 0.7), Vec2(0.5, 0.8)};
  const double base = sensitivity_of_trajectory(kWeights, r, cand, SensitivityConfig{});
  cand.push_back(Vec2(0.0, 0.0));
  cand.push_back(Vec2(-5.0, 2.0));
  CHECK(sensitivity_of_trajectory(kWeights, r, cand, SensitivityConfig{}) == base);
}

TEST_CASE("sensitivity matches a pointwise finite difference of the step costs") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    Rollout r = arc_rollout(rng, 6);
    const std::vector<EgoState> states = rollout_states(r);
    Trajectory cand;
    for (std::size_t t = 1; t <= 6; ++t) {
      cand.push_back(states[t].position() + Vec2(noise(rng), noise(rng)));
      r.predictions[t - 1]["a"] = {cand.back()};
    }
    const double got = sensitivity_of_trajectory(kWeights, r, cand, SensitivityConfig{});
    CHECK(got >= 0.0);

    double sq_sum = 0.0;
    for (std::size_t t = 1; t <= 6; ++t) {
      for (int axis = 0; axis < 2; ++axis) {
        Rollout hi = r;
        Rollout lo = r;
        hi.predictions[t - 1]["a"][0][axis] += h;
        lo.predictions[t - 1]["a"][0][axis] -= h;
        const double fd = (cost(kWeights, rollout_snapshot(hi, t, states[t]), r.controls[t - 1],
                                SensitivityConfig{}.features) -
                           cost(kWeights, rollout_snapshot(lo, t, states[t]), r.controls[t - 1],
                                SensitivityConfig{}.features)) /
                          (2.0 * h);
        sq_sum += fd * fd;
      }
    }
    CHECK(std::abs(got - std::sqrt(sq_sum)) / std::max(1.0, std::sqrt(sq_sum)) <= 1e-5);
  }
}

TEST_CASE("influence grows as a candidate approaches the ego path") {
  const Rollout r = straight_rollout(8);
  const std::vector<EgoState> states = rollout_states(r);
  double prev = -1.0;
  for (double dist : {3.0, 2.0, 1.0}) {
    Trajectory cand;
    for (std::size_t t = 1; t <= 8; ++t) {
      cand.push_back(states[t].position() + Vec2(0.0, dist));
    }
    const double g = sensitivity_of_trajectory(kWeights, r, cand, SensitivityConfig{});
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("max step aggregation bounds the l2 aggregation") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> noise(-1.5, 1.5);
  Rollout r = arc_rollout(rng, 7);
  const std::vector<EgoState> states = rollout_states(r);
  Trajectory cand;
  for (std::size_t t = 1; t <= 7; ++t) {
    cand.push_back(states[t].position() + Vec2(noise(rng), noise(rng)));
  }
  SensitivityConfig l2;
  SensitivityConfig peak;
  peak.aggregation = SensitivityConfig::Aggregation::max_step;
  const double l2_value = sensitivity_of_trajectory(kWeights, r, cand, l2);
  const double peak_value = sensitivity_of_trajectory(kWeights, r, cand, peak);
  CHECK(peak_value <= l2_value);

  double by_hand = 0.0;
  const double bw2 = l2.features.rbf_bandwidth * l2.features.rbf_bandwidth;
  for (std::size_t t = 1; t <= 7; ++t) {
    const Vec2 p = states[t].position();
    const double k = std::exp(-(p - cand[t - 1]).squaredNorm() / (2.0 * bw2));
    by_hand = std::max(by_hand, (kWeights.rbf_pred * k * (p - cand[t - 1]) / bw2).norm());
  }
  CHECK(std::abs(peak_value - by_hand) <= 1e-15);
}

TEST_CASE("sensitivity scales linearly in the prediction weight") {
  const Rollout r = straight_rollout(5);
  Trajectory cand(5, Vec2(0.3, 0.8));
  CostWeights doubled = kWeights;
  doubled.rbf_pred = 2.0 * kWeights.rbf_pred;
  const double base = sensitivity_of_trajectory(kWeights, r, cand, SensitivityConfig{});
  CHECK(sensitivity_of_trajectory(doubled, r, cand, SensitivityConfig{}) == 2.0 * base);

  CostWeights off = kWeights;
  off.rbf_pred = 0.0;
  CHECK(sensitivity_of_trajectory(off, r, cand, SensitivityConfig{}) == 0.0);
}

TEST_CASE("per agent sensitivities match the single trajectory entry point") {
  Rollout r = straight_rollout(6);
  AgentTrack second;
  second.id = "b";
  second.positions.assign(7, Vec2(-2.0, 1.0));
  r.agents.push_back(second);
  for (std::size_t t = 0; t < 6; ++t) {
    r.predictions[t]["b"] = {Vec2(-2.0, 1.0)};
  }

  PredictionMap scored{{"a", Trajectory(6, Vec2(0.4, 0.9))},
                       {"b", Trajectory(6, Vec2(-0.6, 1.2))}};
  const SensitivityConfig config;
  const SensitivityMap map = planning_sensitivity(kWeights, r, scored, config);
  CHECK(map.horizon == 6);
  REQUIRE(map.values.size() == 2);
  for (const auto& [id, value] : map.values) {
    CHECK(value == sensitivity_of_trajectory(kWeights, r, scored.at(id), config));
  }
}

TEST_CASE("missing predictions are rejected") {
  const Rollout r = straight_rollout(4);
  CHECK_THROWS_AS(sensitivity_of_trajectory(kWeights, r, Trajectory{}, SensitivityConfig{}),
                  MissingPredictionError);
  CHECK_THROWS_AS(planning_sensitivity(kWeights, r, PredictionMap{}, SensitivityConfig{}),
                  MissingPredictionError);
}
