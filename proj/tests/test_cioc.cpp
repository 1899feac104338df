#include <doctest.h>

#include <cmath>
#include <random>

#include "planeval/cioc.hpp"
#include "planeval/cost_model.hpp"
#include "planeval/errors.hpp"
#include "planeval/sim_env.hpp"

using namespace planeval;

namespace {

/// Rollout with no agents; snapshots are present but empty.
Rollout bare_rollout(std::vector<Control> controls) {
  Rollout r;
  r.dt = 0.1;
  r.initial = {0.0, 0.0, 0.0};
  r.controls = std::move(controls);
  r.predictions.assign(r.controls.size(), PredictionMap{});
  return r;
}

Rollout random_rollout(std::mt19937_64& rng, std::size_t t_roll) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::uniform_real_distribution<double> speed(0.2, 2.0);
  std::uniform_real_distribution<double> turn(0.1, 1.0);
  std::uniform_real_distribution<double> walk(-0.3, 0.3);
  std::bernoulli_distribution flip;

  Rollout r;
  r.dt = 0.1;
  r.initial = {pos(rng), pos(rng), angle(rng)};
  AgentTrack track;
  track.id = "a";
  track.positions.push_back(Vec2(pos(rng), pos(rng)));
  for (std::size_t t = 0; t < t_roll; ++t) {
    r.controls.push_back({speed(rng), (flip(rng) ? 1.0 : -1.0) * turn(rng)});
    track.positions.push_back(track.positions.back() + Vec2(walk(rng), walk(rng)));
  }
  r.agents.push_back(track);
  for (std::size_t t = 0; t < t_roll; ++t) {
    PredictionMap snap;
    snap["a"] = {track.positions[t] + Vec2(walk(rng), walk(rng))};
    r.predictions.push_back(std::move(snap));
  }
  return r;
}

const CostWeights kWeights{0.8, 0.5, 1.7, 1.3};

}  // namespace

TEST_CASE("control hessian of the control-only cost is twice the identity") {
  std::mt19937_64 rng(21);
  const Rollout r = random_rollout(rng, 4);
  const Eigen::MatrixXd h =
      hessian_controls(CostWeights{0.0, 1.0, 0.0, 0.0}, r, LearnConfig{}, FeatureConfig{});
  REQUIRE(h.rows() == 8);
  REQUIRE(h.cols() == 8);
  CHECK((h - 2.0 * Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("control hessian is symmetric and matches second differences of the cost") {
  std::mt19937_64 rng(22);
  const Rollout r = random_rollout(rng, 3);
  const FeatureConfig features;
  const Eigen::MatrixXd h = hessian_controls(kWeights, r, LearnConfig{}, features);
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const auto with_controls = [&](const Eigen::VectorXd& flat) {
    Rollout c = r;
    for (std::size_t t = 0; t < c.controls.size(); ++t) {
      c.controls[t] = {flat[2 * t], flat[2 * t + 1]};
    }
    return trajectory_cost(kWeights, c, features);
  };
  Eigen::VectorXd u0(6);
  for (std::size_t t = 0; t < 3; ++t) {
    u0[2 * t] = r.controls[t].speed;
    u0[2 * t + 1] = r.controls[t].turn_rate;
  }
  const double step = 1e-3;
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd pp = u0, pm = u0, mp = u0, mm = u0;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      const double fd = (with_controls(pp) - with_controls(pm) - with_controls(mp) +
                         with_controls(mm)) / (4.0 * step * step);
      worst = std::max(worst, std::abs(h(i, j) - fd));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("laplace likelihood frozen fixtures") {
  const CostWeights control_only{0.0, 1.0, 0.0, 0.0};
  const double single =
      laplace_log_likelihood(control_only, bare_rollout({{0.0, 0.0}}), LearnConfig{},
                             FeatureConfig{});
  CHECK(std::abs(single - (-1.1447298858494001741)) <= 1e-12);

  const double triple = laplace_log_likelihood(
      control_only, bare_rollout({{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}), LearnConfig{},
      FeatureConfig{});
  CHECK(std::abs(triple - 3.0 * (-1.1447298858494001741)) <= 1e-10);

  // Nonzero control: the quadratic term contributes -|u|^2 on top of -log pi.
  const double pushed = laplace_log_likelihood(control_only, bare_rollout({{0.3, -0.2}}),
                                               LearnConfig{}, FeatureConfig{});
  CHECK(std::abs(pushed - (-0.13 - 1.1447298858494001741)) <= 1e-10);
}

TEST_CASE("singular hessians are regularized, larger floors give larger likelihood") {
  const Rollout r = bare_rollout({{0.2, 0.1}, {0.1, -0.1}});
  const CostWeights zero{0.0, 0.0, 0.0, 0.0};
  LearnConfig config;
  const double ll_small = laplace_log_likelihood(zero, r, config, FeatureConfig{});
  CHECK(std::abs(ll_small - (2.0 * std::log(1e-6) - 2.0 * std::log(2.0 * M_PI))) <= 1e-9);
  config.pd_regularizer = 1e-3;
  const double ll_large = laplace_log_likelihood(zero, r, config, FeatureConfig{});
  CHECK(std::abs(ll_large - (2.0 * std::log(1e-3) - 2.0 * std::log(2.0 * M_PI))) <= 1e-9);
  CHECK(ll_large > ll_small);
}

TEST_CASE("negative curvature raises an ill-conditioning error") {
  Rollout r;
  r.dt = 0.1;
  r.initial = {0.0, 0.0, 0.0};
  r.controls = {{1.0, 0.0}};
  AgentTrack track;
  track.id = "a";
  track.positions = {Vec2(0.1, 0.0), Vec2(0.1, 0.0)};
  r.agents = {track};
  r.predictions = {{{"a", {Vec2(5.0, 5.0)}}}};

  // The ego lands exactly on the agent, so the current-position bump is at its
  // peak and the cost is locally concave along the speed control.
  const CostWeights repulsive{0.0, 1e-9, 100.0, 0.0};
  bool threw = false;
  try {
    laplace_log_likelihood(repulsive, r, LearnConfig{}, FeatureConfig{});
  } catch (const IllConditionedError& e) {
    threw = true;
    CHECK(e.min_eigenvalue < 0.0);
  }
  CHECK(threw);
}

TEST_CASE("learning finds a stationary point of the summed likelihood") {
  ScenarioConfig cfg = preset_defaults(Preset::random);
  cfg.horizon = 16;
  std::vector<Rollout> rollouts;
  for (int i = 0; i < 8; ++i) {
    cfg.seed = 900 + static_cast<std::uint64_t>(i);
    rollouts.push_back(generate_scenario(cfg).rollout);
  }

  const LearnConfig config;
  const FeatureConfig features;
  const LearnResult result = learn_weights(rollouts, config, features);
  CHECK(result.converged);
  CHECK(result.grad_inf_norm < config.tolerance);
  CHECK(result.weights.goal > 0.0);
  CHECK(result.weights.control > 0.0);
  CHECK(result.weights.rbf_current > 0.0);
  CHECK(result.weights.rbf_pred > 0.0);

  const auto summed_ll = [&](const Eigen::Vector4d& eta) {
    CostWeights w = CostWeights::from_vector(eta.array().exp());
    double total = 0.0;
    for (const Rollout& r : rollouts) {
      total += laplace_log_likelihood(w, r, config, features);
    }
    return total;
  };
  const Eigen::Vector4d eta_hat = result.weights.as_vector().array().log();
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d hi = eta_hat, lo = eta_hat;
    hi[i] += h;
    lo[i] -= h;
    CHECK(std::abs(summed_ll(hi) - summed_ll(lo)) / (2.0 * h) <= 1e-3);
  }

  const LearnResult again = learn_weights(rollouts, config, features);
  CHECK(again.weights.goal == result.weights.goal);
  CHECK(again.weights.control == result.weights.control);
  CHECK(again.weights.rbf_current == result.weights.rbf_current);
  CHECK(again.weights.rbf_pred == result.weights.rbf_pred);
  CHECK(again.iterations == result.iterations);
}

TEST_CASE("distant agents leave the collision weights flat") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  std::vector<Rollout> rollouts;
  for (int k = 0; k < 4; ++k) {
    Rollout r;
    r.dt = 0.1;
    r.initial = {small(rng), small(rng), small(rng)};
    AgentTrack track;
    track.id = "far";
    track.positions.push_back(Vec2(60.0, 60.0));
    for (int t = 0; t < 5; ++t) {
      r.controls.push_back({0.2 + 0.1 * small(rng), small(rng)});
      track.positions.push_back(track.positions.back() + Vec2(small(rng), small(rng)));
    }
    r.agents = {track};
    for (int t = 0; t < 5; ++t) {
      r.predictions.push_back({{"far", {track.positions[t]}}});
    }
    rollouts.push_back(std::move(r));
  }

  const LearnResult result = learn_weights(rollouts, LearnConfig{}, FeatureConfig{});
  CHECK(result.flat_directions[2]);
  CHECK(result.flat_directions[3]);
  CHECK(result.weights.rbf_current > 0.1);
  CHECK(result.weights.rbf_current < 10.0);
  CHECK(result.weights.rbf_pred > 0.1);
  CHECK(result.weights.rbf_pred < 10.0);
}

TEST_CASE("learning rejects an empty corpus") {
  CHECK_THROWS_AS(learn_weights({}, LearnConfig{}, FeatureConfig{}), EmptyInputError);
}
