#include "planeval/cost_model.hpp"

#include <cmath>
#include <string>

#include "planeval/dynamics.hpp"
#include "planeval/errors.hpp"

namespace planeval {

namespace {

double rbf(const Vec2& a, const Vec2& b, double bandwidth) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

void check_config(const FeatureConfig& config) {
  if (!(config.rbf_bandwidth > 0.0) || !std::isfinite(config.rbf_bandwidth)) {
    throw InvalidInputError("cost: rbf_bandwidth must be positive and finite");
  }
}

const Trajectory& prediction_for(const SceneSnapshot& snapshot, const AgentId& id) {
  auto it = snapshot.predictions.find(id);
  if (it == snapshot.predictions.end() || it->second.empty()) {
    throw MissingPredictionError("cost: agent '" + id + "' has no predicted trajectory");
  }
  return it->second;
}

}  // namespace

FeatureVector features(const SceneSnapshot& snapshot, const Control& control,
                       const FeatureConfig& config) {
  check_config(config);
  const Vec2 p = snapshot.ego.position();
  FeatureVector f;
  f.goal_term = (p - config.goal).squaredNorm();
  f.control_term = control.speed * control.speed + control.turn_rate * control.turn_rate;

  std::size_t horizon = 0;
  bool first = true;
  for (const auto& [id, pos] : snapshot.agents) {
    const Trajectory& pred = prediction_for(snapshot, id);
    if (first) {
      horizon = pred.size();
      first = false;
    } else if (pred.size() != horizon) {
      throw InvalidInputError("cost: prediction horizons differ across agents");
    }
    f.rbf_current_term += rbf(p, pos, config.rbf_bandwidth);
    f.rbf_pred_term += rbf(p, pred.front(), config.rbf_bandwidth);
  }
  return f;
}

double cost(const CostWeights& weights, const SceneSnapshot& snapshot,
            const Control& control, const FeatureConfig& config) {
  return weights.as_vector().dot(features(snapshot, control, config).as_vector());
}

Eigen::Vector2d grad_cost_controls(const CostWeights& weights,
                                   const SceneSnapshot& snapshot,
                                   const Control& control,
                                   const FeatureConfig& config) {
  check_config(config);
  (void)snapshot;
  return {2.0 * weights.control * control.speed,
          2.0 * weights.control * control.turn_rate};
}

std::map<AgentId, std::vector<Vec2>> grad_cost_predictions(
    const CostWeights& weights, const SceneSnapshot& snapshot,
    const Control& control, const FeatureConfig& config) {
  check_config(config);
  (void)control;
  const Vec2 p = snapshot.ego.position();
  const double bw2 = config.rbf_bandwidth * config.rbf_bandwidth;

  std::map<AgentId, std::vector<Vec2>> out;
  for (const auto& [id, pos] : snapshot.agents) {
    (void)pos;
    const Trajectory& pred = prediction_for(snapshot, id);
    std::vector<Vec2> g(pred.size(), Vec2::Zero());
    // Only the first step enters the cost; the gradient is with respect to
    // the predicted position itself.
    g[0] = weights.rbf_pred * rbf(p, pred.front(), config.rbf_bandwidth) *
           (p - pred.front()) / bw2;
    out.emplace(id, std::move(g));
  }
  return out;
}

void validate_rollout(const Rollout& rollout) {
  const std::size_t t_roll = rollout.controls.size();
  if (t_roll == 0) {
    throw MalformedRolloutError("rollout: control sequence is empty");
  }
  if (!(rollout.dt > 0.0) || !std::isfinite(rollout.dt)) {
    throw MalformedRolloutError("rollout: dt must be positive and finite");
  }
  for (const AgentTrack& track : rollout.agents) {
    if (track.positions.size() != t_roll + 1) {
      throw MalformedRolloutError("rollout: agent '" + track.id + "' has " +
                                  std::to_string(track.positions.size()) +
                                  " positions, expected " + std::to_string(t_roll + 1));
    }
  }
  if (rollout.predictions.size() != t_roll) {
    throw MalformedRolloutError("rollout: " + std::to_string(rollout.predictions.size()) +
                                " prediction snapshots, expected " + std::to_string(t_roll));
  }
}

std::vector<EgoState> rollout_states(const Rollout& rollout) {
  const StepConfig step{rollout.dt, 1e-6};
  std::vector<EgoState> states;
  states.reserve(rollout.controls.size() + 1);
  states.push_back(rollout.initial);
  for (const Control& u : rollout.controls) {
    states.push_back(step_dynamic(states.back(), u, step));
  }
  return states;
}

SceneSnapshot rollout_snapshot(const Rollout& rollout, std::size_t t,
                               const EgoState& ego_at_t) {
  SceneSnapshot snap;
  snap.ego = ego_at_t;
  snap.agents.reserve(rollout.agents.size());
  for (const AgentTrack& track : rollout.agents) {
    snap.agents.emplace_back(track.id, track.positions[t]);
  }
  snap.predictions = rollout.predictions[t - 1];
  return snap;
}

double trajectory_cost(const CostWeights& weights, const Rollout& rollout,
                       const FeatureConfig& config) {
  validate_rollout(rollout);
  const StepConfig step{rollout.dt, 1e-6};
  EgoState s = rollout.initial;
  double total = 0.0;
  for (std::size_t t = 1; t <= rollout.controls.size(); ++t) {
    const Control& u = rollout.controls[t - 1];
    s = step_dynamic(s, u, step);
    total += cost(weights, rollout_snapshot(rollout, t, s), u, config);
  }
  return total;
}

Eigen::VectorXd trajectory_cost_control_gradient(const CostWeights& weights,
                                                 const Rollout& rollout,
                                                 const FeatureConfig& config) {
  validate_rollout(rollout);
  check_config(config);
  const std::size_t t_roll = rollout.controls.size();
  const StepConfig step{rollout.dt, 1e-6};
  const double bw2 = config.rbf_bandwidth * config.rbf_bandwidth;

  // Forward pass: states, step Jacobians, and per-step cost gradients with
  // respect to the landing state (heading never enters the cost).
  std::vector<EgoState> states = rollout_states(rollout);
  std::vector<Jacobians> jac(t_roll);
  std::vector<Eigen::Vector3d> dl_ds(t_roll + 1, Eigen::Vector3d::Zero());
  for (std::size_t t = 0; t < t_roll; ++t) {
    jac[t] = jacobians_dynamic(states[t], rollout.controls[t], step);
  }
  for (std::size_t t = 1; t <= t_roll; ++t) {
    const SceneSnapshot snap = rollout_snapshot(rollout, t, states[t]);
    const Vec2 p = snap.ego.position();
    Vec2 gp = 2.0 * weights.goal * (p - config.goal);
    for (const auto& [id, pos] : snap.agents) {
      const Trajectory& pred = prediction_for(snap, id);
      gp -= weights.rbf_current * rbf(p, pos, config.rbf_bandwidth) * (p - pos) / bw2;
      gp -= weights.rbf_pred * rbf(p, pred.front(), config.rbf_bandwidth) *
            (p - pred.front()) / bw2;
    }
    dl_ds[t].head<2>() = gp;
  }

  // Backward pass: adjoint lambda_t accumulates the effect of state t on all
  // later step costs; controls pick it up through their B matrices.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(t_roll));
  Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
  for (std::size_t t = t_roll; t >= 1; --t) {
    lambda += dl_ds[t];
    const Control& u = rollout.controls[t - 1];
    Eigen::Vector2d gu = jac[t - 1].b_matrix.transpose() * lambda;
    gu[0] += 2.0 * weights.control * u.speed;
    gu[1] += 2.0 * weights.control * u.turn_rate;
    grad.segment<2>(2 * static_cast<Eigen::Index>(t - 1)) = gu;
    lambda = jac[t - 1].a_matrix.transpose() * lambda;
  }
  return grad;
}

}  // namespace planeval
