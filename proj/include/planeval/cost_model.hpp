#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "planeval/types.hpp"

namespace planeval {

/// Weights of the linear planning cost c = theta . features. All components
/// are nonnegative; zero switches a feature off.
struct CostWeights {
  double goal = 1.0;
  double control = 1.0;
  double rbf_current = 1.0;
  double rbf_pred = 1.0;

  Eigen::Vector4d as_vector() const { return {goal, control, rbf_current, rbf_pred}; }
  static CostWeights from_vector(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }
};

/// Parameters of the cost features themselves (not of the weights).
struct FeatureConfig {
  Vec2 goal = Vec2::Zero();
  double rbf_bandwidth = 1.0;  // meters, must be > 0
};

/// Everything the instantaneous cost sees at one timestep: the ego state,
/// the other agents' current positions, and the predictions available for
/// them. Agent order is preserved; prediction horizons must agree.
struct SceneSnapshot {
  EgoState ego;
  std::vector<std::pair<AgentId, Vec2>> agents;
  PredictionMap predictions;
};

/// Feature values in weight order: goal, control, rbf_current, rbf_pred.
struct FeatureVector {
  double goal_term = 0.0;
  double control_term = 0.0;
  double rbf_current_term = 0.0;
  double rbf_pred_term = 0.0;

  Eigen::Vector4d as_vector() const {
    return {goal_term, control_term, rbf_current_term, rbf_pred_term};
  }
};

/// Evaluates the four cost features:
///   goal_term        = |ego - goal|^2
///   control_term     = v^2 + w^2
///   rbf_current_term = sum_a exp(-|ego - agent_a|^2 / (2 bw^2))
///   rbf_pred_term    = the same sum over each agent's first predicted position
FeatureVector features(const SceneSnapshot& snapshot, const Control& control,
                       const FeatureConfig& config);

/// Instantaneous cost theta . features.
double cost(const CostWeights& weights, const SceneSnapshot& snapshot,
            const Control& control, const FeatureConfig& config);

/// d(cost)/d(control) = (2 w_control v, 2 w_control w).
Eigen::Vector2d grad_cost_controls(const CostWeights& weights,
                                   const SceneSnapshot& snapshot,
                                   const Control& control,
                                   const FeatureConfig& config);

/// d(cost)/d(predicted position), per agent and per prediction step. Only
/// the first prediction step enters the cost, so later steps are zero.
std::map<AgentId, std::vector<Vec2>> grad_cost_predictions(
    const CostWeights& weights, const SceneSnapshot& snapshot,
    const Control& control, const FeatureConfig& config);

/// Total rollout cost sum_t c(s_t, u_{t-1}) for t = 1..T, where the states
/// are regenerated from (initial, controls) through step_dynamic. The value
/// is therefore a function of the control sequence alone.
double trajectory_cost(const CostWeights& weights, const Rollout& rollout,
                       const FeatureConfig& config);

/// Exact gradient of trajectory_cost with respect to the stacked controls
/// (layout: v_0, w_0, v_1, w_1, ...), chaining the position-dependent terms
/// through the step Jacobians.
Eigen::VectorXd trajectory_cost_control_gradient(const CostWeights& weights,
                                                 const Rollout& rollout,
                                                 const FeatureConfig& config);

/// Snapshot of the rollout as seen at state t (t = 1..horizon): regenerated
/// ego state, agent positions at t, and the stored prediction map. Shared by
/// the cost and sensitivity passes.
SceneSnapshot rollout_snapshot(const Rollout& rollout, std::size_t t,
                               const EgoState& ego_at_t);

/// Regenerates the ego states s_0..s_T from (initial, controls).
std::vector<EgoState> rollout_states(const Rollout& rollout);

/// Throws MalformedRolloutError unless all rollout sequences are aligned.
void validate_rollout(const Rollout& rollout);

}  // namespace planeval
