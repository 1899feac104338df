#pragma once

#include <cstddef>
#include <map>

#include "planeval/cost_model.hpp"
#include "planeval/types.hpp"

namespace planeval {

/// Controls how per-step prediction gradients collapse to one scalar.
struct SensitivityConfig {
  enum class Aggregation { l2_norm, max_step };
  FeatureConfig features;
  Aggregation aggregation = Aggregation::l2_norm;
};

/// Per-agent planning sensitivity, with how it was computed.
struct SensitivityMap {
  std::map<AgentId, double> values;
  SensitivityConfig::Aggregation aggregation = SensitivityConfig::Aggregation::l2_norm;
  std::size_t horizon = 0;  // rollout steps that entered the aggregation
};

/// Sensitivity of the rollout's planning cost to one predicted trajectory.
///
/// The k-th predicted position is scored against the regenerated ego state
/// at step k+1 (matched timesteps, no planner invoked): each step yields the
/// gradient of the instantaneous cost with respect to that position, and the
/// stacked gradients collapse per the configured aggregation (Euclidean norm
/// over all time/coordinate entries, or the largest per-step norm).
double sensitivity_of_trajectory(const CostWeights& weights, const Rollout& rollout,
                                 const Trajectory& prediction,
                                 const SensitivityConfig& config);

/// sensitivity_of_trajectory for every agent in the rollout. The prediction
/// map must cover all of them.
SensitivityMap planning_sensitivity(const CostWeights& weights, const Rollout& rollout,
                                    const PredictionMap& predictions,
                                    const SensitivityConfig& config);

}  // namespace planeval
