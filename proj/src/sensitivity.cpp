#include "planeval/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

double aggregate(const Rollout& rollout, const Trajectory& prediction,
                 const CostWeights& weights, const SensitivityConfig& config,
                 const std::vector<EgoState>& states) {
  const double bw = config.features.rbf_bandwidth;
  const double bw2 = bw * bw;
  const std::size_t steps = std::min(rollout.horizon(), prediction.size());

  double sq_sum = 0.0;
  double peak = 0.0;
  for (std::size_t t = 1; t <= steps; ++t) {
    const Vec2 p = states[t].position();
    const Vec2& c = prediction[t - 1];
    const double k = std::exp(-(p - c).squaredNorm() / (2.0 * bw2));
    const Vec2 grad = weights.rbf_pred * k * (p - c) / bw2;
    sq_sum += grad.squaredNorm();
    peak = std::max(peak, grad.norm());
  }
  return config.aggregation == SensitivityConfig::Aggregation::l2_norm ? std::sqrt(sq_sum)
                                                                       : peak;
}

}  // namespace

double sensitivity_of_trajectory(const CostWeights& weights, const Rollout& rollout,
                                 const Trajectory& prediction,
                                 const SensitivityConfig& config) {
  validate_rollout(rollout);
  if (prediction.empty()) {
    throw MissingPredictionError("sensitivity: empty predicted trajectory");
  }
  return aggregate(rollout, prediction, weights, config, rollout_states(rollout));
}

SensitivityMap planning_sensitivity(const CostWeights& weights, const Rollout& rollout,
                                    const PredictionMap& predictions,
                                    const SensitivityConfig& config) {
  validate_rollout(rollout);
  const std::vector<EgoState> states = rollout_states(rollout);

  SensitivityMap out;
  out.aggregation = config.aggregation;
  out.horizon = rollout.horizon();
  for (const AgentTrack& track : rollout.agents) {
    auto it = predictions.find(track.id);
    if (it == predictions.end() || it->second.empty()) {
      throw MissingPredictionError("sensitivity: agent '" + track.id +
                                   "' has no predicted trajectory");
    }
    out.values[track.id] = aggregate(rollout, it->second, weights, config, states);
  }
  return out;
}

}  // namespace planeval
