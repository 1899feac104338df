#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <vector>

#include "planeval/types.hpp"

namespace planeval {

/// One step of a Gaussian prediction: mean and 2x2 covariance.
struct GaussianStep {
  Vec2 mean = Vec2::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

/// Minimum over a candidate set, with the index of the winning candidate.
/// Ties resolve to the lowest index.
struct MinMetricResult {
  double value = 0.0;
  std::size_t index = 0;
};

/// Mean Euclidean displacement between prediction and ground truth.
double ade(const Trajectory& prediction, const Trajectory& ground_truth);

/// Euclidean displacement at the final step.
double fde(const Trajectory& prediction, const Trajectory& ground_truth);

MinMetricResult min_ade(const std::vector<Trajectory>& candidates,
                        const Trajectory& ground_truth);
MinMetricResult min_fde(const std::vector<Trajectory>& candidates,
                        const Trajectory& ground_truth);

/// Mean per-step negative log density of the ground truth under the
/// predicted Gaussians. Covariances must be symmetric positive definite.
double nll_gaussian(const std::vector<GaussianStep>& prediction,
                    const Trajectory& ground_truth);

/// Mean per-step negative log density of the ground truth under a 2D
/// Gaussian kernel density fitted to the sample trajectories at that step.
/// Per-axis bandwidths follow Scott's rule (sample std * m^(-1/6)) with a
/// floor of 1e-3 m; densities are floored at 1e-300 before the log.
/// Needs at least two samples.
double kde_nll(const std::vector<Trajectory>& samples,
               const Trajectory& ground_truth);

/// How per-agent sensitivities are combined into the metric weights.
struct WeightingScheme {
  enum class Kind { normalization, softmax, gt_excess };
  Kind kind = Kind::gt_excess;
  std::map<AgentId, double> gt_sensitivity;  // used by gt_excess only

  static WeightingScheme normalization() { return {Kind::normalization, {}}; }
  static WeightingScheme softmax() { return {Kind::softmax, {}}; }
  static WeightingScheme gt_excess(std::map<AgentId, double> gt) {
    return {Kind::gt_excess, std::move(gt)};
  }
};

/// Per-agent weights f(a, g) >= 1 for a sensitivity map:
///   normalization: 1 + g_a / sum(g)            (all-ones when sum < 1e-12)
///   softmax:       1 + softmax(g)_a            (max-subtracted)
///   gt_excess:     1 + max(0, g_a - g_gt_a)
std::map<AgentId, double> scheme_weights(const std::map<AgentId, double>& g,
                                         const WeightingScheme& scheme);

/// Planning-informed aggregate: mean over agents of f(a, g) * metric_a.
/// The metric and sensitivity maps must share their key set.
double pi_wrap(const std::map<AgentId, double>& per_agent_metric,
               const std::map<AgentId, double>& g,
               const WeightingScheme& scheme);

}  // namespace planeval
