#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "planeval/cost_model.hpp"
#include "planeval/types.hpp"

namespace planeval {

struct LearnConfig {
  double hessian_fd_step = 1e-4;   // central-difference step over controls
  double pd_regularizer = 1e-6;    // lambda added to H when it is not PD
  int max_iterations = 500;
  double tolerance = 1e-6;         // inf-norm of d(LL)/d(log theta)
  Eigen::Vector4d initial_log_weights = Eigen::Vector4d::Zero();
};

struct LearnResult {
  CostWeights weights;
  bool converged = false;
  int iterations = 0;
  double grad_inf_norm = 0.0;
  // A direction is flat when its log-space gradient never exceeded the
  // convergence tolerance; the data then says nothing about that weight.
  std::array<bool, 4> flat_directions{false, false, false, false};
};

/// Central finite differences of the analytic control gradient, symmetrized.
/// Perturbs only the controls; agent data stays fixed.
Eigen::MatrixXd hessian_controls(const CostWeights& weights, const Rollout& rollout,
                                 const LearnConfig& config,
                                 const FeatureConfig& features);

/// Laplace approximation of the max-ent demonstration log-likelihood,
///   LL = -1/2 g' H^-1 g + 1/2 log det H - d/2 log 2 pi,
/// with g the control gradient and H the control Hessian of the rollout
/// cost (d = 2 * horizon). A non-PD H is retried as H + lambda I; if that is
/// still not PD an IllConditionedError carrying the smallest eigenvalue is
/// thrown.
double laplace_log_likelihood(const CostWeights& weights, const Rollout& rollout,
                              const LearnConfig& config, const FeatureConfig& features);

/// Maximizes the summed rollout log-likelihood over log-space weights by
/// gradient ascent with backtracking line search. Deterministic for a given
/// input; non-convergence is reported through the result flag, never thrown.
LearnResult learn_weights(const std::vector<Rollout>& rollouts, const LearnConfig& config,
                          const FeatureConfig& features);

}  // namespace planeval
