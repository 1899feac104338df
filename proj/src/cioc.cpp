#include "planeval/cioc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

Eigen::MatrixXd fd_hessian(const CostWeights& weights, const Rollout& rollout,
                           double step, const FeatureConfig& features) {
  const Eigen::Index d = 2 * static_cast<Eigen::Index>(rollout.horizon());
  Eigen::MatrixXd h(d, d);
  Rollout work = rollout;
  for (Eigen::Index j = 0; j < d; ++j) {
    double& coord = (j % 2 == 0) ? work.controls[j / 2].speed : work.controls[j / 2].turn_rate;
    const double saved = coord;
    coord = saved + step;
    const Eigen::VectorXd plus = trajectory_cost_control_gradient(weights, work, features);
    coord = saved - step;
    const Eigen::VectorXd minus = trajectory_cost_control_gradient(weights, work, features);
    coord = saved;
    h.col(j) = (plus - minus) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

/// g and H of one rollout split by feature, so that for any theta >= 0
/// g(theta) and H(theta) are cheap linear combinations.
struct RolloutTerms {
  std::array<Eigen::VectorXd, 4> g;
  std::array<Eigen::MatrixXd, 4> h;
  Eigen::Index d = 0;

  Eigen::VectorXd assemble_g(const Eigen::Vector4d& theta) const {
    Eigen::VectorXd out = theta[0] * g[0];
    for (int i = 1; i < 4; ++i) {
      out += theta[i] * g[i];
    }
    return out;
  }
  Eigen::MatrixXd assemble_h(const Eigen::Vector4d& theta) const {
    Eigen::MatrixXd out = theta[0] * h[0];
    for (int i = 1; i < 4; ++i) {
      out += theta[i] * h[i];
    }
    return out;
  }
};

RolloutTerms decompose(const Rollout& rollout, const LearnConfig& config,
                       const FeatureConfig& features) {
  RolloutTerms terms;
  terms.d = 2 * static_cast<Eigen::Index>(rollout.horizon());
  static const std::array<CostWeights, 4> kUnit = {
      CostWeights{1, 0, 0, 0}, CostWeights{0, 1, 0, 0},
      CostWeights{0, 0, 1, 0}, CostWeights{0, 0, 0, 1}};
  for (int i = 0; i < 4; ++i) {
    terms.g[i] = trajectory_cost_control_gradient(kUnit[i], rollout, features);
    terms.h[i] = fd_hessian(kUnit[i], rollout, config.hessian_fd_step, features);
  }
  return terms;
}

struct LaplaceParts {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

/// Cholesky of H, falling back to H + lambda I. Empty on failure.
std::optional<LaplaceParts> factor(Eigen::MatrixXd h, double regularizer) {
  LaplaceParts parts;
  parts.llt.compute(h);
  if (parts.llt.info() != Eigen::Success) {
    h.diagonal().array() += regularizer;
    parts.llt.compute(h);
    if (parts.llt.info() != Eigen::Success) {
      return std::nullopt;
    }
  }
  parts.log_det = 2.0 * parts.llt.matrixLLT().diagonal().array().log().sum();
  return parts;
}

double laplace_from_parts(const Eigen::VectorXd& g, const LaplaceParts& parts,
                          Eigen::Index d) {
  const Eigen::VectorXd alpha = parts.llt.solve(g);
  return -0.5 * g.dot(alpha) + 0.5 * parts.log_det -
         0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
}

/// Summed LL over rollouts; nullopt when any Hessian fails to factor, which
/// the line search treats as an unacceptable step.
std::optional<double> objective(const std::vector<RolloutTerms>& all_terms,
                                const Eigen::Vector4d& theta, double regularizer) {
  double total = 0.0;
  for (const RolloutTerms& terms : all_terms) {
    auto parts = factor(terms.assemble_h(theta), regularizer);
    if (!parts) {
      return std::nullopt;
    }
    total += laplace_from_parts(terms.assemble_g(theta), *parts, terms.d);
  }
  return total;
}

/// Objective and its gradient with respect to log-weights.
std::optional<double> objective_grad(const std::vector<RolloutTerms>& all_terms,
                                     const Eigen::Vector4d& theta, double regularizer,
                                     Eigen::Vector4d& grad_eta) {
  double total = 0.0;
  Eigen::Vector4d grad_theta = Eigen::Vector4d::Zero();
  for (const RolloutTerms& terms : all_terms) {
    auto parts = factor(terms.assemble_h(theta), regularizer);
    if (!parts) {
      return std::nullopt;
    }
    const Eigen::VectorXd g = terms.assemble_g(theta);
    const Eigen::VectorXd alpha = parts->llt.solve(g);
    total += -0.5 * g.dot(alpha) + 0.5 * parts->log_det -
             0.5 * static_cast<double>(terms.d) * std::log(2.0 * std::numbers::pi);
    const Eigen::MatrixXd h_inv =
        parts->llt.solve(Eigen::MatrixXd::Identity(terms.d, terms.d));
    for (int i = 0; i < 4; ++i) {
      grad_theta[i] += -terms.g[i].dot(alpha) + 0.5 * alpha.dot(terms.h[i] * alpha) +
                       0.5 * h_inv.cwiseProduct(terms.h[i]).sum();
    }
  }
  grad_eta = grad_theta.cwiseProduct(theta);
  return total;
}

}  // namespace

Eigen::MatrixXd hessian_controls(const CostWeights& weights, const Rollout& rollout,
                                 const LearnConfig& config, const FeatureConfig& features) {
  validate_rollout(rollout);
  return fd_hessian(weights, rollout, config.hessian_fd_step, features);
}

double laplace_log_likelihood(const CostWeights& weights, const Rollout& rollout,
                              const LearnConfig& config, const FeatureConfig& features) {
  validate_rollout(rollout);
  const Eigen::VectorXd g = trajectory_cost_control_gradient(weights, rollout, features);
  const Eigen::MatrixXd h = fd_hessian(weights, rollout, config.hessian_fd_step, features);
  auto parts = factor(h, config.pd_regularizer);
  if (!parts) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    throw IllConditionedError(
        "laplace_log_likelihood: Hessian not positive definite after regularization",
        eig.eigenvalues().minCoeff());
  }
  return laplace_from_parts(g, *parts, g.size());
}

LearnResult learn_weights(const std::vector<Rollout>& rollouts, const LearnConfig& config,
                          const FeatureConfig& features) {
  if (rollouts.empty()) {
    throw EmptyInputError("learn_weights: no rollouts");
  }
  std::vector<RolloutTerms> terms;
  terms.reserve(rollouts.size());
  for (const Rollout& r : rollouts) {
    validate_rollout(r);
    terms.push_back(decompose(r, config, features));
  }

  const auto as_theta = [](const Eigen::Vector4d& eta) -> Eigen::Vector4d {
    return eta.array().exp().matrix();
  };

  Eigen::Vector4d eta = config.initial_log_weights;
  Eigen::Vector4d grad = Eigen::Vector4d::Zero();
  Eigen::Vector4d flat_peak = Eigen::Vector4d::Zero();

  std::optional<double> value = objective_grad(terms, as_theta(eta), config.pd_regularizer, grad);

  LearnResult result;
  // BFGS ascent. Plain steepest ascent crawls here: the summed likelihood is
  // orders of magnitude stiffer along the control weight than along the two
  // collision weights, so a curvature estimate is needed to make the
  // tolerance reachable within the iteration cap.
  Eigen::Matrix4d inv_hess = Eigen::Matrix4d::Identity();
  int iter = 0;
  for (; iter < config.max_iterations && value; ++iter) {
    flat_peak = flat_peak.cwiseMax(grad.cwiseAbs());
    result.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.grad_inf_norm < config.tolerance) {
      result.converged = true;
      break;
    }

    Eigen::Vector4d dir = inv_hess * grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {
      inv_hess.setIdentity();
      dir = grad;
      slope = grad.squaredNorm();
    }

    // Backtracking line search along dir (Armijo, c1 = 1e-4).
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      const Eigen::Vector4d trial = eta + step * dir;
      const std::optional<double> trial_value =
          objective(terms, as_theta(trial), config.pd_regularizer);
      if (trial_value && std::isfinite(*trial_value) &&
          *trial_value >= *value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;  // numerical floor; report the gradient norm we stalled at
    }

    const Eigen::Vector4d eta_new = eta + step * dir;
    Eigen::Vector4d grad_new = Eigen::Vector4d::Zero();
    value = objective_grad(terms, as_theta(eta_new), config.pd_regularizer, grad_new);
    if (value) {
      const Eigen::Vector4d s = eta_new - eta;
      const Eigen::Vector4d y = grad - grad_new;  // curvature of the negated objective
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const Eigen::Matrix4d left = Eigen::Matrix4d::Identity() - (s * y.transpose()) / sy;
        inv_hess = left * inv_hess * left.transpose() + (s * s.transpose()) / sy;
      }
    }
    eta = eta_new;
    grad = grad_new;
  }
  if (value) {
    flat_peak = flat_peak.cwiseMax(grad.cwiseAbs());
    result.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.grad_inf_norm < config.tolerance) {
      result.converged = true;
    }
  }

  result.iterations = iter;
  result.weights = CostWeights::from_vector(as_theta(eta));
  for (int i = 0; i < 4; ++i) {
    result.flat_directions[i] = flat_peak[i] < config.tolerance;
  }
  return result;
}

}  // namespace planeval
