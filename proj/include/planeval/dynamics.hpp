#pragma once

#include <Eigen/Dense>

#include "planeval/types.hpp"

namespace planeval {

/// Step parameters shared by both unicycle variants.
struct StepConfig {
  double dt = 0.1;          // seconds, must be > 0
  double omega_eps = 1e-6;  // |turn_rate| below this selects the zero-turn branch
};

/// Jacobians of one discrete step with respect to state and control.
struct Jacobians {
  Eigen::Matrix3d a_matrix;             // d(next state) / d(state)
  Eigen::Matrix<double, 3, 2> b_matrix; // d(next state) / d(control)
};

/// First-order (kinematic) unicycle step.
///
/// The commanded turn offsets the heading used for the position update, and
/// the full turn is added to the heading without a dt factor:
///   x'   = x + v * cos(heading + w) * dt
///   y'   = y + v * sin(heading + w) * dt
///   phi' = heading + w
EgoState step_kinematic(const EgoState& state, const Control& control,
                        const StepConfig& config);

/// Exact Jacobians of step_kinematic.
Jacobians jacobians_kinematic(const EgoState& state, const Control& control,
                              const StepConfig& config);

/// Second-order (dynamic) unicycle step with exact turn integration.
///
/// For |w| >= omega_eps the position integrates the arc exactly:
///   x'   = x + v * (sin(heading + w*dt) - sin(heading)) / w
///   y'   = y - v * (cos(heading + w*dt) - cos(heading)) / w
///   phi' = heading + w * dt
/// For |w| < omega_eps the straight-line limit is used and the heading is
/// held fixed.
EgoState step_dynamic(const EgoState& state, const Control& control,
                      const StepConfig& config);

/// Exact Jacobians of step_dynamic, matching the branch the step takes.
Jacobians jacobians_dynamic(const EgoState& state, const Control& control,
                            const StepConfig& config);

}  // namespace planeval
