#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace planeval {

using Vec2 = Eigen::Vector2d;
using AgentId = std::string;

/// Planar ego pose. Heading is in radians and is never wrapped.
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
};

/// Unicycle control: commanded speed [m/s] and turn rate [rad/s].
struct Control {
  double speed = 0.0;
  double turn_rate = 0.0;
};

/// A 2D point sequence, one position per future timestep.
using Trajectory = std::vector<Vec2>;

/// Predicted future positions per agent, as available at one timestep.
using PredictionMap = std::map<AgentId, Trajectory>;

/// Scripted agent positions over the rollout, aligned with the ego states.
struct AgentTrack {
  AgentId id;
  std::vector<Vec2> positions;  // length = number of ego states
};

/// One recorded ego rollout together with the exogenous agent data the
/// planner saw. Ego states at t >= 1 are implied by (initial, controls):
/// every consumer regenerates them through the dynamics so that costs and
/// gradients are functions of the control sequence alone.
///
/// predictions[t] is the prediction snapshot in effect at state t+1; its
/// first entry per agent is the one-step-ahead predicted position used by
/// the prediction-dependent cost feature.
struct Rollout {
  double dt = 0.1;
  EgoState initial;
  std::vector<Control> controls;          // u_0 .. u_{T-1}
  std::vector<AgentTrack> agents;         // positions at t = 0 .. T
  std::vector<PredictionMap> predictions; // length T

  std::size_t horizon() const { return controls.size(); }
};

}  // namespace planeval
