#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planeval/cost_model.hpp"
#include "planeval/scene_io.hpp"
#include "planeval/types.hpp"

namespace planeval {

enum class Preset { head_on, passing, random };

std::string preset_name(Preset preset);
std::optional<Preset> preset_from_name(const std::string& name);

/// Knobs for scenario generation and the synthetic expert.
struct ScenarioConfig {
  Preset preset = Preset::random;
  std::uint64_t seed = 0;
  double dt = 0.1;
  std::size_t horizon = 40;             // executed ego steps
  std::size_t prediction_horizon = 12;  // ground-truth future length
  CostWeights weights{1.0, 0.5, 2.0, 2.0};
  FeatureConfig features;
  // Random preset encounter geometry. Agents either cross the ego's nominal
  // path at a lateral miss distance (in bandwidths) or run parallel to it at
  // a lateral offset, inside a mid-rollout time window (fractions of the
  // horizon) that keeps encounters away from the launch phase where the speed
  // box binds.
  int num_agents = 3;
  double agent_speed_min = 2.0;
  double agent_speed_max = 3.5;
  double agent_miss_min = 1.1;
  double agent_miss_max = 1.8;
  double cross_frac_min = 0.25;
  double cross_frac_max = 0.55;
  double parallel_fraction = 0.5;  // share of parallel (non-crossing) agents

  // The random preset redraws its geometry until the polished optimum has no
  // control resting on a bound with an outward gradient above clamp_tolerance
  // (up to geometry_attempts draws, keeping the cleanest attempt).
  int geometry_attempts = 25;
  double clamp_tolerance = 1e-4;

  // Expert: receding-horizon warm start, then a full-horizon refinement down
  // to a projected-gradient infinity norm below polish_tolerance. Plans start
  // from a small nonzero turn rate: the dynamics hold heading exactly fixed
  // below the branch threshold, so a plan started at zero turn rate would
  // never see a gradient toward turning.
  std::size_t plan_steps = 5;
  int plan_iterations = 50;
  double plan_step_size = 0.1;
  double plan_turn_init = 0.01;
  double polish_tolerance = 1e-7;
  int polish_max_iterations = 5000;
  double speed_min = 0.0;
  double speed_max = 2.0;
  double turn_min = -1.0;
  double turn_max = 1.0;

  // When set, recorded controls are the refined optimum plus Gaussian noise
  // with covariance equal to the inverse control Hessian at `weights`, i.e.
  // draws from the model the learner fits. Off: controls stay exactly
  // locally optimal.
  bool maxent_demos = false;

  // Standard deviation (meters) of the error on the one-step predictions the
  // expert plans against, applied only to maxent_demos scenes. An imperfect
  // predictor keeps an agent's predicted next position distinct from its
  // current one, which is what lets the learner tell the two interaction
  // weights apart; the rollout carries these predictions, so the recorded
  // optimum stays locally optimal for the data the learner sees. With noise
  // off, predictions are the realized next positions and the rollout matches
  // the scene-file reconstruction exactly.
  double prediction_noise = 1.0;

  double candidate_offset = 0.3;  // peak lateral offset of the paired candidates
};

/// Per-preset defaults. The random preset ships maxent_demos = true so its
/// output is directly learnable; the scripted geometries stay noise free.
ScenarioConfig preset_defaults(Preset preset);

/// Mirrored candidate pair around the ground-truth future: `toward` leads
/// the agent's real motion along its heading (cutting closer to the ego at
/// matched times), `away` lags it by the same offset. Equal and opposite
/// pointwise displacements keep plain ADE/FDE identical.
struct CandidatePair {
  AgentId agent_id;
  Trajectory toward;
  Trajectory away;
};

struct Scenario {
  SceneRecord scene;
  // The rollout as generated, carrying the prediction sequence the expert
  // planned against. Identical to scene_to_rollout(scene) unless prediction
  // noise was active (the scene format stores no prediction snapshots).
  Rollout rollout;
  std::optional<CandidatePair> pair;
};

/// Constant-velocity extrapolation from the last two history points.
/// Throws InsufficientHistoryError with fewer than two points.
Trajectory cv_predictor(const Trajectory& history, std::size_t horizon, double dt);

/// Short-horizon plan by projected gradient descent on the planning cost,
/// holding the given snapshot fixed across the window. Controls are clamped
/// to the configured box each iteration.
std::vector<Control> expert_policy_plan(const CostWeights& weights, const SceneSnapshot& snapshot,
                                        const ScenarioConfig& config);

/// First control of expert_policy_plan.
Control expert_policy_step(const CostWeights& weights, const SceneSnapshot& snapshot,
                           const ScenarioConfig& config);

/// Builds one seeded scenario: scripted constant-velocity agents, an ego
/// rollout driven to a local optimum of the planning cost, ground-truth
/// futures, and per-preset prediction candidates.
Scenario generate_scenario(const ScenarioConfig& config);

}  // namespace planeval
