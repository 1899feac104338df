#pragma once

#include <string>
#include <variant>
#include <vector>

#include "planeval/cioc.hpp"
#include "planeval/metrics.hpp"
#include "planeval/types.hpp"

namespace planeval {

/// A Gaussian per future step.
struct GaussianSequence {
  std::vector<GaussianStep> steps;
};

/// Trajectory samples drawn from a predictive distribution.
struct SampleSet {
  std::vector<Trajectory> trajectories;
};

/// One candidate prediction: a point trajectory, a Gaussian sequence, or a
/// set of sampled trajectories.
using PredictionOutput = std::variant<Trajectory, GaussianSequence, SampleSet>;

struct CandidateRecord {
  std::string candidate_id;
  PredictionOutput output;
};

struct AgentRecord {
  AgentId id;
  std::vector<Vec2> states;  // one position per ego state
  Trajectory gt_future;      // empty when the agent is not scored
  std::vector<CandidateRecord> candidates;
};

/// One scene line of the JSONL format. |ego| == |ego_controls| + 1; agent
/// state sequences align with the ego states; candidate horizons equal the
/// agent's ground-truth horizon.
struct SceneRecord {
  std::string scene_id;
  double dt = 0.1;
  std::vector<EgoState> ego;
  std::vector<Control> ego_controls;
  std::vector<AgentRecord> agents;
};

/// Formats a double with 17 significant digits (round-trip exact).
std::string fmt_double(double value);

/// Parses and validates one JSONL scene line. Throws ParseError naming the
/// first failed check and its JSON path.
SceneRecord parse_scene(const std::string& line);

/// Serializes a scene as one JSONL line with fixed key order.
std::string write_scene(const SceneRecord& scene);

/// Rebuilds the rollout a scene records. Per-step prediction snapshots are
/// reconstructed as the agents' realized next positions (a perfect one-step
/// predictor); the final step extrapolates at constant velocity.
Rollout scene_to_rollout(const SceneRecord& scene);

/// Learned-weights file contents.
struct WeightsFile {
  CostWeights weights;
  bool converged = false;
  int iterations = 0;
};

std::string write_weights(const WeightsFile& weights);
WeightsFile parse_weights(const std::string& text);

}  // namespace planeval
