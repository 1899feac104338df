#include "planeval/sim_env.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "planeval/cioc.hpp"
#include "planeval/dynamics.hpp"
#include "planeval/errors.hpp"

namespace planeval {

namespace {

Eigen::VectorXd stack_controls(const std::vector<Control>& controls) {
  Eigen::VectorXd u(2 * static_cast<Eigen::Index>(controls.size()));
  for (std::size_t t = 0; t < controls.size(); ++t) {
    u[2 * t] = controls[t].speed;
    u[2 * t + 1] = controls[t].turn_rate;
  }
  return u;
}

std::vector<Control> unstack_controls(const Eigen::VectorXd& u) {
  std::vector<Control> controls(static_cast<std::size_t>(u.size() / 2));
  for (std::size_t t = 0; t < controls.size(); ++t) {
    controls[t] = {u[2 * t], u[2 * t + 1]};
  }
  return controls;
}

Eigen::VectorXd clamp_controls(Eigen::VectorXd u, const ScenarioConfig& cfg) {
  for (Eigen::Index i = 0; i + 1 < u.size(); i += 2) {
    u[i] = std::clamp(u[i], cfg.speed_min, cfg.speed_max);
    u[i + 1] = std::clamp(u[i + 1], cfg.turn_min, cfg.turn_max);
  }
  return u;
}

void check_config(const ScenarioConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw InvalidInputError("scenario dt must be positive and finite");
  }
  if (cfg.horizon == 0 || cfg.plan_steps == 0) {
    throw InvalidInputError("scenario horizons must be at least one step");
  }
  if (cfg.prediction_horizon == 0 || cfg.prediction_horizon > cfg.horizon) {
    throw InvalidInputError("prediction horizon must lie in [1, horizon]");
  }
  if (!(cfg.speed_min < cfg.speed_max) || !(cfg.turn_min < cfg.turn_max)) {
    throw InvalidInputError("control bounds must be nonempty intervals");
  }
}

/// Lift turn rates clear of the fixed-heading branch so the refinement sees
/// live turn gradients everywhere.
void lift_turn_rates(std::vector<Control>& controls, const ScenarioConfig& cfg) {
  for (Control& u : controls) {
    if (std::abs(u.turn_rate) < cfg.plan_turn_init) {
      u.turn_rate = u.turn_rate < 0.0 ? -cfg.plan_turn_init : cfg.plan_turn_init;
    }
  }
}

/// Full-horizon projected gradient descent with a Barzilai-Borwein step and
/// an Armijo backtracking guard. Stops once the projected gradient's
/// infinity norm drops below cfg.polish_tolerance.
void polish_controls(Rollout& rollout, const ScenarioConfig& cfg) {
  Eigen::VectorXd u = clamp_controls(stack_controls(rollout.controls), cfg);
  rollout.controls = unstack_controls(u);
  double value = trajectory_cost(cfg.weights, rollout, cfg.features);
  Eigen::VectorXd grad = trajectory_cost_control_gradient(cfg.weights, rollout, cfg.features);

  double step = cfg.plan_step_size;
  Eigen::VectorXd prev_u, prev_grad;
  for (int iter = 0; iter < cfg.polish_max_iterations; ++iter) {
    const Eigen::VectorXd projected = u - clamp_controls(u - grad, cfg);
    if (projected.lpNorm<Eigen::Infinity>() <= cfg.polish_tolerance) {
      break;
    }
    if (iter > 0) {
      const Eigen::VectorXd s = u - prev_u;
      const Eigen::VectorXd y = grad - prev_grad;
      const double sy = s.dot(y);
      if (sy > 1e-16) {
        step = std::clamp(s.squaredNorm() / sy, 1e-6, 1e2);
      }
    }
    prev_u = u;
    prev_grad = grad;

    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      const Eigen::VectorXd trial = clamp_controls(u - step * grad, cfg);
      rollout.controls = unstack_controls(trial);
      const double trial_value = trajectory_cost(cfg.weights, rollout, cfg.features);
      const double moved = (u - trial).squaredNorm();
      if (trial_value <= value - 1e-4 * moved / step) {
        u = trial;
        value = trial_value;
        grad = trajectory_cost_control_gradient(cfg.weights, rollout, cfg.features);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;
    }
  }
  rollout.controls = unstack_controls(u);
}

PredictionMap one_step_predictions(const std::vector<AgentTrack>& tracks, std::size_t t,
                                   std::size_t horizon) {
  PredictionMap map;
  for (const AgentTrack& track : tracks) {
    const Vec2 next = (t + 1 < horizon + 1)
                          ? track.positions[t + 1]
                          : Vec2(2.0 * track.positions[horizon] - track.positions[horizon - 1]);
    map[track.id] = Trajectory{next};
  }
  return map;
}

/// One-step predictions snapshotted at every state index 0..horizon. With
/// cfg.prediction_noise active (maxent_demos scenes) each agent's predictions
/// are rigidly shifted by one Gaussian offset per scene, modeling a predictor
/// with a systematic tracking error.
std::vector<PredictionMap> prediction_sequence(const std::vector<AgentTrack>& tracks,
                                               const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::vector<PredictionMap> preds;
  preds.reserve(cfg.horizon + 1);
  for (std::size_t t = 0; t <= cfg.horizon; ++t) {
    preds.push_back(one_step_predictions(tracks, t, cfg.horizon));
  }
  if (cfg.maxent_demos && cfg.prediction_noise > 0.0 && !tracks.empty()) {
    std::normal_distribution<double> normal(0.0, cfg.prediction_noise);
    std::map<AgentId, Vec2> shift;
    for (const AgentTrack& track : tracks) {
      shift[track.id] = Vec2(normal(rng), normal(rng));
    }
    for (PredictionMap& map : preds) {
      for (auto& [id, traj] : map) {
        traj.front() += shift[id];
      }
    }
  }
  return preds;
}

Rollout assemble_rollout(const EgoState& start, const std::vector<Control>& controls,
                         const std::vector<AgentTrack>& tracks,
                         const std::vector<PredictionMap>& preds, const ScenarioConfig& cfg) {
  Rollout rollout;
  rollout.dt = cfg.dt;
  rollout.initial = start;
  rollout.controls = controls;
  rollout.agents = tracks;
  rollout.predictions.assign(preds.begin() + 1, preds.end());
  return rollout;
}

std::vector<Control> receding_horizon_controls(const EgoState& start,
                                               const std::vector<AgentTrack>& tracks,
                                               const std::vector<PredictionMap>& preds,
                                               const ScenarioConfig& cfg) {
  std::vector<Control> controls;
  controls.reserve(cfg.horizon);
  EgoState state = start;
  const StepConfig step_cfg{cfg.dt, 1e-6};
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    SceneSnapshot snap;
    snap.ego = state;
    snap.agents.reserve(tracks.size());
    for (const AgentTrack& track : tracks) {
      snap.agents.emplace_back(track.id, track.positions[t]);
    }
    snap.predictions = preds[t];
    const Control u = expert_policy_step(cfg.weights, snap, cfg);
    controls.push_back(u);
    state = step_dynamic(state, u, step_cfg);
  }
  return controls;
}

void add_maxent_noise(Rollout& rollout, const ScenarioConfig& cfg, std::mt19937_64& rng) {
  const LearnConfig learn_cfg;
  Eigen::MatrixXd hessian = hessian_controls(cfg.weights, rollout, learn_cfg, cfg.features);
  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  if (llt.info() != Eigen::Success) {
    hessian.diagonal().array() += learn_cfg.pd_regularizer;
    llt.compute(hessian);
  }
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    throw IllConditionedError("control Hessian is not positive definite at the expert optimum",
                              eig.eigenvalues().minCoeff());
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(hessian.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = normal(rng);
  }
  // cov(L^-T z) = (L L^T)^-1, the Laplace-model control covariance.
  const Eigen::VectorXd noise = llt.matrixU().solve(z);
  rollout.controls = unstack_controls(stack_controls(rollout.controls) + noise);
}

struct Geometry {
  EgoState start;
  std::vector<AgentTrack> tracks;
  std::vector<Vec2> velocities;
};

AgentTrack scripted_track(const AgentId& id, const Vec2& start, const Vec2& velocity,
                          std::size_t horizon, double dt) {
  AgentTrack track;
  track.id = id;
  track.positions.reserve(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) {
    track.positions.push_back(start + velocity * (static_cast<double>(t) * dt));
  }
  return track;
}

Geometry head_on_geometry(const ScenarioConfig& cfg) {
  Geometry geo;
  geo.start = {-4.0, 0.0, 0.1};
  geo.velocities = {Vec2(-0.8, 0.0)};
  geo.tracks = {scripted_track("a0", Vec2(1.0, 0.0), geo.velocities[0], cfg.horizon, cfg.dt)};
  return geo;
}

Geometry passing_geometry(const ScenarioConfig& cfg) {
  const double lateral = 8.0 * cfg.features.rbf_bandwidth;
  Geometry geo;
  geo.start = {-4.0, 0.0, 0.0};
  geo.velocities = {Vec2(-0.8, 0.0)};
  geo.tracks = {scripted_track("a0", Vec2(1.0, lateral), geo.velocities[0], cfg.horizon, cfg.dt)};
  return geo;
}

/// Ego states of the optimized approach with no agents present; used to aim
/// the scripted agents at the ego's nominal schedule.
std::vector<EgoState> nominal_schedule(const EgoState& start, const ScenarioConfig& cfg) {
  const std::vector<AgentTrack> no_tracks;
  const std::vector<PredictionMap> no_preds(cfg.horizon + 1);
  Rollout rollout = assemble_rollout(
      start, receding_horizon_controls(start, no_tracks, no_preds, cfg), no_tracks, no_preds, cfg);
  lift_turn_rates(rollout.controls, cfg);
  polish_controls(rollout, cfg);
  return rollout_states(rollout);
}

/// Ego starts close enough that the optimal approach stays inside the speed
/// box; each agent's line passes the ego's nominal position at its crossing
/// step with a one-to-two bandwidth lateral miss, while the ego is still
/// moving. That keeps the interaction features excited without making the
/// expert want to back up or exceed the clamps, so its optimum stays
/// effectively interior (needed for the curvature-based demo noise).
Geometry random_geometry(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  constexpr double pi = std::numbers::pi;

  const Vec2 goal = cfg.features.goal;
  Geometry geo;
  const double start_distance = uniform(0.9, 1.3);
  const double start_angle = uniform(0.0, 2.0 * pi);
  const Vec2 start_pos = goal + start_distance * Vec2(std::cos(start_angle), std::sin(start_angle));
  const double bearing = std::atan2(goal.y() - start_pos.y(), goal.x() - start_pos.x());
  geo.start = {start_pos.x(), start_pos.y(), bearing + uniform(-0.3, 0.3)};

  const std::vector<EgoState> nominal = nominal_schedule(geo.start, cfg);
  const double steps = static_cast<double>(cfg.horizon);
  const auto frac_step = [&](double frac) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(frac * steps + 0.5), 1, cfg.horizon);
  };
  std::uniform_int_distribution<std::size_t> cross_step(frac_step(cfg.cross_frac_min),
                                                        frac_step(cfg.cross_frac_max));

  const double bw = cfg.features.rbf_bandwidth;
  for (int i = 0; i < cfg.num_agents; ++i) {
    const std::size_t k = cross_step(rng);
    const double cross_time = static_cast<double>(k) * cfg.dt;
    const Vec2 target = nominal[k].position();
    const bool parallel = unit(rng) < cfg.parallel_fraction;
    double speed;
    Vec2 along;
    Vec2 offset;
    if (parallel) {
      // Runs alongside the ego's nominal path at ego-like speed, dwelling
      // near the ego with a persistent fore-aft offset; these encounters
      // separate the reaction to an agent's current position from the
      // reaction to its next one.
      const std::size_t j = std::min<std::size_t>(k + 1, nominal.size() - 1);
      Vec2 path_dir = nominal[j].position() - nominal[k].position();
      if (path_dir.norm() < 1e-9) {
        path_dir = Vec2(std::cos(nominal[k].heading), std::sin(nominal[k].heading));
      }
      speed = uniform(0.6, 1.8);
      const double jitter = uniform(-0.2, 0.2);
      const Vec2 dir = path_dir.normalized();
      along = Vec2(dir.x() * std::cos(jitter) - dir.y() * std::sin(jitter),
                   dir.x() * std::sin(jitter) + dir.y() * std::cos(jitter));
      const Vec2 lateral(-along.y(), along.x());
      const double lat = uniform(0.8, 1.2) * bw * (unit(rng) < 0.5 ? 1.0 : -1.0);
      const double lon = uniform(-0.8, 0.8) * bw;
      offset = lat * lateral + lon * along;
    } else {
      speed = uniform(cfg.agent_speed_min, cfg.agent_speed_max);
      const double direction = uniform(0.0, 2.0 * pi);
      along = Vec2(std::cos(direction), std::sin(direction));
      const Vec2 lateral(-along.y(), along.x());
      const double miss =
          uniform(cfg.agent_miss_min, cfg.agent_miss_max) * bw * (unit(rng) < 0.5 ? 1.0 : -1.0);
      offset = miss * lateral;
    }
    const Vec2 velocity = speed * along;
    geo.velocities.push_back(velocity);
    geo.tracks.push_back(scripted_track("a" + std::to_string(i),
                                        Vec2(target + offset - velocity * cross_time),
                                        velocity, cfg.horizon, cfg.dt));
  }
  return geo;
}

/// Mirror pair about the ground truth: the toward candidate leads the agent's
/// real motion by candidate_offset along its heading (arriving everywhere
/// earlier than predicted, so cutting closer to the ego at matched times) and
/// the away candidate lags by the same amount. Displacements are equal and
/// opposite pointwise, so plain ADE and FDE cannot tell the two apart.
CandidatePair mirrored_pair(const Geometry& geo, const Trajectory& gt,
                            const ScenarioConfig& cfg) {
  const Vec2 lead = cfg.candidate_offset * geo.velocities[0].normalized();

  CandidatePair pair;
  pair.agent_id = geo.tracks[0].id;
  for (const Vec2& point : gt) {
    pair.toward.push_back(point + lead);
    pair.away.push_back(point - lead);
  }
  return pair;
}

void add_random_candidates(SceneRecord& scene, const Geometry& geo, const ScenarioConfig& cfg,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    AgentRecord& agent = scene.agents[i];
    const Vec2 base = geo.tracks[i].positions[0];
    const Vec2 velocity = geo.velocities[i] + 0.1 * Vec2(normal(rng), normal(rng));

    Trajectory cv;
    cv.reserve(agent.gt_future.size());
    for (std::size_t k = 0; k < agent.gt_future.size(); ++k) {
      cv.push_back(base + velocity * (static_cast<double>(k + 1) * cfg.dt));
    }
    agent.candidates.push_back({"cv", cv});

    GaussianSequence gaussians;
    for (std::size_t k = 0; k < cv.size(); ++k) {
      const double sigma = 0.3 + 0.05 * static_cast<double>(k);
      gaussians.steps.push_back({cv[k], sigma * sigma * Eigen::Matrix2d::Identity()});
    }
    agent.candidates.push_back({"gauss", std::move(gaussians)});

    SampleSet samples;
    for (int s = 0; s < 6; ++s) {
      Trajectory draw;
      draw.reserve(cv.size());
      for (const Vec2& p : cv) {
        draw.push_back(p + 0.25 * Vec2(normal(rng), normal(rng)));
      }
      samples.trajectories.push_back(std::move(draw));
    }
    agent.candidates.push_back({"samples", std::move(samples)});
  }
}

/// Largest outward cost gradient over control coordinates resting on a bound.
/// Zero means every touched bound is weakly active and the optimum behaves
/// like an interior one.
double worst_bound_gradient(const Rollout& rollout, const ScenarioConfig& cfg) {
  const Eigen::VectorXd g = trajectory_cost_control_gradient(cfg.weights, rollout, cfg.features);
  double worst = 0.0;
  for (std::size_t t = 0; t < rollout.controls.size(); ++t) {
    const Control& u = rollout.controls[t];
    if ((u.speed <= cfg.speed_min && g[2 * t] > 0.0) ||
        (u.speed >= cfg.speed_max && g[2 * t] < 0.0)) {
      worst = std::max(worst, std::abs(g[2 * t]));
    }
    if ((u.turn_rate <= cfg.turn_min && g[2 * t + 1] > 0.0) ||
        (u.turn_rate >= cfg.turn_max && g[2 * t + 1] < 0.0)) {
      worst = std::max(worst, std::abs(g[2 * t + 1]));
    }
  }
  return worst;
}

}  // namespace

std::string preset_name(Preset preset) {
  switch (preset) {
    case Preset::head_on: return "head_on";
    case Preset::passing: return "passing";
    case Preset::random: return "random";
  }
  return "unknown";
}

std::optional<Preset> preset_from_name(const std::string& name) {
  if (name == "head_on") return Preset::head_on;
  if (name == "passing") return Preset::passing;
  if (name == "random") return Preset::random;
  return std::nullopt;
}

ScenarioConfig preset_defaults(Preset preset) {
  ScenarioConfig cfg;
  cfg.preset = preset;
  cfg.maxent_demos = preset == Preset::random;
  return cfg;
}

Trajectory cv_predictor(const Trajectory& history, std::size_t horizon, double dt) {
  if (history.size() < 2) {
    throw InsufficientHistoryError("constant-velocity prediction needs at least two points");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidInputError("prediction dt must be positive and finite");
  }
  const Vec2 last = history.back();
  const Vec2 velocity = (last - history[history.size() - 2]) / dt;
  Trajectory out;
  out.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    out.push_back(last + velocity * (static_cast<double>(k + 1) * dt));
  }
  return out;
}

std::vector<Control> expert_policy_plan(const CostWeights& weights, const SceneSnapshot& snapshot,
                                        const ScenarioConfig& cfg) {
  check_config(cfg);

  Rollout window;
  window.dt = cfg.dt;
  window.initial = snapshot.ego;
  window.controls.assign(cfg.plan_steps, Control{0.0, 0.0});
  for (const auto& [id, position] : snapshot.agents) {
    window.agents.push_back({id, std::vector<Vec2>(cfg.plan_steps + 1, position)});
  }
  window.predictions.assign(cfg.plan_steps, snapshot.predictions);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(cfg.plan_steps));
  for (Eigen::Index i = 1; i < u.size(); i += 2) {
    u[i] = cfg.plan_turn_init;
  }
  u = clamp_controls(u, cfg);
  for (int iter = 0; iter < cfg.plan_iterations; ++iter) {
    window.controls = unstack_controls(u);
    const Eigen::VectorXd grad = trajectory_cost_control_gradient(weights, window, cfg.features);
    u = clamp_controls(u - cfg.plan_step_size * grad, cfg);
  }
  return unstack_controls(u);
}

Control expert_policy_step(const CostWeights& weights, const SceneSnapshot& snapshot,
                           const ScenarioConfig& cfg) {
  return expert_policy_plan(weights, snapshot, cfg).front();
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(cfg.seed);

  // Scripted presets have fixed geometry; the random preset redraws until the
  // polished expert optimum is free of strongly-active clamps (an optimum
  // pressed hard against the control box is not the kind of demonstration the
  // curvature-based learner models). Draws come from one rng stream, so the
  // result stays a pure function of the seed.
  const int attempts = cfg.preset == Preset::random ? cfg.geometry_attempts : 1;
  Geometry geo;
  Rollout rollout;
  double best_worst = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < attempts; ++attempt) {
    Geometry trial_geo;
    switch (cfg.preset) {
      case Preset::head_on: trial_geo = head_on_geometry(cfg); break;
      case Preset::passing: trial_geo = passing_geometry(cfg); break;
      case Preset::random: trial_geo = random_geometry(cfg, rng); break;
    }
    const std::vector<PredictionMap> preds = prediction_sequence(trial_geo.tracks, cfg, rng);
    Rollout trial = assemble_rollout(
        trial_geo.start, receding_horizon_controls(trial_geo.start, trial_geo.tracks, preds, cfg),
        trial_geo.tracks, preds, cfg);
    lift_turn_rates(trial.controls, cfg);
    polish_controls(trial, cfg);
    const double worst = attempts > 1 ? worst_bound_gradient(trial, cfg) : 0.0;
    if (worst < best_worst) {
      best_worst = worst;
      geo = std::move(trial_geo);
      rollout = std::move(trial);
    }
    if (best_worst <= cfg.clamp_tolerance) {
      break;
    }
  }
  if (cfg.maxent_demos) {
    add_maxent_noise(rollout, cfg, rng);
  }

  const std::vector<EgoState> ego_states = rollout_states(rollout);

  SceneRecord scene;
  scene.scene_id = preset_name(cfg.preset) + "_" + std::to_string(cfg.seed);
  scene.dt = cfg.dt;
  scene.ego = ego_states;
  scene.ego_controls = rollout.controls;
  for (const AgentTrack& track : geo.tracks) {
    AgentRecord agent;
    agent.id = track.id;
    agent.states = track.positions;
    agent.gt_future.assign(track.positions.begin() + 1,
                           track.positions.begin() + 1 + cfg.prediction_horizon);
    scene.agents.push_back(std::move(agent));
  }

  std::optional<CandidatePair> pair;
  if (cfg.preset == Preset::random) {
    add_random_candidates(scene, geo, cfg, rng);
  } else {
    pair = mirrored_pair(geo, scene.agents[0].gt_future, cfg);
    scene.agents[0].candidates.push_back({"toward", pair->toward});
    scene.agents[0].candidates.push_back({"away", pair->away});
  }

  // Return the generation-time rollout, not a reconstruction from the scene:
  // it carries the prediction sequence the expert actually planned against,
  // which differs from the realized-next reconstruction when prediction noise
  // is active. With noise off both are bitwise identical.
  return {std::move(scene), std::move(rollout), std::move(pair)};
}

}  // namespace planeval
