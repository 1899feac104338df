#include "planeval/scene_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <set>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

using nlohmann::json;

std::string fail(const std::string& path, const std::string& what) {
  return path + ": " + what;
}

double finite_number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw ParseError(fail(path, "expected a number"), path);
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw ParseError(fail(path, "non-finite number"), path);
  }
  return v;
}

Vec2 point2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    throw ParseError(fail(path, "expected [x, y]"), path);
  }
  return {finite_number(j[0], path + "[0]"), finite_number(j[1], path + "[1]")};
}

Trajectory point_list(const json& j, const std::string& path, bool allow_empty) {
  if (!j.is_array()) {
    throw ParseError(fail(path, "expected an array of points"), path);
  }
  if (!allow_empty && j.empty()) {
    throw ParseError(fail(path, "must not be empty"), path);
  }
  Trajectory out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(point2(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

const json& field(const json& j, const char* name, const std::string& path) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw ParseError(fail(path.empty() ? name : path + "." + name, "missing field"),
                     path.empty() ? name : path + "." + name);
  }
  return *it;
}

CandidateRecord parse_candidate(const json& j, const std::string& path,
                                std::size_t gt_horizon) {
  if (!j.is_object()) {
    throw ParseError(fail(path, "expected an object"), path);
  }
  CandidateRecord rec;
  const json& id = field(j, "candidate_id", path);
  if (!id.is_string()) {
    throw ParseError(fail(path + ".candidate_id", "expected a string"), path + ".candidate_id");
  }
  rec.candidate_id = id.get<std::string>();

  const int kinds = static_cast<int>(j.contains("trajectory")) +
                    static_cast<int>(j.contains("gaussians")) +
                    static_cast<int>(j.contains("samples"));
  if (kinds != 1) {
    throw ParseError(
        fail(path, "expected exactly one of trajectory, gaussians, samples"), path);
  }

  if (j.contains("trajectory")) {
    Trajectory t = point_list(j["trajectory"], path + ".trajectory", false);
    if (t.size() != gt_horizon) {
      throw ParseError(fail(path + ".trajectory", "horizon differs from ground truth"),
                       path + ".trajectory");
    }
    rec.output = std::move(t);
  } else if (j.contains("gaussians")) {
    const json& seq = j["gaussians"];
    const std::string gpath = path + ".gaussians";
    if (!seq.is_array() || seq.size() != gt_horizon) {
      throw ParseError(fail(gpath, "horizon differs from ground truth"), gpath);
    }
    GaussianSequence gs;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::string spath = gpath + "[" + std::to_string(i) + "]";
      GaussianStep step;
      step.mean = point2(field(seq[i], "mean", spath), spath + ".mean");
      const json& cov = field(seq[i], "cov", spath);
      if (!cov.is_array() || cov.size() != 2 || !cov[0].is_array() || cov[0].size() != 2 ||
          !cov[1].is_array() || cov[1].size() != 2) {
        throw ParseError(fail(spath + ".cov", "expected a 2x2 matrix"), spath + ".cov");
      }
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
          step.cov(r, c) = finite_number(cov[r][c], spath + ".cov[" + std::to_string(r) +
                                                        "][" + std::to_string(c) + "]");
        }
      }
      gs.steps.push_back(step);
    }
    rec.output = std::move(gs);
  } else {
    const json& arr = j["samples"];
    const std::string spath = path + ".samples";
    if (!arr.is_array() || arr.empty()) {
      throw ParseError(fail(spath, "expected a nonempty array of trajectories"), spath);
    }
    SampleSet set;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Trajectory t = point_list(arr[i], spath + "[" + std::to_string(i) + "]", false);
      if (t.size() != gt_horizon) {
        throw ParseError(fail(spath + "[" + std::to_string(i) + "]",
                              "horizon differs from ground truth"),
                         spath + "[" + std::to_string(i) + "]");
      }
      set.trajectories.push_back(std::move(t));
    }
    rec.output = std::move(set);
  }
  return rec;
}

}  // namespace

std::string fmt_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

SceneRecord parse_scene(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), "");
  }
  if (!j.is_object()) {
    throw ParseError("malformed JSON: top level is not an object", "");
  }

  SceneRecord scene;
  const json& sid = field(j, "scene_id", "");
  if (!sid.is_string()) {
    throw ParseError(fail("scene_id", "expected a string"), "scene_id");
  }
  scene.scene_id = sid.get<std::string>();

  scene.dt = finite_number(field(j, "dt", ""), "dt");
  if (!(scene.dt > 0.0)) {
    throw ParseError(fail("dt", "must be positive"), "dt");
  }

  const json& ego = field(j, "ego", "");
  if (!ego.is_array() || ego.size() < 2) {
    throw ParseError(fail("ego", "expected at least 2 states"), "ego");
  }
  for (std::size_t i = 0; i < ego.size(); ++i) {
    const std::string path = "ego[" + std::to_string(i) + "]";
    if (!ego[i].is_array() || ego[i].size() != 3) {
      throw ParseError(fail(path, "expected [x, y, heading]"), path);
    }
    scene.ego.push_back({finite_number(ego[i][0], path + "[0]"),
                         finite_number(ego[i][1], path + "[1]"),
                         finite_number(ego[i][2], path + "[2]")});
  }

  const json& controls = field(j, "ego_controls", "");
  if (!controls.is_array()) {
    throw ParseError(fail("ego_controls", "expected an array"), "ego_controls");
  }
  if (controls.size() + 1 != scene.ego.size()) {
    throw ParseError(fail("ego_controls", "length must be one less than ego"),
                     "ego_controls");
  }
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const std::string path = "ego_controls[" + std::to_string(i) + "]";
    if (!controls[i].is_array() || controls[i].size() != 2) {
      throw ParseError(fail(path, "expected [speed, turn_rate]"), path);
    }
    scene.ego_controls.push_back(
        {finite_number(controls[i][0], path + "[0]"), finite_number(controls[i][1], path + "[1]")});
  }

  const json& agents = field(j, "agents", "");
  if (!agents.is_array()) {
    throw ParseError(fail("agents", "expected an array"), "agents");
  }
  std::set<AgentId> seen;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "agents[" + std::to_string(i) + "]";
    if (!agents[i].is_object()) {
      throw ParseError(fail(path, "expected an object"), path);
    }
    AgentRecord rec;
    const json& aid = field(agents[i], "id", path);
    if (!aid.is_string()) {
      throw ParseError(fail(path + ".id", "expected a string"), path + ".id");
    }
    rec.id = aid.get<std::string>();
    if (!seen.insert(rec.id).second) {
      throw ParseError(fail(path + ".id", "duplicate agent id '" + rec.id + "'"), path + ".id");
    }
    rec.states = point_list(field(agents[i], "states", path), path + ".states", true);
    if (rec.states.size() != scene.ego.size()) {
      throw ParseError(fail(path + ".states", "length must match ego"), path + ".states");
    }
    scene.agents.push_back(std::move(rec));
  }

  const auto agent_by_id = [&scene](const AgentId& id) -> AgentRecord* {
    for (AgentRecord& a : scene.agents) {
      if (a.id == id) {
        return &a;
      }
    }
    return nullptr;
  };

  const json& gt = field(j, "gt_futures", "");
  if (!gt.is_object()) {
    throw ParseError(fail("gt_futures", "expected an object"), "gt_futures");
  }
  for (auto it = gt.begin(); it != gt.end(); ++it) {
    const std::string path = "gt_futures." + it.key();
    AgentRecord* agent = agent_by_id(it.key());
    if (agent == nullptr) {
      throw ParseError(fail(path, "unknown agent id"), path);
    }
    agent->gt_future = point_list(it.value(), path, false);
  }

  const json& cands = field(j, "candidates", "");
  if (!cands.is_object()) {
    throw ParseError(fail("candidates", "expected an object"), "candidates");
  }
  for (auto it = cands.begin(); it != cands.end(); ++it) {
    const std::string path = "candidates." + it.key();
    AgentRecord* agent = agent_by_id(it.key());
    if (agent == nullptr) {
      throw ParseError(fail(path, "unknown agent id"), path);
    }
    if (agent->gt_future.empty()) {
      throw ParseError(fail(path, "agent has no ground-truth future"), path);
    }
    if (!it.value().is_array()) {
      throw ParseError(fail(path, "expected an array of candidates"), path);
    }
    std::set<std::string> cand_ids;
    for (std::size_t i = 0; i < it.value().size(); ++i) {
      CandidateRecord rec = parse_candidate(it.value()[i], path + "[" + std::to_string(i) + "]",
                                            agent->gt_future.size());
      if (!cand_ids.insert(rec.candidate_id).second) {
        throw ParseError(fail(path + "[" + std::to_string(i) + "].candidate_id",
                              "duplicate candidate id '" + rec.candidate_id + "'"),
                         path + "[" + std::to_string(i) + "].candidate_id");
      }
      agent->candidates.push_back(std::move(rec));
    }
  }
  return scene;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void append_point(std::string& out, const Vec2& p) {
  out += '[';
  out += fmt_double(p[0]);
  out += ',';
  out += fmt_double(p[1]);
  out += ']';
}

void append_points(std::string& out, const Trajectory& t) {
  out += '[';
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    append_point(out, t[i]);
  }
  out += ']';
}

void append_candidate(std::string& out, const CandidateRecord& c) {
  out += "{\"candidate_id\":";
  append_escaped(out, c.candidate_id);
  if (const Trajectory* t = std::get_if<Trajectory>(&c.output)) {
    out += ",\"trajectory\":";
    append_points(out, *t);
  } else if (const GaussianSequence* g = std::get_if<GaussianSequence>(&c.output)) {
    out += ",\"gaussians\":[";
    for (std::size_t i = 0; i < g->steps.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      const GaussianStep& s = g->steps[i];
      out += "{\"mean\":";
      append_point(out, s.mean);
      out += ",\"cov\":[[";
      out += fmt_double(s.cov(0, 0));
      out += ',';
      out += fmt_double(s.cov(0, 1));
      out += "],[";
      out += fmt_double(s.cov(1, 0));
      out += ',';
      out += fmt_double(s.cov(1, 1));
      out += "]]}";
    }
    out += ']';
  } else {
    const SampleSet& s = std::get<SampleSet>(c.output);
    out += ",\"samples\":[";
    for (std::size_t i = 0; i < s.trajectories.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      append_points(out, s.trajectories[i]);
    }
    out += ']';
  }
  out += '}';
}

}  // namespace

std::string write_scene(const SceneRecord& scene) {
  std::string out;
  out.reserve(1024);
  out += "{\"scene_id\":";
  append_escaped(out, scene.scene_id);
  out += ",\"dt\":";
  out += fmt_double(scene.dt);

  out += ",\"ego\":[";
  for (std::size_t i = 0; i < scene.ego.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += '[';
    out += fmt_double(scene.ego[i].x);
    out += ',';
    out += fmt_double(scene.ego[i].y);
    out += ',';
    out += fmt_double(scene.ego[i].heading);
    out += ']';
  }
  out += "],\"ego_controls\":[";
  for (std::size_t i = 0; i < scene.ego_controls.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += '[';
    out += fmt_double(scene.ego_controls[i].speed);
    out += ',';
    out += fmt_double(scene.ego_controls[i].turn_rate);
    out += ']';
  }

  out += "],\"agents\":[";
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += "{\"id\":";
    append_escaped(out, scene.agents[i].id);
    out += ",\"states\":";
    append_points(out, scene.agents[i].states);
    out += '}';
  }

  out += "],\"gt_futures\":{";
  bool first = true;
  for (const AgentRecord& a : scene.agents) {
    if (a.gt_future.empty()) {
      continue;
    }
    if (!first) {
      out += ',';
    }
    first = false;
    append_escaped(out, a.id);
    out += ':';
    append_points(out, a.gt_future);
  }

  out += "},\"candidates\":{";
  first = true;
  for (const AgentRecord& a : scene.agents) {
    if (a.candidates.empty()) {
      continue;
    }
    if (!first) {
      out += ',';
    }
    first = false;
    append_escaped(out, a.id);
    out += ":[";
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      append_candidate(out, a.candidates[i]);
    }
    out += ']';
  }
  out += "}}";
  return out;
}

Rollout scene_to_rollout(const SceneRecord& scene) {
  Rollout r;
  r.dt = scene.dt;
  r.initial = scene.ego.front();
  r.controls = scene.ego_controls;
  const std::size_t t_roll = r.controls.size();
  for (const AgentRecord& a : scene.agents) {
    r.agents.push_back({a.id, a.states});
  }
  r.predictions.resize(t_roll);
  for (std::size_t t = 1; t <= t_roll; ++t) {
    PredictionMap& m = r.predictions[t - 1];
    for (const AgentRecord& a : scene.agents) {
      const Vec2 next = (t < t_roll) ? a.states[t + 1]
                                     : Vec2(2.0 * a.states[t_roll] - a.states[t_roll - 1]);
      m[a.id] = Trajectory{next};
    }
  }
  return r;
}

std::string write_weights(const WeightsFile& w) {
  std::string out = "{\"goal\":";
  out += fmt_double(w.weights.goal);
  out += ",\"control\":";
  out += fmt_double(w.weights.control);
  out += ",\"rbf_current\":";
  out += fmt_double(w.weights.rbf_current);
  out += ",\"rbf_pred\":";
  out += fmt_double(w.weights.rbf_pred);
  out += ",\"converged\":";
  out += w.converged ? "true" : "false";
  out += ",\"iterations\":";
  out += std::to_string(w.iterations);
  out += "}\n";
  return out;
}

WeightsFile parse_weights(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), "");
  }
  if (!j.is_object()) {
    throw ParseError("malformed JSON: top level is not an object", "");
  }
  WeightsFile w;
  w.weights.goal = finite_number(field(j, "goal", ""), "goal");
  w.weights.control = finite_number(field(j, "control", ""), "control");
  w.weights.rbf_current = finite_number(field(j, "rbf_current", ""), "rbf_current");
  w.weights.rbf_pred = finite_number(field(j, "rbf_pred", ""), "rbf_pred");
  for (double v : {w.weights.goal, w.weights.control, w.weights.rbf_current, w.weights.rbf_pred}) {
    if (v < 0.0) {
      throw ParseError("weights: must be nonnegative", "");
    }
  }
  const json& conv = field(j, "converged", "");
  if (!conv.is_boolean()) {
    throw ParseError(fail("converged", "expected a boolean"), "converged");
  }
  w.converged = conv.get<bool>();
  const json& iters = field(j, "iterations", "");
  if (!iters.is_number_integer()) {
    throw ParseError(fail("iterations", "expected an integer"), "iterations");
  }
  w.iterations = iters.get<int>();
  return w;
}

}  // namespace planeval
