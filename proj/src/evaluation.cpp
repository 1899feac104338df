#include "planeval/evaluation.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "planeval/errors.hpp"
#include "planeval/sim_env.hpp"

namespace planeval {

namespace {

const char* const kMetricNames[] = {"ade", "fde", "min_ade", "min_fde", "nll", "kde_nll"};

bool metric_applies(const std::string& name, const PredictionOutput& output) {
  if (std::holds_alternative<Trajectory>(output)) {
    return name == "ade" || name == "fde";
  }
  if (std::holds_alternative<GaussianSequence>(output)) {
    return name == "nll";
  }
  return name == "min_ade" || name == "min_fde" || name == "kde_nll";
}

double metric_value(const std::string& name, const PredictionOutput& output,
                    const Trajectory& gt) {
  if (const Trajectory* traj = std::get_if<Trajectory>(&output)) {
    return name == "ade" ? ade(*traj, gt) : fde(*traj, gt);
  }
  if (const GaussianSequence* seq = std::get_if<GaussianSequence>(&output)) {
    return nll_gaussian(seq->steps, gt);
  }
  const SampleSet& samples = std::get<SampleSet>(output);
  if (name == "min_ade") {
    return min_ade(samples.trajectories, gt).value;
  }
  if (name == "min_fde") {
    return min_fde(samples.trajectories, gt).value;
  }
  return kde_nll(samples.trajectories, gt);
}

/// Trajectory the sensitivity is computed on: gaussians collapse to their
/// means, sample sets to their per-step mean.
Trajectory representative(const PredictionOutput& output) {
  if (const Trajectory* traj = std::get_if<Trajectory>(&output)) {
    return *traj;
  }
  if (const GaussianSequence* seq = std::get_if<GaussianSequence>(&output)) {
    Trajectory out;
    out.reserve(seq->steps.size());
    for (const GaussianStep& step : seq->steps) {
      out.push_back(step.mean);
    }
    return out;
  }
  const SampleSet& samples = std::get<SampleSet>(output);
  Trajectory out(samples.trajectories.front().size(), Vec2::Zero());
  for (const Trajectory& traj : samples.trajectories) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += traj[k];
    }
  }
  for (Vec2& p : out) {
    p /= static_cast<double>(samples.trajectories.size());
  }
  return out;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) {
    return value;
  }
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') {
      quoted += '"';
    }
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_number) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  const std::string where = "row " + std::to_string(line_number);
  while (i < line.size()) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) {
        throw ParseError(where + ": unexpected quote inside an unquoted field", where);
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
    ++i;
  }
  if (quoted) {
    throw ParseError(where + ": unterminated quoted field", where);
  }
  fields.push_back(std::move(field));
  return fields;
}

double csv_double(const std::string& field, const std::string& where) {
  if (field.empty()) {
    throw ParseError(where + ": empty numeric field", where);
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw ParseError(where + ": not a number: '" + field + "'", where);
  }
  return value;
}

std::string fmt_fixed(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

void append_xml_escaped(std::string& out, const std::string& text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
}

bool read_text_file(const std::string& path, std::string& out, std::string& error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    error = "cannot open " + path;
    return false;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  out = buffer.str();
  return true;
}

bool write_text_file(const std::string& path, const std::string& content, std::string& error) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    error = "cannot open " + path + " for writing";
    return false;
  }
  out << content;
  out.flush();
  if (!out) {
    error = "failed writing " + path;
    return false;
  }
  return true;
}

/// Runs `body` per nonempty line, reporting thrown planeval errors to stderr
/// with their line number. Returns the number of failed lines.
template <typename Body>
int for_each_scene_line(const std::string& path, const std::string& text, Body body) {
  int failures = 0;
  std::size_t line_number = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) {
      end = text.size();
    }
    std::string line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    ++line_number;
    if (!line.empty()) {
      try {
        body(line);
      } catch (const ParseError& e) {
        std::cerr << path << ":" << line_number << ": " << e.what() << "\n";
        ++failures;
      } catch (const Error& e) {
        std::cerr << path << ":" << line_number << ": " << e.what() << "\n";
        ++failures;
      }
    }
    if (end == text.size()) {
      break;
    }
    begin = end + 1;
  }
  return failures;
}

}  // namespace

bool known_metric(const std::string& name) {
  for (const char* known : kMetricNames) {
    if (name == known) {
      return true;
    }
  }
  return false;
}

std::optional<WeightingScheme::Kind> scheme_from_name(const std::string& name) {
  if (name == "norm") return WeightingScheme::Kind::normalization;
  if (name == "softmax") return WeightingScheme::Kind::softmax;
  if (name == "gt_excess") return WeightingScheme::Kind::gt_excess;
  return std::nullopt;
}

std::string scheme_name(WeightingScheme::Kind kind) {
  switch (kind) {
    case WeightingScheme::Kind::normalization: return "norm";
    case WeightingScheme::Kind::softmax: return "softmax";
    case WeightingScheme::Kind::gt_excess: return "gt_excess";
  }
  return "unknown";
}

std::vector<ReportRow> evaluate_scene(const SceneRecord& scene, const CostWeights& weights,
                                      const EvalOptions& options) {
  for (const std::string& name : options.metrics) {
    if (!known_metric(name)) {
      throw InvalidInputError("unknown metric name: " + name);
    }
  }
  const Rollout rollout = scene_to_rollout(scene);

  std::map<AgentId, double> gt_sensitivity;
  for (const AgentRecord& agent : scene.agents) {
    if (!agent.gt_future.empty()) {
      gt_sensitivity[agent.id] =
          sensitivity_of_trajectory(weights, rollout, agent.gt_future, options.sensitivity);
    }
  }

  WeightingScheme scheme;
  switch (options.scheme) {
    case WeightingScheme::Kind::normalization: scheme = WeightingScheme::normalization(); break;
    case WeightingScheme::Kind::softmax: scheme = WeightingScheme::softmax(); break;
    case WeightingScheme::Kind::gt_excess: scheme = WeightingScheme::gt_excess(gt_sensitivity); break;
  }
  const std::string scheme_token = scheme_name(options.scheme);

  std::vector<ReportRow> rows;
  for (const AgentRecord& agent : scene.agents) {
    for (const CandidateRecord& candidate : agent.candidates) {
      const Trajectory rep = representative(candidate.output);
      const double g =
          sensitivity_of_trajectory(weights, rollout, rep, options.sensitivity);

      std::map<AgentId, double> g_map = gt_sensitivity;
      g_map[agent.id] = g;
      const double f = scheme_weights(g_map, scheme).at(agent.id);

      for (const std::string& metric : options.metrics) {
        if (!metric_applies(metric, candidate.output)) {
          continue;
        }
        ReportRow row;
        row.scene_id = scene.scene_id;
        row.agent_id = agent.id;
        row.candidate_id = candidate.candidate_id;
        row.metric_name = metric;
        row.plain_value = metric_value(metric, candidate.output, agent.gt_future);
        row.g = g;
        row.g_gt = gt_sensitivity.at(agent.id);
        row.scheme = scheme_token;
        row.pi_value = f * row.plain_value;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string report_csv_header() {
  return "scene_id,agent_id,candidate_id,metric_name,plain_value,g,g_gt,scheme,pi_value";
}

std::string write_report_csv(const std::vector<ReportRow>& rows) {
  std::string out = report_csv_header();
  out += '\n';
  for (const ReportRow& row : rows) {
    out += csv_field(row.scene_id);
    out += ',';
    out += csv_field(row.agent_id);
    out += ',';
    out += csv_field(row.candidate_id);
    out += ',';
    out += csv_field(row.metric_name);
    out += ',';
    out += fmt_double(row.plain_value);
    out += ',';
    out += fmt_double(row.g);
    out += ',';
    out += fmt_double(row.g_gt);
    out += ',';
    out += csv_field(row.scheme);
    out += ',';
    out += fmt_double(row.pi_value);
    out += '\n';
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::vector<ReportRow> rows;
  std::size_t line_number = 0;
  std::size_t begin = 0;
  bool saw_header = false;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) {
      end = text.size();
    }
    std::string line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    ++line_number;
    if (!line.empty()) {
      if (!saw_header) {
        if (line != report_csv_header()) {
          throw ParseError("row 1: unexpected header: '" + line + "'", "row 1");
        }
        saw_header = true;
      } else {
        const std::string where = "row " + std::to_string(line_number);
        std::vector<std::string> fields = split_csv_line(line, line_number);
        if (fields.size() != 9) {
          throw ParseError(where + ": expected 9 fields, got " + std::to_string(fields.size()),
                           where);
        }
        ReportRow row;
        row.scene_id = fields[0];
        row.agent_id = fields[1];
        row.candidate_id = fields[2];
        row.metric_name = fields[3];
        row.plain_value = csv_double(fields[4], where + ".plain_value");
        row.g = csv_double(fields[5], where + ".g");
        row.g_gt = csv_double(fields[6], where + ".g_gt");
        row.scheme = fields[7];
        row.pi_value = csv_double(fields[8], where + ".pi_value");
        rows.push_back(std::move(row));
      }
    }
    if (end == text.size()) {
      break;
    }
    begin = end + 1;
  }
  if (!saw_header) {
    throw ParseError("row 1: missing header", "row 1");
  }
  return rows;
}

std::string render_report_svg(const std::vector<ReportRow>& rows) {
  const double left = 300.0;
  const double plot_width = 540.0;
  const double right = 40.0;
  const double top = 44.0;
  const double bottom = 18.0;
  const double row_height = 26.0;
  const double bar_height = 9.0;
  const double width = left + plot_width + right;
  const double height = top + row_height * static_cast<double>(rows.size()) + bottom;

  double scale_max = 0.0;
  for (const ReportRow& row : rows) {
    scale_max = std::max({scale_max, row.plain_value, row.pi_value});
  }
  if (!(scale_max > 0.0) || !std::isfinite(scale_max)) {
    scale_max = 1.0;
  }
  const auto bar_width = [&](double value) {
    if (!std::isfinite(value) || value <= 0.0) {
      return 0.0;
    }
    return value / scale_max * plot_width;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(width) +
         "\" height=\"" + fmt_fixed(height) + "\" viewBox=\"0 0 " + fmt_fixed(width) + " " +
         fmt_fixed(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt_fixed(width) + "\" height=\"" +
         fmt_fixed(height) + "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + fmt_fixed(left) +
         "\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">plain (blue) vs "
         "planning-informed (orange)</text>\n";
  svg += "<line x1=\"" + fmt_fixed(left) + "\" y1=\"" + fmt_fixed(top - 8.0) + "\" x2=\"" +
         fmt_fixed(left) + "\" y2=\"" + fmt_fixed(height - bottom) +
         "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ReportRow& row = rows[i];
    const double y = top + row_height * static_cast<double>(i);
    std::string label = row.scene_id + " " + row.agent_id + " " + row.candidate_id + " " +
                        row.metric_name;
    svg += "<g class=\"row\">\n";
    svg += "  <text x=\"" + fmt_fixed(left - 8.0) + "\" y=\"" +
           fmt_fixed(y + row_height / 2.0 + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">";
    append_xml_escaped(svg, label);
    svg += "</text>\n";
    svg += "  <rect class=\"plain\" x=\"" + fmt_fixed(left) + "\" y=\"" + fmt_fixed(y + 3.0) +
           "\" width=\"" + fmt_fixed(bar_width(row.plain_value)) + "\" height=\"" +
           fmt_fixed(bar_height) + "\" fill=\"#4c78a8\" data-value=\"" +
           fmt_double(row.plain_value) + "\"/>\n";
    svg += "  <rect class=\"pi\" x=\"" + fmt_fixed(left) + "\" y=\"" +
           fmt_fixed(y + 3.0 + bar_height + 2.0) + "\" width=\"" +
           fmt_fixed(bar_width(row.pi_value)) + "\" height=\"" + fmt_fixed(bar_height) +
           "\" fill=\"#f58518\" data-value=\"" + fmt_double(row.pi_value) + "\"/>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

int cmd_simulate(const std::string& preset, std::uint64_t seed, int count,
                 const std::string& out_path) {
  const std::optional<Preset> kind = preset_from_name(preset);
  if (!kind) {
    std::cerr << "unknown preset '" << preset << "' (expected head_on, passing, or random)\n";
    return 2;
  }
  if (count < 1) {
    std::cerr << "count must be at least 1\n";
    return 2;
  }
  std::string out;
  ScenarioConfig config = preset_defaults(*kind);
  for (int i = 0; i < count; ++i) {
    config.seed = seed + static_cast<std::uint64_t>(i);
    out += write_scene(generate_scenario(config).scene);
    out += '\n';
  }
  std::string error;
  if (!write_text_file(out_path, out, error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::cout << "wrote " << count << " scene(s) to " << out_path << "\n";
  return 0;
}

int cmd_learn(const std::string& scenes_path, const std::string& out_path) {
  std::string text;
  std::string error;
  if (!read_text_file(scenes_path, text, error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::vector<Rollout> rollouts;
  const int failures = for_each_scene_line(scenes_path, text, [&](const std::string& line) {
    rollouts.push_back(scene_to_rollout(parse_scene(line)));
  });
  if (failures > 0) {
    std::cerr << failures << " line(s) failed to parse\n";
  }
  if (rollouts.empty()) {
    std::cerr << "no usable scenes in " << scenes_path << "\n";
    return 1;
  }

  LearnResult result;
  try {
    result = learn_weights(rollouts, LearnConfig{}, FeatureConfig{});
  } catch (const Error& e) {
    std::cerr << "learning failed: " << e.what() << "\n";
    return 1;
  }
  const WeightsFile file{result.weights, result.converged, result.iterations};
  if (!write_text_file(out_path, write_weights(file), error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::cout << "learned weights from " << rollouts.size() << " scene(s): goal="
            << fmt_double(result.weights.goal) << " control=" << fmt_double(result.weights.control)
            << " rbf_current=" << fmt_double(result.weights.rbf_current)
            << " rbf_pred=" << fmt_double(result.weights.rbf_pred)
            << " converged=" << (result.converged ? "true" : "false")
            << " iterations=" << result.iterations << "\n";
  return failures > 0 ? 1 : 0;
}

int cmd_eval(const std::string& scenes_path, const std::string& weights_path,
             const std::string& metrics_list, const std::string& scheme,
             const std::string& out_path) {
  EvalOptions options;
  options.metrics.clear();
  std::stringstream names(metrics_list);
  std::string name;
  while (std::getline(names, name, ',')) {
    if (name.empty()) {
      continue;
    }
    if (!known_metric(name)) {
      std::cerr << "unknown metric '" << name
                << "' (expected ade, fde, min_ade, min_fde, nll, kde_nll)\n";
      return 2;
    }
    options.metrics.push_back(name);
  }
  if (options.metrics.empty()) {
    std::cerr << "no metrics requested\n";
    return 2;
  }
  const std::optional<WeightingScheme::Kind> kind = scheme_from_name(scheme);
  if (!kind) {
    std::cerr << "unknown scheme '" << scheme << "' (expected norm, softmax, gt_excess)\n";
    return 2;
  }
  options.scheme = *kind;

  std::string weights_text;
  std::string error;
  if (!read_text_file(weights_path, weights_text, error)) {
    std::cerr << error << "\n";
    return 1;
  }
  WeightsFile weights;
  try {
    weights = parse_weights(weights_text);
  } catch (const Error& e) {
    std::cerr << weights_path << ": " << e.what() << "\n";
    return 1;
  }

  std::string text;
  if (!read_text_file(scenes_path, text, error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::vector<ReportRow> rows;
  int scenes = 0;
  const int failures = for_each_scene_line(scenes_path, text, [&](const std::string& line) {
    std::vector<ReportRow> scene_rows =
        evaluate_scene(parse_scene(line), weights.weights, options);
    rows.insert(rows.end(), scene_rows.begin(), scene_rows.end());
    ++scenes;
  });
  if (failures > 0) {
    std::cerr << failures << " line(s) failed\n";
  }
  if (!write_text_file(out_path, write_report_csv(rows), error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::cout << "evaluated " << scenes << " scene(s), " << rows.size() << " row(s) to "
            << out_path << "\n";
  return failures > 0 ? 1 : 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  std::string text;
  std::string error;
  if (!read_text_file(in_path, text, error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::vector<ReportRow> rows;
  try {
    rows = parse_report_csv(text);
  } catch (const Error& e) {
    std::cerr << in_path << ": " << e.what() << "\n";
    return 1;
  }
  if (!write_text_file(out_path, render_report_svg(rows), error)) {
    std::cerr << error << "\n";
    return 1;
  }
  std::cout << "rendered " << rows.size() << " row(s) to " << out_path << "\n";
  return 0;
}

}  // namespace planeval
