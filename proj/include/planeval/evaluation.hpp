#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planeval/cost_model.hpp"
#include "planeval/metrics.hpp"
#include "planeval/scene_io.hpp"
#include "planeval/sensitivity.hpp"

namespace planeval {

/// Metric names accepted on the command line and in report rows.
bool known_metric(const std::string& name);

/// Scheme tokens: norm, softmax, gt_excess.
std::optional<WeightingScheme::Kind> scheme_from_name(const std::string& name);
std::string scheme_name(WeightingScheme::Kind kind);

struct EvalOptions {
  std::vector<std::string> metrics = {"ade", "fde"};
  WeightingScheme::Kind scheme = WeightingScheme::Kind::gt_excess;
  SensitivityConfig sensitivity;
};

/// One evaluated (agent, candidate, metric) combination. pi_value is the
/// row's scheme weight times plain_value; the weight for normalization and
/// softmax is computed against the other agents' ground-truth sensitivities.
struct ReportRow {
  std::string scene_id;
  std::string agent_id;
  std::string candidate_id;
  std::string metric_name;
  double plain_value = 0.0;
  double g = 0.0;
  double g_gt = 0.0;
  std::string scheme;
  double pi_value = 0.0;
};

/// Scores every candidate of every ground-truthed agent with the requested
/// metrics that apply to its output type (trajectory: ade, fde; gaussians:
/// nll; samples: min_ade, min_fde, kde_nll). Rows keep agent order, then
/// candidate order, then requested metric order.
std::vector<ReportRow> evaluate_scene(const SceneRecord& scene, const CostWeights& weights,
                                      const EvalOptions& options);

std::string report_csv_header();
std::string write_report_csv(const std::vector<ReportRow>& rows);

/// Parses a report back; throws ParseError on a malformed header or row.
std::vector<ReportRow> parse_report_csv(const std::string& text);

/// Standalone grouped bar chart, one <g class="row"> per report row holding
/// the plain bar and the planning-informed bar. Pure function of the rows.
std::string render_report_svg(const std::vector<ReportRow>& rows);

// Command-line drivers. Per-line input failures go to stderr with line
// numbers and the batch keeps going; a nonzero exit reports that some line
// (or the whole command) failed.
int cmd_simulate(const std::string& preset, std::uint64_t seed, int count,
                 const std::string& out_path);
int cmd_learn(const std::string& scenes_path, const std::string& out_path);
int cmd_eval(const std::string& scenes_path, const std::string& weights_path,
             const std::string& metrics_list, const std::string& scheme,
             const std::string& out_path);
int cmd_report(const std::string& in_path, const std::string& out_path);

}  // namespace planeval
