#include "planeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr double kBandwidthFloor = 1e-3;

void check_pair(const Trajectory& prediction, const Trajectory& ground_truth) {
  if (ground_truth.empty() || prediction.empty()) {
    throw EmptyInputError("metric: empty trajectory");
  }
  if (prediction.size() != ground_truth.size()) {
    throw ShapeError("metric: prediction has " + std::to_string(prediction.size()) +
                     " steps, ground truth has " + std::to_string(ground_truth.size()));
  }
}

MinMetricResult min_over(const std::vector<Trajectory>& candidates,
                         const Trajectory& ground_truth,
                         double (*metric)(const Trajectory&, const Trajectory&)) {
  if (candidates.empty()) {
    throw EmptyInputError("metric: empty candidate set");
  }
  MinMetricResult best{metric(candidates[0], ground_truth), 0};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = metric(candidates[i], ground_truth);
    if (v < best.value) {
      best = {v, i};
    }
  }
  return best;
}

}  // namespace

double ade(const Trajectory& prediction, const Trajectory& ground_truth) {
  check_pair(prediction, ground_truth);
  double sum = 0.0;
  for (std::size_t t = 0; t < prediction.size(); ++t) {
    sum += (prediction[t] - ground_truth[t]).norm();
  }
  return sum / static_cast<double>(prediction.size());
}

double fde(const Trajectory& prediction, const Trajectory& ground_truth) {
  check_pair(prediction, ground_truth);
  return (prediction.back() - ground_truth.back()).norm();
}

MinMetricResult min_ade(const std::vector<Trajectory>& candidates,
                        const Trajectory& ground_truth) {
  return min_over(candidates, ground_truth, &ade);
}

MinMetricResult min_fde(const std::vector<Trajectory>& candidates,
                        const Trajectory& ground_truth) {
  return min_over(candidates, ground_truth, &fde);
}

double nll_gaussian(const std::vector<GaussianStep>& prediction,
                    const Trajectory& ground_truth) {
  if (prediction.empty() || ground_truth.empty()) {
    throw EmptyInputError("nll_gaussian: empty input");
  }
  if (prediction.size() != ground_truth.size()) {
    throw ShapeError("nll_gaussian: horizon mismatch");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < prediction.size(); ++t) {
    const Eigen::Matrix2d& c = prediction[t].cov;
    const double asym = std::abs(c(0, 1) - c(1, 0));
    if (asym > 1e-9 * std::max({1.0, std::abs(c(0, 1)), std::abs(c(1, 0))})) {
      throw InvalidCovarianceError("nll_gaussian: covariance not symmetric at step " +
                                   std::to_string(t));
    }
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    if (!(c(0, 0) > 0.0) || !(det > 0.0)) {
      throw InvalidCovarianceError("nll_gaussian: covariance not positive definite at step " +
                                   std::to_string(t));
    }
    const Vec2 r = ground_truth[t] - prediction[t].mean;
    const double quad =
        (r[0] * (c(1, 1) * r[0] - c(0, 1) * r[1]) + r[1] * (c(0, 0) * r[1] - c(1, 0) * r[0])) /
        det;
    sum += std::log(2.0 * std::numbers::pi) + 0.5 * std::log(det) + 0.5 * quad;
  }
  return sum / static_cast<double>(prediction.size());
}

double kde_nll(const std::vector<Trajectory>& samples, const Trajectory& ground_truth) {
  if (ground_truth.empty()) {
    throw EmptyInputError("kde_nll: empty ground truth");
  }
  const std::size_t m = samples.size();
  if (m < 2) {
    throw InsufficientSamplesError("kde_nll: needs at least 2 samples, got " +
                                   std::to_string(m));
  }
  for (const Trajectory& s : samples) {
    if (s.size() != ground_truth.size()) {
      throw ShapeError("kde_nll: sample horizon mismatch");
    }
  }

  const double scott = std::pow(static_cast<double>(m), -1.0 / 6.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < ground_truth.size(); ++t) {
    Vec2 mean = Vec2::Zero();
    for (const Trajectory& s : samples) {
      mean += s[t];
    }
    mean /= static_cast<double>(m);
    Vec2 var = Vec2::Zero();
    for (const Trajectory& s : samples) {
      var += (s[t] - mean).cwiseProduct(s[t] - mean);
    }
    var /= static_cast<double>(m - 1);

    const double hx = std::max(std::sqrt(var[0]) * scott, kBandwidthFloor);
    const double hy = std::max(std::sqrt(var[1]) * scott, kBandwidthFloor);

    double density = 0.0;
    for (const Trajectory& s : samples) {
      const Vec2 d = ground_truth[t] - s[t];
      density += std::exp(-0.5 * (d[0] * d[0] / (hx * hx) + d[1] * d[1] / (hy * hy)));
    }
    density /= static_cast<double>(m) * 2.0 * std::numbers::pi * hx * hy;
    sum += -std::log(std::max(density, kDensityFloor));
  }
  return sum / static_cast<double>(ground_truth.size());
}

std::map<AgentId, double> scheme_weights(const std::map<AgentId, double>& g,
                                         const WeightingScheme& scheme) {
  std::map<AgentId, double> f;
  switch (scheme.kind) {
    case WeightingScheme::Kind::normalization: {
      double total = 0.0;
      for (const auto& [id, v] : g) {
        total += v;
      }
      for (const auto& [id, v] : g) {
        f[id] = total < 1e-12 ? 1.0 : 1.0 + v / total;
      }
      break;
    }
    case WeightingScheme::Kind::softmax: {
      double peak = -std::numeric_limits<double>::infinity();
      for (const auto& [id, v] : g) {
        peak = std::max(peak, v);
      }
      double total = 0.0;
      for (const auto& [id, v] : g) {
        total += std::exp(v - peak);
      }
      for (const auto& [id, v] : g) {
        f[id] = 1.0 + std::exp(v - peak) / total;
      }
      break;
    }
    case WeightingScheme::Kind::gt_excess: {
      for (const auto& [id, v] : g) {
        auto it = scheme.gt_sensitivity.find(id);
        if (it == scheme.gt_sensitivity.end()) {
          throw KeyMismatchError("pi_wrap: no ground-truth sensitivity for agent '" + id + "'");
        }
        f[id] = 1.0 + std::max(0.0, v - it->second);
      }
      break;
    }
  }
  return f;
}

double pi_wrap(const std::map<AgentId, double>& per_agent_metric,
               const std::map<AgentId, double>& g, const WeightingScheme& scheme) {
  if (per_agent_metric.empty()) {
    throw EmptyInputError("pi_wrap: no agents");
  }
  if (per_agent_metric.size() != g.size()) {
    throw KeyMismatchError("pi_wrap: metric and sensitivity maps differ in size");
  }
  for (const auto& [id, v] : per_agent_metric) {
    (void)v;
    if (g.find(id) == g.end()) {
      throw KeyMismatchError("pi_wrap: no sensitivity for agent '" + id + "'");
    }
  }
  const std::map<AgentId, double> f = scheme_weights(g, scheme);
  double sum = 0.0;
  for (const auto& [id, m] : per_agent_metric) {
    sum += f.at(id) * m;
  }
  return sum / static_cast<double>(per_agent_metric.size());
}

}  // namespace planeval
