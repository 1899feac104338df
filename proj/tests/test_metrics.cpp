#include <doctest.h>

#include <cmath>
#include <random>

#include "planeval/errors.hpp"
#include "planeval/metrics.hpp"

using namespace planeval;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  Trajectory out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Vec2(pos(rng), pos(rng)));
  }
  return out;
}

Trajectory shifted(const Trajectory& base, const Vec2& offset) {
  Trajectory out = base;
  for (Vec2& p : out) {
    p += offset;
  }
  return out;
}

}  // namespace

TEST_CASE("displacement fixtures") {
  std::mt19937_64 rng(51);
  const Trajectory gt = random_trajectory(rng, 6);
  CHECK(ade(gt, gt) == 0.0);
  CHECK(fde(gt, gt) == 0.0);

  const Trajectory off = shifted(gt, Vec2(0.3, 0.4));
  CHECK(std::abs(ade(off, gt) - 0.5) <= 1e-15);
  CHECK(std::abs(fde(off, gt) - 0.5) <= 1e-15);

  Trajectory stepped{Vec2(0.0, 0.0), Vec2(1.0, 1.0), Vec2(2.0, 2.0)};
  Trajectory pred{Vec2(1.0, 0.0), Vec2(1.0, 3.0), Vec2(2.0, 2.0) + Vec2(0.09, 0.12)};
  CHECK(std::abs(ade(pred, stepped) - (1.0 + 2.0 + 0.15) / 3.0) <= 1e-15);
  CHECK(std::abs(fde(pred, stepped) - 0.15) <= 1e-15);
}

TEST_CASE("displacement metrics reject bad shapes") {
  const Trajectory gt{Vec2(0.0, 0.0), Vec2(1.0, 0.0)};
  CHECK_THROWS_AS(ade({}, gt), EmptyInputError);
  CHECK_THROWS_AS(fde(gt, {}), EmptyInputError);
  CHECK_THROWS_AS(ade({Vec2(0.0, 0.0)}, gt), ShapeError);
  CHECK_THROWS_AS(min_ade({}, gt), EmptyInputError);
  CHECK_THROWS_AS(min_fde({{Vec2(0.0, 0.0)}}, gt), ShapeError);
}

TEST_CASE("minimum displacement picks the best candidate, ties to the lowest index") {
  std::mt19937_64 rng(52);
  const Trajectory gt = random_trajectory(rng, 5);
  std::vector<Trajectory> candidates{shifted(gt, Vec2(1.0, 0.0)), gt, shifted(gt, Vec2(0.0, 2.0))};

  const MinMetricResult best = min_ade(candidates, gt);
  CHECK(best.value == 0.0);
  CHECK(best.index == 1);
  CHECK(min_fde(candidates, gt).index == 1);

  const MinMetricResult single = min_ade({candidates[0]}, gt);
  CHECK(single.value == ade(candidates[0], gt));
  CHECK(single.index == 0);

  const MinMetricResult tie = min_ade({gt, gt}, gt);
  CHECK(tie.index == 0);

  std::vector<Trajectory> pool;
  for (int i = 0; i < 5; ++i) {
    pool.push_back(random_trajectory(rng, 5));
  }
  double best_value = ade(pool[0], gt);
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double v = ade(pool[i], gt);
    if (v < best_value) {
      best_value = v;
      best_index = i;
    }
  }
  const MinMetricResult got = min_ade(pool, gt);
  CHECK(got.value == best_value);
  CHECK(got.index == best_index);
}

TEST_CASE("gaussian likelihood fixtures") {
  const Trajectory gt{Vec2(1.0, 2.0), Vec2(3.0, -1.0)};
  std::vector<GaussianStep> at_mean{{gt[0], Eigen::Matrix2d::Identity()},
                                    {gt[1], Eigen::Matrix2d::Identity()}};
  CHECK(std::abs(nll_gaussian(at_mean, gt) - 1.8378770664093454836) <= 1e-14);

  std::vector<GaussianStep> tight = at_mean;
  tight[0].cov = 0.25 * Eigen::Matrix2d::Identity();
  tight[1].cov = 0.25 * Eigen::Matrix2d::Identity();
  CHECK(nll_gaussian(tight, gt) < nll_gaussian(at_mean, gt));
}

TEST_CASE("gaussian likelihood matches the closed form") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const Trajectory gt = random_trajectory(rng, 4);
  std::vector<GaussianStep> pred;
  for (const Vec2& point : gt) {
    GaussianStep step;
    step.mean = point + Vec2(entry(rng), entry(rng));
    Eigen::Matrix2d a;
    a << 1.0 + 0.3 * entry(rng), 0.2 * entry(rng), 0.2 * entry(rng), 1.0 + 0.3 * entry(rng);
    step.cov = a * a.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    pred.push_back(step);
  }

  double expected = 0.0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const Eigen::Matrix2d& c = pred[t].cov;
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    const Vec2 d = gt[t] - pred[t].mean;
    const double quad =
        (c(1, 1) * d[0] * d[0] - 2.0 * c(0, 1) * d[0] * d[1] + c(0, 0) * d[1] * d[1]) / det;
    expected += std::log(2.0 * M_PI) + 0.5 * std::log(det) + 0.5 * quad;
  }
  expected /= static_cast<double>(gt.size());
  CHECK(std::abs(nll_gaussian(pred, gt) - expected) <= 1e-12);
}

TEST_CASE("gaussian likelihood rejects bad covariances") {
  const Trajectory gt{Vec2(0.0, 0.0)};
  GaussianStep asym;
  asym.cov << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(nll_gaussian({asym}, gt), InvalidCovarianceError);

  GaussianStep indefinite;
  indefinite.cov << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(nll_gaussian({indefinite}, gt), InvalidCovarianceError);

  GaussianStep singular;
  singular.cov << 1.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(nll_gaussian({singular}, gt), InvalidCovarianceError);

  CHECK_THROWS_AS(nll_gaussian({}, gt), EmptyInputError);
  CHECK_THROWS_AS(nll_gaussian({GaussianStep{}}, Trajectory{}), EmptyInputError);
}

TEST_CASE("kde likelihood at coincident samples hits the bandwidth floor") {
  const Trajectory gt{Vec2(0.5, -0.5), Vec2(1.0, 1.0)};
  const std::vector<Trajectory> samples(4, gt);
  // All samples sit on the ground truth, so the density is the kernel peak
  // with both bandwidths floored at 1e-3.
  CHECK(std::abs(kde_nll(samples, gt) - std::log(2.0 * M_PI * 1e-6)) <= 1e-12);
}

TEST_CASE("kde likelihood floors vanishing densities") {
  const Trajectory gt{Vec2(1000.0, 1000.0)};
  const std::vector<Trajectory> samples{{Vec2(0.0, 0.0)}, {Vec2(0.1, 0.1)}, {Vec2(-0.1, 0.2)}};
  CHECK(std::abs(kde_nll(samples, gt) - (-std::log(1e-300))) <= 1e-9);
}

TEST_CASE("kde likelihood matches a direct mixture evaluation") {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  const std::size_t m = 6;
  const std::size_t horizon = 3;
  const Trajectory gt = random_trajectory(rng, horizon);
  std::vector<Trajectory> samples;
  for (std::size_t j = 0; j < m; ++j) {
    samples.push_back(random_trajectory(rng, horizon));
  }

  double expected = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
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
    const double scott = std::pow(static_cast<double>(m), -1.0 / 6.0);
    const double hx = std::max(std::sqrt(var[0]) * scott, 1e-3);
    const double hy = std::max(std::sqrt(var[1]) * scott, 1e-3);
    double acc = 0.0;
    for (const Trajectory& s : samples) {
      const Vec2 d = gt[t] - s[t];
      acc += std::exp(-(d[0] * d[0] / (hx * hx) + d[1] * d[1] / (hy * hy)) / 2.0);
    }
    const double density = acc / (static_cast<double>(m) * 2.0 * M_PI * hx * hy);
    expected += -std::log(std::max(density, 1e-300));
  }
  expected /= static_cast<double>(horizon);
  CHECK(std::abs(kde_nll(samples, gt) - expected) <= 1e-9);
}

TEST_CASE("kde likelihood rejects undersized or misshapen inputs") {
  const Trajectory gt{Vec2(0.0, 0.0)};
  CHECK_THROWS_AS(kde_nll({{Vec2(0.0, 0.0)}}, gt), InsufficientSamplesError);
  CHECK_THROWS_AS(kde_nll({}, gt), InsufficientSamplesError);
  CHECK_THROWS_AS(kde_nll({{Vec2(0.0, 0.0), Vec2(1.0, 0.0)}, {Vec2(0.0, 1.0)}}, gt), ShapeError);
}

TEST_CASE("all six metrics are invariant to rigid translation") {
  std::mt19937_64 rng(55);
  const Vec2 offset(10.0, -7.0);
  const Trajectory gt = random_trajectory(rng, 5);
  const Trajectory pred = random_trajectory(rng, 5);
  std::vector<Trajectory> samples;
  for (int j = 0; j < 4; ++j) {
    samples.push_back(random_trajectory(rng, 5));
  }
  std::vector<GaussianStep> gauss;
  for (const Vec2& p : pred) {
    gauss.push_back({p, 0.8 * Eigen::Matrix2d::Identity()});
  }

  const Trajectory gt2 = shifted(gt, offset);
  const Trajectory pred2 = shifted(pred, offset);
  std::vector<Trajectory> samples2;
  for (const Trajectory& s : samples) {
    samples2.push_back(shifted(s, offset));
  }
  std::vector<GaussianStep> gauss2 = gauss;
  for (GaussianStep& step : gauss2) {
    step.mean += offset;
  }

  CHECK(std::abs(ade(pred2, gt2) - ade(pred, gt)) <= 1e-12);
  CHECK(std::abs(fde(pred2, gt2) - fde(pred, gt)) <= 1e-12);
  CHECK(std::abs(min_ade(samples2, gt2).value - min_ade(samples, gt).value) <= 1e-12);
  CHECK(std::abs(min_fde(samples2, gt2).value - min_fde(samples, gt).value) <= 1e-12);
  CHECK(std::abs(nll_gaussian(gauss2, gt2) - nll_gaussian(gauss, gt)) <= 1e-12);
  CHECK(std::abs(kde_nll(samples2, gt2) - kde_nll(samples, gt)) <= 1e-12);
}

TEST_CASE("scheme weight fixtures") {
  const std::map<AgentId, double> g{{"a", 3.0}, {"b", 1.0}};
  const auto norm = scheme_weights(g, WeightingScheme::normalization());
  CHECK(std::abs(norm.at("a") - 1.75) <= 1e-12);
  CHECK(std::abs(norm.at("b") - 1.25) <= 1e-12);

  const auto soft = scheme_weights({{"a", 1.0}, {"b", 1.0}}, WeightingScheme::softmax());
  CHECK(std::abs(soft.at("a") - 1.5) <= 1e-12);
  CHECK(std::abs(soft.at("b") - 1.5) <= 1e-12);

  const auto excess =
      scheme_weights({{"a", 0.90}}, WeightingScheme::gt_excess({{"a", 0.57}}));
  CHECK(std::abs(excess.at("a") - 1.33) <= 1e-12);
  const auto below =
      scheme_weights({{"a", 0.40}}, WeightingScheme::gt_excess({{"a", 0.57}}));
  CHECK(below.at("a") == 1.0);
}

TEST_CASE("softmax weights are a proper unit excess") {
  const std::map<AgentId, double> g{{"a", 0.3}, {"b", 2.1}, {"c", 1.4}};
  const auto f = scheme_weights(g, WeightingScheme::softmax());
  double excess = 0.0;
  for (const auto& [id, value] : f) {
    CHECK(value > 1.0);
    CHECK(value < 2.0);
    excess += value - 1.0;
  }
  CHECK(std::abs(excess - 1.0) <= 1e-12);
}

TEST_CASE("weights never drop below one and grow with sensitivity") {
  const std::map<AgentId, double> lo{{"a", 1.0}, {"b", 2.0}};
  const std::map<AgentId, double> hi{{"a", 1.5}, {"b", 2.0}};
  for (const WeightingScheme& scheme :
       {WeightingScheme::normalization(), WeightingScheme::softmax(),
        WeightingScheme::gt_excess({{"a", 0.5}, {"b", 0.5}})}) {
    const auto f_lo = scheme_weights(lo, scheme);
    const auto f_hi = scheme_weights(hi, scheme);
    for (const auto& [id, value] : f_lo) {
      CHECK(value >= 1.0);
    }
    CHECK(f_hi.at("a") > f_lo.at("a"));
  }
}

TEST_CASE("planning informed wrap fixtures") {
  CHECK(std::abs(pi_wrap({{"a", 1.0}, {"b", 1.0}}, {{"a", 3.0}, {"b", 1.0}},
                         WeightingScheme::normalization()) -
                 1.5) <= 1e-12);
  CHECK(std::abs(pi_wrap({{"a", 0.075}}, {{"a", 0.90}},
                         WeightingScheme::gt_excess({{"a", 0.57}})) -
                 0.09975) <= 1e-12);
}

TEST_CASE("wrap reduces to the plain mean when no agent stands out") {
  const std::map<AgentId, double> metric{{"a", 0.4}, {"b", 1.1}, {"c", 0.7}};
  const double plain = (0.4 + 1.1 + 0.7) / 3.0;

  const std::map<AgentId, double> zero{{"a", 0.0}, {"b", 0.0}, {"c", 0.0}};
  CHECK(pi_wrap(metric, zero, WeightingScheme::normalization()) == plain);

  const std::map<AgentId, double> g{{"a", 0.2}, {"b", 0.5}, {"c", 0.3}};
  CHECK(std::abs(pi_wrap(metric, g, WeightingScheme::gt_excess({{"a", 0.2}, {"b", 0.5}, {"c", 0.3}})) -
                 plain) <= 1e-15);
}

TEST_CASE("wrap penalizes the planning relevant agent") {
  const std::map<AgentId, double> metric{{"a", 1.0}, {"b", 1.0}};
  const std::map<AgentId, double> gt{{"a", 0.1}, {"b", 0.1}};
  const double skew_a =
      pi_wrap(metric, {{"a", 0.8}, {"b", 0.1}}, WeightingScheme::gt_excess(gt));
  const double skew_b =
      pi_wrap(metric, {{"a", 0.1}, {"b", 0.8}}, WeightingScheme::gt_excess(gt));
  const double balanced =
      pi_wrap(metric, {{"a", 0.1}, {"b", 0.1}}, WeightingScheme::gt_excess(gt));
  CHECK(skew_a == skew_b);
  CHECK(skew_a > balanced);
  CHECK(balanced == 1.0);
}

TEST_CASE("wrap rejects mismatched key sets") {
  CHECK_THROWS_AS(pi_wrap({{"a", 1.0}}, {{"b", 1.0}}, WeightingScheme::normalization()),
                  KeyMismatchError);
  CHECK_THROWS_AS(pi_wrap({{"a", 1.0}, {"b", 2.0}}, {{"a", 1.0}},
                          WeightingScheme::normalization()),
                  KeyMismatchError);
  CHECK_THROWS_AS(scheme_weights({{"a", 1.0}}, WeightingScheme::gt_excess({{"b", 0.5}})),
                  KeyMismatchError);
  CHECK_THROWS_AS(pi_wrap({}, {}, WeightingScheme::softmax()), EmptyInputError);
}
