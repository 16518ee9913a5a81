#include "crumbs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "crumbs/error.hpp"

namespace crumbs {

namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels, std::size_t& pos, std::size_t& neg) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::SchemaError, "scores and labels differ in length");
  pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::DegeneratePrior, "both classes must be present");
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

EprResult epr(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  const auto order = order_by_score_desc(scores);
  const double total_pos = static_cast<double>(pos);

  // One PR point per distinct threshold, high to low.
  std::vector<std::pair<double, double>> points;
  std::size_t tp = 0, predicted = 0, i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += static_cast<std::size_t>(labels[order[i]] == 1);
      ++predicted;
      ++i;
    }
    if (tp == 0) continue;  // P = R = 0 is not a crossing
    points.emplace_back(static_cast<double>(tp) / static_cast<double>(predicted), static_cast<double>(tp) / total_pos);
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto [p, r] = points[k];
    const double gap = p - r;
    if (gap == 0.0) return {p, true};
    if (k == 0) continue;
    const auto [pp, pr] = points[k - 1];
    const double prev_gap = pp - pr;
    if ((prev_gap > 0.0) != (gap > 0.0)) {
      const double alpha = prev_gap / (prev_gap - gap);
      return {pp + alpha * (p - pp), true};
    }
  }
  // No straddling pair: the point closest to the diagonal.
  std::size_t best = 0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (std::abs(points[k].first - points[k].second) < std::abs(points[best].first - points[best].second)) best = k;
  }
  return {points[best].first, false};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nan("");
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

TTestResult paired_t_test_greater(std::span<const double> after, std::span<const double> before) {
  if (after.size() != before.size() || after.size() < 2) {
    throw Error(ErrorKind::ConfigError, "paired t-test needs two equal samples of size >= 2");
  }
  std::vector<double> diff(after.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = after[i] - before[i];
  const double m = mean(diff);
  const double sd = stddev(diff);
  TTestResult r;
  r.dof = static_cast<int>(diff.size()) - 1;
  if (sd == 0.0) {
    r.t = m > 0 ? std::numeric_limits<double>::infinity() : (m < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p_value = m > 0 ? 0.0 : (m < 0 ? 1.0 : 0.5);
    return r;
  }
  r.t = m / (sd / std::sqrt(static_cast<double>(diff.size())));
  const boost::math::students_t dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

}  // namespace crumbs
