#pragma once

// Ranking metrics and the small statistics the evaluation harness reports.

#include <span>
#include <vector>

namespace crumbs {

// Area under the ROC curve as the Mann-Whitney statistic
// P(score_pos > score_neg) + 0.5 P(tie), via midranks. Throws
// DegeneratePrior unless both classes are present. Labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

struct EprResult {
  double value = 0.0;
  bool crossing = true;  // false: no straddling pair, value is the closest PR point
};

// Equal precision-recall point. Thresholds are swept over the distinct
// scores from high to low (predict positive when score >= threshold);
// thresholds admitting no positive are skipped. The first PR point on the
// diagonal is returned as is; otherwise the first adjacent pair on opposite
// sides of it is linearly interpolated. Throws DegeneratePrior unless both
// classes are present.
EprResult epr(std::span<const double> scores, std::span<const int> labels);

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

// One-sided paired t-test of H1: mean(after - before) > 0.
TTestResult paired_t_test_greater(std::span<const double> after, std::span<const double> before);

}  // namespace crumbs
