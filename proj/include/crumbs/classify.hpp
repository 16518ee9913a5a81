#pragma once

// One-vs-all trait prediction per timeframe: sparse logistic regression fit
// by proximal gradient, cross-validated regularisation strength, repeated
// stratified hold-out evaluation and coefficient extraction.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crumbs/featurize.hpp"
#include "crumbs/trace_model.hpp"

namespace crumbs {

enum class Penalty : std::uint8_t { L1, L2 };

// How cross-validation picks lambda from the grid.
//  BestMean: largest lambda whose mean validation AUC equals the best one.
//  OneStandardError: largest lambda within one standard error of the best.
enum class LambdaRule : std::uint8_t { BestMean, OneStandardError };

std::string_view to_string(Penalty p) noexcept;
std::string_view to_string(LambdaRule r) noexcept;

struct TrainSpec {
  std::vector<double> lambda_grid;  // explicit grid; empty derives one per training set
  int grid_size = 30;
  double grid_decades = 4.0;
  int cv_folds = 5;
  int max_iters = 5000;
  double tolerance = 1e-9;  // relative objective decrease
  int n_repeats = 10;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 1;
  Penalty penalty = Penalty::L1;
  LambdaRule rule = LambdaRule::BestMean;
  unsigned threads = 1;

  void validate() const;
  // Stable digest of every field that influences results (threads excluded).
  std::string hash() const;
};

// Per-column centring and scaling learned on a training split. Columns with
// zero variance get scale 0 and are mapped to 0.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardization fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  bool constant(Eigen::Index column) const { return scale(column) == 0.0; }
};

struct FittedModel {
  std::vector<std::string> columns;
  Eigen::VectorXd weights;  // standardized-feature units
  double intercept = 0.0;
  double lambda = 0.0;
  Penalty penalty = Penalty::L1;
  Standardization standardization;
  bool converged = true;
  int iterations = 0;
  std::vector<double> objective_trace;  // objective after each accepted iteration

  // Linear scores (log-odds) for raw, unstandardized rows.
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& raw) const;
  std::size_t nonzero() const;
};

struct BinaryLabels {
  std::vector<int> y;
  bool degenerate = false;  // one class absent
  std::vector<std::string> warnings;
};

// 1 where class_value == target. Throws UnknownClass when the target is not
// in the trait vocabulary.
BinaryLabels binarize(std::span<const std::string> class_values, Trait trait, std::string_view target);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per class, round(train_fraction * class size) members go to training.
// Both index lists are sorted. Throws DegeneratePrior when a class has fewer
// than two members.
Split stratified_split(std::span<const int> y, double train_fraction, std::uint64_t seed);

// Fold assignment (0..folds-1) preserving class proportions.
std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed);

// --- objective pieces, on standardized data -------------------------------

// (1/n) sum log(1 + exp(z_i)) - y_i z_i with z = b + Xw.
double logistic_loss(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b);
// Gradient of logistic_loss; returns d/dw, writes d/db.
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w,
                                  double b, double& grad_intercept);
double penalized_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                           double lambda, Penalty penalty = Penalty::L1);

// max_j |(1/n) x_j^T (y - ybar)|: the smallest lambda at which every L1
// weight is zero.
double null_gradient_bound(const Eigen::MatrixXd& standardized_x, std::span<const int> y);
// `size` values log-spaced from lambda_max down by `decades` decades.
std::vector<double> lambda_grid(double lambda_max, int size, double decades);

struct WarmStart {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

// Minimises the penalized objective on already standardized data with a
// monotone accelerated proximal-gradient method (soft-thresholding for L1).
FittedModel fit_standardized(const Eigen::MatrixXd& standardized_x, std::span<const int> y, double lambda,
                             const TrainSpec& spec, const WarmStart* warm = nullptr,
                             double lipschitz_hint = 0.0);

// Standardizes x with its own statistics, then fits.
FittedModel fit_l1_logreg(const Eigen::MatrixXd& x, std::span<const int> y, double lambda, const TrainSpec& spec,
                          const std::vector<std::string>* columns = nullptr);

struct CvResult {
  std::vector<double> grid;      // descending
  std::vector<double> mean_auc;  // per grid value
  std::vector<double> se_auc;
  std::size_t chosen_index = 0;
  double chosen_lambda = 0.0;
};

CvResult cross_validate_lambda(const Eigen::MatrixXd& x, std::span<const int> y, const TrainSpec& spec,
                               std::uint64_t seed);

// Cross-validates on the training rows, refits at the chosen lambda.
FittedModel train_model(const Eigen::MatrixXd& x, std::span<const int> y, const TrainSpec& spec, std::uint64_t seed,
                        const std::vector<std::string>* columns = nullptr);

// --- repeated evaluation ----------------------------------------------------

struct FrameEval {
  int horizon = 0;
  bool present = false;
  std::string absent_reason;
  double mean_auc = 0.0, std_auc = 0.0, mean_epr = 0.0, std_epr = 0.0;
  std::size_t n_train = 0, n_test = 0;
  double prior = 0.0;  // fraction of positives among labeled users
  std::vector<double> aucs, eprs, lambdas;  // per repeat
};

struct EvalSeries {
  Trait trait = Trait::Gender;
  std::string target_class;
  int n_repeats = 0;
  std::string spec_hash;
  std::vector<FrameEval> frames;
  std::vector<std::string> warnings;

  const FrameEval* at_horizon(int horizon) const;
};

// Evaluates one horizon: n_repeats stratified splits with seeds derived from
// (spec.seed, horizon, repeat).
FrameEval evaluate_frame(const TemporalDataset& dataset, Trait trait, std::string_view target_class,
                         const TrainSpec& spec);

EvalSeries repeated_eval(const std::vector<TemporalDataset>& series, Trait trait, std::string_view target_class,
                         const TrainSpec& spec);

// Labels of `rows` for `trait` as a 0/1 vector.
std::vector<int> binary_targets(const TemporalDataset& dataset, std::span<const std::size_t> rows, Trait trait,
                                std::string_view target_class);
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows);

// One model per horizon trained on every labeled user (lambda by CV);
// nullopt where the horizon is degenerate.
std::vector<std::optional<FittedModel>> fit_frame_models(const std::vector<TemporalDataset>& series, Trait trait,
                                                         std::string_view target_class, const TrainSpec& spec);

// --- coefficients -----------------------------------------------------------

struct CoefficientCell {
  double weight = 0.0;
  bool present = false;  // false: column missing from the model or constant in training
};

struct CoefficientTable {
  std::vector<int> horizons;
  std::vector<std::string> features;
  std::vector<std::vector<CoefficientCell>> cells;  // [frame][feature]
};

// `names` are column names (CONTENT_2) or category names (CONTENT), the
// latter expanding to every frame's column. Throws UnknownFeature for names
// that match neither.
CoefficientTable coefficient_trajectories(std::span<const std::optional<FittedModel>> models,
                                          std::span<const int> horizons, const std::vector<std::string>& names);

// --- exports ----------------------------------------------------------------

void write_eval_series(std::ostream& out, const EvalSeries& series);
void write_coefficient_table(std::ostream& out, const CoefficientTable& table);

struct ModelMetadata {
  std::string trait;
  std::string target_class;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::string spec_hash;
};

// Text dump: `# key=value` metadata lines, then `feature,weight` rows
// (first row is the intercept).
void write_model(std::ostream& out, const FittedModel& model, const ModelMetadata& meta);
struct ModelDump {
  ModelMetadata meta;
  double lambda = 0.0;
  double intercept = 0.0;
  std::vector<std::pair<std::string, double>> weights;
};
ModelDump read_model(std::istream& in);

}  // namespace crumbs
