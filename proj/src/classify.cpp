#include "crumbs/classify.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "crumbs/delimited.hpp"
#include "crumbs/digest.hpp"
#include "crumbs/error.hpp"
#include "crumbs/metrics.hpp"
#include "crumbs/parallel.hpp"

namespace crumbs {

std::string_view to_string(Penalty p) noexcept { return p == Penalty::L1 ? "l1" : "l2"; }
std::string_view to_string(LambdaRule r) noexcept {
  return r == LambdaRule::BestMean ? "best-mean" : "one-se";
}

void TrainSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::ConfigError, what); };
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail("lambda grid values must be finite and nonnegative");
  }
  if (grid_size < 1) fail("grid_size must be positive");
  if (!(grid_decades >= 0.0)) fail("grid_decades must be nonnegative");
  if (cv_folds < 2) fail("cv_folds must be at least 2");
  if (max_iters < 1) fail("max_iters must be positive");
  if (!(tolerance > 0.0)) fail("tolerance must be positive");
  if (n_repeats < 1) fail("n_repeats must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0, 1)");
}

std::string TrainSpec::hash() const {
  std::ostringstream s;
  s << "grid=";
  for (double l : lambda_grid) s << format_double(l) << ';';
  s << "|size=" << grid_size << "|decades=" << format_double(grid_decades) << "|folds=" << cv_folds
    << "|iters=" << max_iters << "|tol=" << format_double(tolerance) << "|repeats=" << n_repeats
    << "|fraction=" << format_double(train_fraction) << "|seed=" << seed << "|penalty=" << to_string(penalty)
    << "|rule=" << to_string(rule);
  return digest_hex(s.str());
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

Standardization Standardization::fit(const Eigen::MatrixXd& x) {
  Standardization s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / std::max(1.0, n);
    s.scale(j) = var > 1e-24 ? std::sqrt(var) : 0.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (scale(j) == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    }
  }
  return out;
}

Eigen::VectorXd FittedModel::decision_function(const Eigen::MatrixXd& raw) const {
  return (standardization.apply(raw) * weights).array() + intercept;
}

std::size_t FittedModel::nonzero() const {
  return static_cast<std::size_t>((weights.array() != 0.0).count());
}

// ---------------------------------------------------------------------------
// Labels and splits
// ---------------------------------------------------------------------------

BinaryLabels binarize(std::span<const std::string> class_values, Trait trait, std::string_view target) {
  auto normalized = normalize_class_value(trait, target);
  if (!normalized) {
    throw Error(ErrorKind::UnknownClass,
                "'" + std::string(target) + "' is not a " + std::string(to_string(trait)) + " class");
  }
  BinaryLabels out;
  out.y.reserve(class_values.size());
  std::size_t pos = 0;
  for (const auto& v : class_values) {
    const int label = v == *normalized ? 1 : 0;
    pos += static_cast<std::size_t>(label);
    out.y.push_back(label);
  }
  if (pos == 0 || pos == class_values.size()) {
    out.degenerate = true;
    out.warnings.push_back("DegeneratePrior: target '" + *normalized + "' has " +
                           (pos == 0 ? std::string("no members") : std::string("every member")));
  }
  return out;
}

namespace {

std::array<std::vector<std::size_t>, 2> members_by_class(std::span<const int> y) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < y.size(); ++i) out[y[i] == 1 ? 1 : 0].push_back(i);
  return out;
}

}  // namespace

Split stratified_split(std::span<const int> y, double train_fraction, std::uint64_t seed) {
  auto members = members_by_class(y);
  for (int c = 0; c < 2; ++c) {
    if (members[c].size() < 2) {
      throw Error(ErrorKind::DegeneratePrior, "class " + std::to_string(c) + " has fewer than two members");
    }
  }
  std::mt19937_64 rng(seed);
  Split split;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, m.size() - 1);
    split.train.insert(split.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train), m.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed) {
  auto members = members_by_class(y);
  std::mt19937_64 rng(seed);
  std::vector<int> assignment(y.size(), 0);
  int offset = 0;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    for (std::size_t i = 0; i < m.size(); ++i) {
      assignment[m[i]] = static_cast<int>((i + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(folds));
    }
    offset += static_cast<int>(m.size() % static_cast<std::size_t>(folds));
  }
  return assignment;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double loss_from_linear(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y(i) * z(i);
  return s / static_cast<double>(z.size());
}

Eigen::VectorXd to_double(std::span<const int> y) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i)) = y[i];
  return out;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// 0.25 * largest eigenvalue of [1 X]^T [1 X] / n, by power iteration.
double logistic_lipschitz(const Eigen::MatrixXd& x) {
  const auto n = static_cast<double>(x.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(x.cols());
  double v0 = 1.0;
  double eig = 0.0;
  for (int it = 0; it < 40; ++it) {
    const Eigen::VectorXd av = (x * v).array() + v0;  // A v with A = [1 X]
    Eigen::VectorXd next = x.transpose() * av;
    const double next0 = av.sum();
    const double norm = std::sqrt(next.squaredNorm() + next0 * next0);
    if (norm == 0.0) break;
    const double prev = eig;
    eig = norm / std::sqrt(v.squaredNorm() + v0 * v0);
    v = next / norm;
    v0 = next0 / norm;
    if (it > 5 && std::abs(eig - prev) <= 1e-6 * eig) break;
  }
  return 0.25 * std::max(eig, 1.0) * 1.02 / std::max(1.0, n);
}

}  // namespace

double logistic_loss(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b) {
  const Eigen::VectorXd z = (x * w).array() + b;
  return loss_from_linear(z, to_double(y));
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w,
                                  double b, double& grad_intercept) {
  const Eigen::VectorXd z = (x * w).array() + b;
  Eigen::VectorXd r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y[static_cast<std::size_t>(i)];
  const double n = static_cast<double>(z.size());
  grad_intercept = r.sum() / n;
  return x.transpose() * r / n;
}

double penalized_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                           double lambda, Penalty penalty) {
  const double reg = penalty == Penalty::L1 ? lambda * w.lpNorm<1>() : 0.5 * lambda * w.squaredNorm();
  return logistic_loss(x, y, w, b) + reg;
}

double null_gradient_bound(const Eigen::MatrixXd& standardized_x, std::span<const int> y) {
  const Eigen::VectorXd yd = to_double(y);
  const Eigen::VectorXd centered = yd.array() - yd.mean();
  const Eigen::VectorXd g = standardized_x.transpose() * centered / static_cast<double>(yd.size());
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

std::vector<double> lambda_grid(double lambda_max, int size, double decades) {
  if (!(lambda_max > 0.0)) lambda_max = 1e-8;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) {
    const double frac = size == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(size - 1);
    grid.push_back(lambda_max * std::pow(10.0, -decades * frac));
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

FittedModel fit_standardized(const Eigen::MatrixXd& xs, std::span<const int> y, double lambda,
                             const TrainSpec& spec, const WarmStart* warm, double lipschitz_hint) {
  const Eigen::Index p = xs.cols();
  const auto n = static_cast<double>(xs.rows());
  if (xs.rows() == 0 || static_cast<std::size_t>(xs.rows()) != y.size()) {
    throw Error(ErrorKind::SchemaError, "design matrix and labels disagree in length");
  }
  const Eigen::VectorXd yd = to_double(y);
  const bool l1 = spec.penalty == Penalty::L1;

  // Constant (all-zero after standardization) columns never move.
  std::vector<bool> frozen(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) frozen[static_cast<std::size_t>(j)] = xs.col(j).squaredNorm() == 0.0;

  auto smooth = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
    double f = loss_from_linear(z, yd);
    if (!l1) f += 0.5 * lambda * w.squaredNorm();
    return f;
  };
  auto full = [&](double f, const Eigen::VectorXd& w) { return l1 ? f + lambda * w.lpNorm<1>() : f; };

  FittedModel model;
  model.lambda = lambda;
  model.penalty = spec.penalty;

  Eigen::VectorXd wx = Eigen::VectorXd::Zero(p);
  const double ybar = std::clamp(yd.mean(), 1e-12, 1.0 - 1e-12);
  double bx = std::log(ybar / (1.0 - ybar));
  // Zero weights with the prior intercept satisfy the optimality conditions.
  if (l1 && lambda >= null_gradient_bound(xs, y)) {
    model.weights = wx;
    model.intercept = bx;
    model.converged = true;
    model.objective_trace.push_back(full(smooth((xs * wx).array() + bx, wx), wx));
    return model;
  }
  if (warm && warm->weights.size() == p) {
    wx = warm->weights;
    bx = warm->intercept;
  }
  Eigen::VectorXd zx = (xs * wx).array() + bx;
  double fx_smooth = smooth(zx, wx);
  double Fx = full(fx_smooth, wx);

  double L = lipschitz_hint > 0.0 ? lipschitz_hint : logistic_lipschitz(xs);
  if (!l1) L += lambda;

  Eigen::VectorXd wx_prev = wx, zx_prev = zx;
  double bx_prev = bx;
  Eigen::VectorXd wy = wx, zy = zx;
  double by = bx;
  double t = 1.0;

  Eigen::VectorXd r(xs.rows()), wz(p), zz(xs.rows());
  model.objective_trace.push_back(Fx);
  model.converged = false;
  int it = 0;
  for (; it < spec.max_iters; ++it) {
    for (Eigen::Index i = 0; i < zy.size(); ++i) r(i) = sigmoid(zy(i)) - yd(i);
    Eigen::VectorXd gw = xs.transpose() * r / n;
    if (!l1) gw += lambda * wy;
    const double gb = r.sum() / n;
    const double fy = smooth(zy, wy);

    double bz = 0.0, fz = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (frozen[static_cast<std::size_t>(j)]) {
          wz(j) = 0.0;
        } else {
          const double step = wy(j) - gw(j) / L;
          wz(j) = l1 ? soft_threshold(step, lambda / L) : step;
        }
      }
      bz = by - gb / L;
      zz.noalias() = xs * wz;
      zz.array() += bz;
      fz = smooth(zz, wz);
      const double dw_sq = (wz - wy).squaredNorm() + (bz - by) * (bz - by);
      const double model_bound = fy + gw.dot(wz - wy) + gb * (bz - by) + 0.5 * L * dw_sq;
      if (fz <= model_bound + 1e-13 * std::max(1.0, std::abs(fy))) break;
      L *= 2.0;
    }
    const double Fz = full(fz, wz);
    const double step_size = std::max((wz - wy).cwiseAbs().maxCoeff(), std::abs(bz - by));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));

    wx_prev = wx;
    bx_prev = bx;
    zx_prev = zx;
    bool accepted = false;
    double decrease = 0.0;
    if (Fz <= Fx) {
      decrease = Fx - Fz;
      wx = wz;
      bx = bz;
      zx = zz;
      Fx = Fz;
      accepted = true;
      model.objective_trace.push_back(Fx);
    }
    if (accepted && decrease <= spec.tolerance * std::max(1.0, std::abs(Fx))) {
      model.converged = true;
      ++it;
      break;
    }
    if (step_size <= 1e-14) {
      model.converged = true;
      ++it;
      break;
    }
    if (!accepted) {
      // Momentum overshot: restart from the incumbent.
      t = 1.0;
      wy = wx;
      by = bx;
      zy = zx;
      continue;
    }
    const double a = t / t_next;
    const double c = (t - 1.0) / t_next;
    wy = wx + a * (wz - wx) + c * (wx - wx_prev);
    by = bx + a * (bz - bx) + c * (bx - bx_prev);
    zy = zx + a * (zz - zx) + c * (zx - zx_prev);
    t = t_next;
  }
  model.iterations = it;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (frozen[static_cast<std::size_t>(j)]) wx(j) = 0.0;
  }
  model.weights = wx;
  model.intercept = bx;
  return model;
}

FittedModel fit_l1_logreg(const Eigen::MatrixXd& x, std::span<const int> y, double lambda, const TrainSpec& spec,
                          const std::vector<std::string>* columns) {
  const auto st = Standardization::fit(x);
  FittedModel m = fit_standardized(st.apply(x), y, lambda, spec);
  m.standardization = st;
  if (columns) m.columns = *columns;
  return m;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

namespace {

std::vector<int> pick(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

bool both_classes(std::span<const int> y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  return pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
}

std::vector<double> derive_grid(const Eigen::MatrixXd& x, std::span<const int> y, const TrainSpec& spec) {
  std::vector<double> grid = spec.lambda_grid;
  if (grid.empty()) {
    const auto st = Standardization::fit(x);
    grid = lambda_grid(null_gradient_bound(st.apply(x), y), spec.grid_size, spec.grid_decades);
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  return grid;
}

}  // namespace

CvResult cross_validate_lambda(const Eigen::MatrixXd& x, std::span<const int> y, const TrainSpec& spec,
                               std::uint64_t seed) {
  CvResult cv;
  cv.grid = derive_grid(x, y, spec);
  const std::size_t g = cv.grid.size();
  cv.mean_auc.assign(g, std::nan(""));
  cv.se_auc.assign(g, 0.0);
  if (g == 1) {
    cv.chosen_index = 0;
    cv.chosen_lambda = cv.grid[0];
    return cv;
  }
  const auto pos = static_cast<int>(std::count(y.begin(), y.end(), 1));
  const int minority = std::min(pos, static_cast<int>(y.size()) - pos);
  const int folds = std::min(spec.cv_folds, minority);
  if (folds < 2) {
    // Too few members to validate anything: fall back to the sparsest model.
    cv.chosen_index = 0;
    cv.chosen_lambda = cv.grid[0];
    return cv;
  }
  const auto assignment = stratified_folds(y, folds, seed);
  std::vector<std::vector<double>> per_fold(g);
  for (int k = 0; k < folds; ++k) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < y.size(); ++i) (assignment[i] == k ? va : tr).push_back(i);
    const auto ytr = pick(y, tr);
    const auto yva = pick(y, va);
    if (!both_classes(ytr) || !both_classes(yva)) continue;
    const Eigen::MatrixXd xtr_raw = select_rows(x, tr);
    const auto st = Standardization::fit(xtr_raw);
    const Eigen::MatrixXd xtr = st.apply(xtr_raw);
    const Eigen::MatrixXd xva = st.apply(select_rows(x, va));
    const double lip = logistic_lipschitz(xtr);
    WarmStart warm;
    for (std::size_t j = 0; j < g; ++j) {
      FittedModel m = fit_standardized(xtr, ytr, cv.grid[j], spec, j ? &warm : nullptr, lip);
      warm.weights = m.weights;
      warm.intercept = m.intercept;
      const Eigen::VectorXd scores = (xva * m.weights).array() + m.intercept;
      per_fold[j].push_back(auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), yva));
    }
  }
  std::size_t best = 0;
  double best_auc = -1.0;
  for (std::size_t j = 0; j < g; ++j) {
    if (per_fold[j].empty()) continue;
    cv.mean_auc[j] = mean(per_fold[j]);
    cv.se_auc[j] = stddev(per_fold[j]) / std::sqrt(static_cast<double>(per_fold[j].size()));
    // Strict improvement only: ties stay with the larger lambda.
    if (cv.mean_auc[j] > best_auc + 1e-12) {
      best_auc = cv.mean_auc[j];
      best = j;
    }
  }
  if (best_auc < 0.0) {
    cv.chosen_index = 0;
  } else if (spec.rule == LambdaRule::OneStandardError) {
    const double floor = best_auc - cv.se_auc[best];
    std::size_t j = 0;
    while (j < best && !(cv.mean_auc[j] >= floor)) ++j;
    cv.chosen_index = j;
  } else {
    cv.chosen_index = best;
  }
  cv.chosen_lambda = cv.grid[cv.chosen_index];
  return cv;
}

FittedModel train_model(const Eigen::MatrixXd& x, std::span<const int> y, const TrainSpec& spec, std::uint64_t seed,
                        const std::vector<std::string>* columns) {
  const CvResult cv = cross_validate_lambda(x, y, spec, seed);
  const auto st = Standardization::fit(x);
  const Eigen::MatrixXd xs = st.apply(x);
  const double lip = logistic_lipschitz(xs);
  // Follow the path down to the chosen value; warm starts keep this cheap.
  WarmStart warm;
  FittedModel m;
  for (std::size_t j = 0; j <= cv.chosen_index; ++j) {
    m = fit_standardized(xs, y, cv.grid[j], spec, j ? &warm : nullptr, lip);
    warm.weights = m.weights;
    warm.intercept = m.intercept;
  }
  m.standardization = st;
  if (columns) m.columns = *columns;
  return m;
}

// ---------------------------------------------------------------------------
// Repeated evaluation
// ---------------------------------------------------------------------------

const FrameEval* EvalSeries::at_horizon(int horizon) const {
  for (const auto& f : frames) {
    if (f.horizon == horizon) return &f;
  }
  return nullptr;
}

std::vector<int> binary_targets(const TemporalDataset& dataset, std::span<const std::size_t> rows, Trait trait,
                                std::string_view target_class) {
  std::vector<std::string> values;
  values.reserve(rows.size());
  for (auto r : rows) values.push_back(dataset.labels[r].at(trait));
  return binarize(values, trait, target_class).y;
}

FrameEval evaluate_frame(const TemporalDataset& dataset, Trait trait, std::string_view target_class,
                         const TrainSpec& spec) {
  spec.validate();
  FrameEval fe;
  fe.horizon = dataset.horizon;
  const auto rows = dataset.labeled_rows(trait);
  if (rows.empty()) {
    fe.absent_reason = "EmptyDataset: no labeled users";
    return fe;
  }
  const std::vector<int> y = binary_targets(dataset, rows, trait, target_class);
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  fe.prior = static_cast<double>(pos) / static_cast<double>(y.size());
  if (pos < 2 || y.size() - pos < 2) {
    fe.absent_reason = "DegeneratePrior: fewer than two members in a class";
    return fe;
  }
  const Eigen::MatrixXd x = select_rows(dataset.features, rows);

  const auto repeats = static_cast<std::size_t>(spec.n_repeats);
  fe.aucs.assign(repeats, 0.0);
  fe.eprs.assign(repeats, 0.0);
  fe.lambdas.assign(repeats, 0.0);
  parallel_for(repeats, spec.threads, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(dataset.horizon), r);
    const Split split = stratified_split(y, spec.train_fraction, seed);
    const auto ytr = pick(y, split.train);
    const auto yte = pick(y, split.test);
    const FittedModel m = train_model(select_rows(x, split.train), ytr, spec, derive_seed(seed, 0xC5));
    const Eigen::VectorXd scores = m.decision_function(select_rows(x, split.test));
    const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
    fe.aucs[r] = auc(s, yte);
    fe.eprs[r] = epr(s, yte).value;
    fe.lambdas[r] = m.lambda;
  });
  const Split first = stratified_split(y, spec.train_fraction, derive_seed(spec.seed, static_cast<std::uint64_t>(dataset.horizon), 0));
  fe.n_train = first.train.size();
  fe.n_test = first.test.size();
  fe.mean_auc = mean(fe.aucs);
  fe.std_auc = stddev(fe.aucs);
  fe.mean_epr = mean(fe.eprs);
  fe.std_epr = stddev(fe.eprs);
  fe.present = true;
  return fe;
}

EvalSeries repeated_eval(const std::vector<TemporalDataset>& series, Trait trait, std::string_view target_class,
                         const TrainSpec& spec) {
  spec.validate();
  EvalSeries out;
  out.trait = trait;
  out.target_class = normalize_class_value(trait, target_class).value_or(std::string(target_class));
  out.n_repeats = spec.n_repeats;
  out.spec_hash = spec.hash();
  for (const auto& ds : series) {
    out.frames.push_back(evaluate_frame(ds, trait, target_class, spec));
    if (!out.frames.back().present) {
      out.warnings.push_back("horizon " + std::to_string(ds.horizon) + " absent: " + out.frames.back().absent_reason);
    }
  }
  return out;
}

std::vector<std::optional<FittedModel>> fit_frame_models(const std::vector<TemporalDataset>& series, Trait trait,
                                                         std::string_view target_class, const TrainSpec& spec) {
  std::vector<std::optional<FittedModel>> models(series.size());
  parallel_for(series.size(), spec.threads, [&](std::size_t i) {
    const auto& ds = series[i];
    const auto rows = ds.labeled_rows(trait);
    if (rows.empty()) return;
    const auto y = binary_targets(ds, rows, trait, target_class);
    if (!both_classes(y)) return;
    models[i] = train_model(select_rows(ds.features, rows), y, spec,
                            derive_seed(spec.seed, static_cast<std::uint64_t>(ds.horizon), 0xF17), &ds.columns);
  });
  return models;
}

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

namespace {

bool is_category_name(std::string_view name) {
  if (name.rfind("p_", 0) == 0) name.remove_prefix(2);
  return parse_basic_category(name).has_value() || parse_theme(name).has_value();
}

}  // namespace

CoefficientTable coefficient_trajectories(std::span<const std::optional<FittedModel>> models,
                                          std::span<const int> horizons, const std::vector<std::string>& names) {
  if (models.size() != horizons.size()) throw Error(ErrorKind::SchemaError, "models and horizons differ in length");
  CoefficientTable table;
  table.horizons.assign(horizons.begin(), horizons.end());
  const int max_h = horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());

  auto column_known = [&](const std::string& col) {
    for (const auto& m : models) {
      if (m && std::find(m->columns.begin(), m->columns.end(), col) != m->columns.end()) return true;
    }
    return false;
  };
  for (const auto& name : names) {
    if (column_known(name)) {
      table.features.push_back(name);
    } else if (is_category_name(name)) {
      for (int f = 1; f <= max_h; ++f) table.features.push_back(name + "_" + std::to_string(f));
    } else {
      // Column-shaped names of a known category for a frame no model covers.
      const auto us = name.rfind('_');
      if (us != std::string::npos && is_category_name(name.substr(0, us)) && parse_int(name.substr(us + 1))) {
        table.features.push_back(name);
      } else {
        throw Error(ErrorKind::UnknownFeature, "'" + name + "' is neither a feature column nor a category");
      }
    }
  }
  for (const auto& m : models) {
    std::vector<CoefficientCell> row(table.features.size());
    if (m) {
      for (std::size_t j = 0; j < table.features.size(); ++j) {
        auto it = std::find(m->columns.begin(), m->columns.end(), table.features[j]);
        if (it == m->columns.end()) continue;
        const auto col = static_cast<Eigen::Index>(it - m->columns.begin());
        if (m->standardization.scale.size() > col && m->standardization.constant(col)) continue;
        row[j] = {m->weights(col), true};
      }
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

void write_eval_series(std::ostream& out, const EvalSeries& series) {
  DelimitedWriter w(out);
  w.row({"frame", "mean_auc", "std_auc", "mean_epr", "std_epr", "n_train", "n_test", "prior"});
  for (const auto& f : series.frames) {
    if (!f.present) {
      w.row({std::to_string(f.horizon), "nan", "nan", "nan", "nan", "0", "0", format_double(f.prior)});
      continue;
    }
    w.row({std::to_string(f.horizon), format_double(f.mean_auc), format_double(f.std_auc), format_double(f.mean_epr),
           format_double(f.std_epr), std::to_string(f.n_train), std::to_string(f.n_test), format_double(f.prior)});
  }
}

void write_coefficient_table(std::ostream& out, const CoefficientTable& table) {
  DelimitedWriter w(out);
  w.row({"frame", "feature", "weight", "present"});
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    for (std::size_t j = 0; j < table.features.size(); ++j) {
      const auto& c = table.cells[i][j];
      w.row({std::to_string(table.horizons[i]), table.features[j], format_double(c.weight), c.present ? "1" : "0"});
    }
  }
}

void write_model(std::ostream& out, const FittedModel& model, const ModelMetadata& meta) {
  out << "# crumbs-model v1\n";
  out << "# trait=" << meta.trait << "\n";
  out << "# class=" << meta.target_class << "\n";
  out << "# horizon=" << meta.horizon << "\n";
  out << "# penalty=" << to_string(model.penalty) << "\n";
  out << "# lambda=" << format_double(model.lambda) << "\n";
  out << "# seed=" << meta.seed << "\n";
  out << "# spec_hash=" << meta.spec_hash << "\n";
  out << "# converged=" << (model.converged ? 1 : 0) << "\n";
  DelimitedWriter w(out);
  w.row({"feature", "weight"});
  w.row({"(intercept)", format_double(model.intercept)});
  for (Eigen::Index j = 0; j < model.weights.size(); ++j) {
    const std::string name = static_cast<std::size_t>(j) < model.columns.size() ? model.columns[static_cast<std::size_t>(j)]
                                                                                 : "x" + std::to_string(j);
    w.row({name, format_double(model.weights(j))});
  }
}

ModelDump read_model(std::istream& in) {
  ModelDump dump;
  std::string line;
  std::ostringstream body;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "trait") dump.meta.trait = value;
      else if (key == "class") dump.meta.target_class = value;
      else if (key == "horizon") dump.meta.horizon = static_cast<int>(parse_int(value).value_or(0));
      else if (key == "lambda") dump.lambda = parse_double(value).value_or(0.0);
      else if (key == "seed") dump.meta.seed = static_cast<std::uint64_t>(std::stoull(value));
      else if (key == "spec_hash") dump.meta.spec_hash = value;
      continue;
    }
    header_seen = true;
    body << line << '\n';
  }
  if (!header_seen) throw Error(ErrorKind::SchemaError, "model dump has no weight table");
  std::istringstream table(body.str());
  DelimitedReader reader(table);
  reader.expect_columns({"feature", "weight"});
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) throw RowError(reader.line(), "expected 2 fields");
    const auto v = parse_double(f[1]);
    if (!v) throw RowError(reader.line(), "bad weight '" + f[1] + "'");
    if (f[0] == "(intercept)") {
      dump.intercept = *v;
    } else {
      dump.weights.emplace_back(f[0], *v);
    }
  }
  return dump;
}

}  // namespace crumbs
