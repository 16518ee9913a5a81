#include "crumbs/infodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "crumbs/delimited.hpp"
#include "crumbs/error.hpp"
#include "crumbs/parallel.hpp"

namespace crumbs {

std::string_view to_string(BinStrategy s) noexcept {
  return s == BinStrategy::EqualFrequency ? "equal_frequency" : "equal_width";
}

BinStrategy parse_bin_strategy(std::string_view s) {
  if (s == "equal_frequency") return BinStrategy::EqualFrequency;
  if (s == "equal_width") return BinStrategy::EqualWidth;
  throw Error(ErrorKind::ConfigError, "unknown binning strategy '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Quantizer
// ---------------------------------------------------------------------------

Quantizer Quantizer::fit(std::span<const double> values, const QuantizerSpec& spec) {
  if (spec.bins < 2) throw Error(ErrorKind::ConfigError, "quantizer needs at least 2 bins");
  Quantizer q;
  q.spec = spec;
  if (values.empty()) {
    q.degenerate = true;
    return q;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  q.degenerate = *lo_it == *hi_it;
  if (q.degenerate) return q;

  std::vector<double> rest;
  rest.reserve(values.size());
  const bool has_zero = std::find(values.begin(), values.end(), 0.0) != values.end();
  q.zero_reserved = spec.zero_bin && has_zero;
  for (double v : values) {
    if (!q.zero_reserved || v != 0.0) rest.push_back(v);
  }
  const int b = q.zero_reserved ? spec.bins - 1 : spec.bins;
  if (rest.empty() || b < 2) return q;
  std::sort(rest.begin(), rest.end());
  const std::size_t m = rest.size();
  std::vector<double> cuts;
  for (int k = 1; k < b; ++k) {
    double c;
    if (spec.strategy == BinStrategy::EqualFrequency) {
      const auto idx = (static_cast<std::size_t>(k) * m + static_cast<std::size_t>(b) - 1) / static_cast<std::size_t>(b);
      c = rest[std::max<std::size_t>(idx, 1) - 1];
    } else {
      c = rest.front() + (rest.back() - rest.front()) * static_cast<double>(k) / static_cast<double>(b);
    }
    // A cut at the maximum would leave its upper bin empty.
    if (c < rest.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
  }
  q.cuts = std::move(cuts);
  return q;
}

int Quantizer::bin(double v) const {
  if (degenerate) return 0;
  if (zero_reserved && v == 0.0) return 0;
  const auto k = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
  return (zero_reserved ? 1 : 0) + k;
}

int Quantizer::levels() const {
  if (degenerate) return 1;
  return (zero_reserved ? 1 : 0) + static_cast<int>(cuts.size()) + 1;
}

std::vector<int> quantize(std::span<const double> values, const Quantizer& quantizer) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(quantizer.bin(v));
  return out;
}

QuantizeResult quantize(std::span<const double> values, const QuantizerSpec& spec) {
  const Quantizer q = Quantizer::fit(values, spec);
  QuantizeResult r;
  r.bins = quantize(values, q);
  r.degenerate = q.degenerate;
  if (q.degenerate) r.warnings.emplace_back("DegenerateFeature: all values identical");
  return r;
}

// ---------------------------------------------------------------------------
// Joint states
// ---------------------------------------------------------------------------

JointState::JointState(std::size_t n) : ids_(n, 0) {
  if (n) counts_.push_back(static_cast<std::uint32_t>(n));
}

JointState JointState::refine(std::span<const int> x) const {
  if (x.size() != ids_.size()) throw Error(ErrorKind::SchemaError, "variable length differs from the state vector");
  JointState next(0);
  next.ids_.resize(ids_.size());
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  index.reserve(counts_.size() * 2);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const std::uint64_t key = (static_cast<std::uint64_t>(ids_[i]) << 32) | static_cast<std::uint32_t>(x[i]);
    auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(next.counts_.size()));
    if (inserted) next.counts_.push_back(0);
    next.ids_[i] = it->second;
    ++next.counts_[it->second];
  }
  return next;
}

JointState JointState::of(const std::vector<std::vector<int>>& variables, std::size_t n) {
  JointState s(n);
  for (const auto& v : variables) s = s.refine(v);
  return s;
}

namespace {

constexpr double kLn2 = 0.69314718055994530942;

inline double xlog2x(double c) { return c > 0.0 ? c * std::log2(c) : 0.0; }

// Sum over cells of c log2 c, and the number of occupied cells, for the
// contingency table (state, y).
struct CellStats {
  std::vector<double> state_term;  // per state: sum_y n_sy log2 n_sy
  std::vector<std::uint32_t> occupied;
};

CellStats cell_stats(std::span<const int> y, const JointState& given) {
  if (y.size() != given.size()) throw Error(ErrorKind::SchemaError, "label and state vectors differ in length");
  const JointState joint = given.refine(y);
  CellStats st;
  st.state_term.assign(given.states(), 0.0);
  st.occupied.assign(given.states(), 0);
  // Map each joint cell back to its conditioning state, in joint-id order.
  std::vector<std::uint32_t> parent(joint.states(), 0);
  const auto gi = given.ids();
  const auto ji = joint.ids();
  for (std::size_t i = 0; i < ji.size(); ++i) parent[ji[i]] = gi[i];
  const auto jc = joint.counts();
  for (std::size_t c = 0; c < jc.size(); ++c) {
    st.state_term[parent[c]] += xlog2x(jc[c]);
    ++st.occupied[parent[c]];
  }
  return st;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entropies
// ---------------------------------------------------------------------------

double conditional_entropy(std::span<const int> y, const JointState& given, Estimator est) {
  const auto n = static_cast<double>(y.size());
  if (y.empty()) throw Error(ErrorKind::EmptyDataset, "entropy of an empty sample");
  const CellStats st = cell_stats(y, given);
  const auto counts = given.counts();
  double h = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) h += xlog2x(counts[s]) - st.state_term[s];
  h /= n;
  if (est == Estimator::MillerMadow) {
    for (std::size_t s = 0; s < counts.size(); ++s) {
      h += (static_cast<double>(st.occupied[s]) - 1.0) / (2.0 * n * kLn2);
    }
  }
  return std::max(h, 0.0);
}

double entropy(std::span<const int> y, Estimator est) { return conditional_entropy(y, JointState(y.size()), est); }

double conditional_entropy(std::span<const int> y, const std::vector<std::vector<int>>& given, Estimator est) {
  return conditional_entropy(y, JointState::of(given, y.size()), est);
}

double mutual_information(std::span<const int> y, std::span<const int> x, Estimator est) {
  const JointState sx = JointState(y.size()).refine(x);
  return std::max(0.0, entropy(y, est) - conditional_entropy(y, sx, est));
}

double conditional_mutual_information(std::span<const int> y, std::span<const int> x,
                                      const std::vector<std::vector<int>>& given, Estimator est) {
  const JointState z = JointState::of(given, y.size());
  return std::max(0.0, conditional_entropy(y, z, est) - conditional_entropy(y, z.refine(x), est));
}

// ---------------------------------------------------------------------------
// Transfer series
// ---------------------------------------------------------------------------

TransferSeries information_transfer_series(std::span<const int> y, const std::vector<std::vector<int>>& x,
                                           const TransferOptions& options) {
  if (options.window < 0) throw Error(ErrorKind::ConfigError, "window must be nonnegative");
  TransferSeries ts;
  const std::size_t n = y.size();
  ts.h_y = entropy(y, options.estimator);
  JointState history(n);
  double prev = ts.h_y;
  for (std::size_t t = 0; t < x.size(); ++t) {
    TransferPoint p;
    p.frame = static_cast<int>(t) + 1;
    p.n = n;
    p.mi = mutual_information(y, x[t], options.estimator);
    if (options.window == 0) {
      const JointState next = history.refine(x[t]);
      // Refinement can only lower the plug-in estimate; clamping keeps
      // rounding noise from showing up as negative transfer.
      const double h = std::min(prev, conditional_entropy(y, next, options.estimator));
      p.cond_entropy = h;
      p.transfer = prev - h;
      prev = h;
      history = next;
    } else {
      const std::size_t w = static_cast<std::size_t>(options.window);
      const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
      JointState past(n);
      for (std::size_t k = first; k < t; ++k) past = past.refine(x[k]);
      const double before = conditional_entropy(y, past, options.estimator);
      const double after = std::min(before, conditional_entropy(y, past.refine(x[t]), options.estimator));
      p.cond_entropy = after;
      p.transfer = before - after;
    }
    ts.points.push_back(p);
  }
  return ts;
}

std::vector<std::vector<int>> discretize_category(const TemporalDataset& dataset, std::span<const std::size_t> rows,
                                                  const std::string& category, const FeatureDiscretization& disc,
                                                  bool* degenerate) {
  const int horizon = dataset.horizon;
  std::vector<Eigen::Index> count_col(static_cast<std::size_t>(horizon)), flag_col(static_cast<std::size_t>(horizon));
  for (int f = 1; f <= horizon; ++f) {
    const std::string suffix = "_" + std::to_string(f);
    const auto c = dataset.column_index(category + suffix);
    const auto p = dataset.column_index("p_" + category + suffix);
    if (!c || !p) throw Error(ErrorKind::UnknownFeature, "no columns for category '" + category + "'");
    count_col[static_cast<std::size_t>(f - 1)] = static_cast<Eigen::Index>(*c);
    flag_col[static_cast<std::size_t>(f - 1)] = static_cast<Eigen::Index>(*p);
  }
  auto missing = [&](std::size_t r, int f) {
    return dataset.features(static_cast<Eigen::Index>(r), flag_col[static_cast<std::size_t>(f)]) != 0.0;
  };
  std::vector<double> fitted;
  for (int f = 0; f < horizon; ++f) {
    for (auto r : rows) {
      if (!disc.encode_missing || !missing(r, f)) {
        fitted.push_back(dataset.features(static_cast<Eigen::Index>(r), count_col[static_cast<std::size_t>(f)]));
      }
    }
  }
  const Quantizer q = Quantizer::fit(fitted, disc.quantizer);
  if (degenerate) *degenerate = q.degenerate;
  const int missing_symbol = std::max(q.levels(), disc.quantizer.bins);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(horizon));
  for (int f = 0; f < horizon; ++f) {
    auto& col = out[static_cast<std::size_t>(f)];
    col.reserve(rows.size());
    for (auto r : rows) {
      if (disc.encode_missing && missing(r, f)) {
        col.push_back(missing_symbol);
      } else {
        col.push_back(q.bin(dataset.features(static_cast<Eigen::Index>(r), count_col[static_cast<std::size_t>(f)])));
      }
    }
  }
  return out;
}

TransferSeries feature_transfer_series(const TemporalDataset& dataset, std::span<const std::size_t> rows,
                                       std::span<const int> y, const std::string& category,
                                       const FeatureDiscretization& disc, const TransferOptions& options) {
  if (rows.size() != y.size()) throw Error(ErrorKind::SchemaError, "rows and labels differ in length");
  bool degenerate = false;
  const auto x = discretize_category(dataset, rows, category, disc, &degenerate);
  TransferSeries ts = information_transfer_series(y, x, options);
  ts.feature = category;
  ts.degenerate = degenerate;
  return ts;
}

std::vector<RankedFeature> rank_features_by_residual_entropy(const TemporalDataset& dataset,
                                                             std::span<const std::size_t> rows, std::span<const int> y,
                                                             const std::vector<std::string>& categories,
                                                             const FeatureDiscretization& disc,
                                                             const TransferOptions& options, unsigned threads) {
  std::vector<RankedFeature> out(categories.size());
  parallel_for(categories.size(), threads, [&](std::size_t i) {
    const auto x = discretize_category(dataset, rows, categories[i], disc);
    out[i] = {categories[i], conditional_entropy(y, x, options.estimator)};
  });
  std::sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.residual_entropy != b.residual_entropy) return a.residual_entropy < b.residual_entropy;
    return a.feature < b.feature;
  });
  return out;
}

void write_transfer_series(std::ostream& out, std::span<const TransferSeries> series) {
  DelimitedWriter w(out);
  w.row({"feature", "frame", "transfer_bits", "cond_entropy_bits", "instantaneous_mi_bits", "n"});
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      w.row({s.feature, std::to_string(p.frame), format_double(p.transfer), format_double(p.cond_entropy),
             format_double(p.mi), std::to_string(p.n)});
    }
  }
}

void write_feature_ranking(std::ostream& out, std::span<const RankedFeature> ranking) {
  DelimitedWriter w(out);
  w.row({"rank", "feature", "residual_entropy_bits"});
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    w.row({std::to_string(i + 1), ranking[i].feature, format_double(ranking[i].residual_entropy)});
  }
}

}  // namespace crumbs
