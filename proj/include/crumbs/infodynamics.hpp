#pragma once

// Plug-in information theory over discretized features: entropies, mutual
// information, conditional MI over growing histories and the
// information-transfer series I(Y; X_t | X_{1:t-1}). All values in bits.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crumbs/featurize.hpp"

namespace crumbs {

enum class BinStrategy : std::uint8_t { EqualFrequency, EqualWidth };
enum class Estimator : std::uint8_t { PlugIn, MillerMadow };

std::string_view to_string(BinStrategy s) noexcept;
BinStrategy parse_bin_strategy(std::string_view s);

struct QuantizerSpec {
  int bins = 3;
  BinStrategy strategy = BinStrategy::EqualFrequency;
  // Exact zeros get bin 0 of their own, when the data contains any.
  bool zero_bin = true;
};

struct Quantizer {
  QuantizerSpec spec;
  bool zero_reserved = false;
  std::vector<double> cuts;  // strictly increasing; v <= cuts[k] falls in the lower bin
  bool degenerate = false;   // every fitted value identical

  static Quantizer fit(std::span<const double> values, const QuantizerSpec& spec);
  int bin(double v) const;
  int levels() const;  // number of distinct bin indices this quantizer can emit
};

struct QuantizeResult {
  std::vector<int> bins;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

// Fits on `values` and maps them; a constant vector yields all-zero bins and
// a DegenerateFeature warning.
QuantizeResult quantize(std::span<const double> values, const QuantizerSpec& spec);
std::vector<int> quantize(std::span<const double> values, const Quantizer& quantizer);

// Partition of the rows by the joint value of a set of discrete variables.
// State ids are dense and assigned in order of first appearance, so only
// realized states are stored.
class JointState {
 public:
  explicit JointState(std::size_t n);  // the empty conditioning set
  static JointState of(const std::vector<std::vector<int>>& variables, std::size_t n);

  JointState refine(std::span<const int> x) const;
  std::size_t size() const { return ids_.size(); }
  std::size_t states() const { return counts_.size(); }
  std::span<const std::uint32_t> ids() const { return ids_; }
  std::span<const std::uint32_t> counts() const { return counts_; }

 private:
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint32_t> counts_;
};

double entropy(std::span<const int> y, Estimator est = Estimator::PlugIn);
double conditional_entropy(std::span<const int> y, const JointState& given, Estimator est = Estimator::PlugIn);
double conditional_entropy(std::span<const int> y, const std::vector<std::vector<int>>& given,
                           Estimator est = Estimator::PlugIn);
double mutual_information(std::span<const int> y, std::span<const int> x, Estimator est = Estimator::PlugIn);
// I(Y; X | Z)
double conditional_mutual_information(std::span<const int> y, std::span<const int> x,
                                      const std::vector<std::vector<int>>& given, Estimator est = Estimator::PlugIn);

struct TransferPoint {
  int frame = 0;  // 1-based
  double transfer = 0.0;
  double cond_entropy = 0.0;
  double mi = 0.0;
  std::size_t n = 0;
};

struct TransferSeries {
  std::string feature;
  double h_y = 0.0;
  std::vector<TransferPoint> points;
  bool degenerate = false;  // quantizer saw a constant feature
};

struct TransferOptions {
  Estimator estimator = Estimator::PlugIn;
  // 0: condition on the full history. w > 0: on the last w frames only,
  // transfer_t = I(Y; X_t | X_{t-w+1:t-1}).
  int window = 0;
};

// Series over already discretized per-frame variables x[t][row].
TransferSeries information_transfer_series(std::span<const int> y, const std::vector<std::vector<int>>& x,
                                           const TransferOptions& options = {});

struct FeatureDiscretization {
  QuantizerSpec quantizer;
  // Users not yet joined at a frame get a symbol of their own.
  bool encode_missing = true;
};

// Per-frame discrete variables of one category over the rows of a dataset.
// The quantizer is fitted once on every joined (row, frame) value of the
// category; `degenerate` reports a constant feature.
std::vector<std::vector<int>> discretize_category(const TemporalDataset& dataset, std::span<const std::size_t> rows,
                                                  const std::string& category, const FeatureDiscretization& disc,
                                                  bool* degenerate = nullptr);

TransferSeries feature_transfer_series(const TemporalDataset& dataset, std::span<const std::size_t> rows,
                                       std::span<const int> y, const std::string& category,
                                       const FeatureDiscretization& disc = {}, const TransferOptions& options = {});

struct RankedFeature {
  std::string feature;
  double residual_entropy = 0.0;
};

// Ascending H(Y | X_{1:T}) per category, ties by name.
std::vector<RankedFeature> rank_features_by_residual_entropy(const TemporalDataset& dataset,
                                                             std::span<const std::size_t> rows, std::span<const int> y,
                                                             const std::vector<std::string>& categories,
                                                             const FeatureDiscretization& disc = {},
                                                             const TransferOptions& options = {},
                                                             unsigned threads = 1);

void write_transfer_series(std::ostream& out, std::span<const TransferSeries> series);
void write_feature_ranking(std::ostream& out, std::span<const RankedFeature> ranking);

}  // namespace crumbs
