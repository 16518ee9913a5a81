#pragma once

// Synthetic event corpora with planted, controllable trait <-> behaviour
// signal, plus the ground truth needed to check every downstream claim.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crumbs/ingest.hpp"
#include "crumbs/trace_model.hpp"

namespace crumbs {

struct SynthClass {
  std::string name;
  double prior = 0.5;
  // Expected edits per active frame, per basic category.
  std::array<double, kBasicCategoryCount> rates{};
  // Per-theme probability that a CONTENT edit carries the theme; empty: none.
  std::vector<double> theme_probs;
  // Exit hazard of a user with activity multiplier a is
  // min(1, hazard * exit_scale * a^-exit_activity_exponent).
  double exit_scale = 1.0;
  double exit_activity_exponent = 0.0;
};

// Multiplies the rate of one category for one class (empty: every class)
// over frames [from, to). to < 0 runs to the end of the grid.
struct DriftRule {
  std::string class_name;
  BasicCategory category = BasicCategory::Content;
  int from = 0;
  int to = -1;
  double multiplier = 1.0;
};

struct SynthConfig {
  std::string name = "custom";
  int n_users = 2000;
  Trait trait = Trait::Gender;
  std::vector<SynthClass> classes;
  // 0: every class uses the prior-weighted mean rates.
  double signal = 1.0;
  // Effective signal of a user arriving at frame a: signal * (1 + boost * a).
  double newcomer_boost = 0.0;
  std::vector<double> arrival;      // fraction of users arriving per frame; sums to 1
  std::vector<double> exit_hazard;  // per frame, applied after the arrival frame
  std::vector<DriftRule> drift;
  // Variance of the per-user Gamma activity multiplier (mean 1); 0 disables it.
  double dispersion = 0.0;
  double label_fraction = 1.0;
  std::string grid_origin = "2007-01-01";
  int frames = 8;
  std::uint64_t seed = 1;

  TimeGrid grid() const { return TimeGrid::from_string(grid_origin, frames); }
  // Same config on a grid of `n` frames: per-frame vectors are truncated or
  // padded (arrival renormalized, hazards repeat their last value).
  SynthConfig with_frames(int n) const;
  void validate() const;
  std::string to_json() const;
  static SynthConfig from_json(const std::string& text);
  std::string hash() const;
};

struct UserTruth {
  std::string user_id;
  std::string class_value;
  int arrival = 0;
  std::optional<int> exit;  // first frame without activity, if the user exited
  bool labeled = true;
  double activity = 1.0;
  std::uint64_t events = 0;
};

struct RateRow {
  std::string class_value;
  int arrival = 0;
  int frame = 0;
  std::array<double, kBasicCategoryCount> rates{};
};

struct SynthTruth {
  std::vector<UserTruth> users;
  // Expected per-frame rates (before the activity multiplier) for every
  // (class, arrival frame) pair present in the corpus.
  std::vector<RateRow> rates;
};

struct SynthOutput {
  std::vector<Event> events;  // sorted by (user, timestamp)
  LabelTable labels;
  FirstEditTable first_edits;
  SynthTruth truth;
};

// Effective rate of `cls` at `frame` for a user arriving at `arrival`.
std::array<double, kBasicCategoryCount> effective_rates(const SynthConfig& config, std::size_t cls, int arrival,
                                                        int frame);

SynthOutput generate(const SynthConfig& config, unsigned threads = 1);

// planted_signal, null, newcomer_signal, exit_amplify.
std::vector<SynthConfig> reference_configs();
SynthConfig reference_config(std::string_view name);

void write_truth(std::ostream& out, const SynthTruth& truth);
void write_rates(std::ostream& out, const SynthTruth& truth);

}  // namespace crumbs
