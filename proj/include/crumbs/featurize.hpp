#pragma once

// Instantaneous and longitudinal per-user feature vectors with missing
// ("not yet joined") flags, and the series of temporal datasets.
//
// Frame indices are 0-based internally; a horizon h covers frames 0..h-1.
// Column names carry 1-based frame numbers: CONTENT_1 is the first quarter
// of the grid, p_CONTENT_1 its missing flag.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crumbs/ingest.hpp"
#include "crumbs/trace_model.hpp"

namespace crumbs {

struct FeatureOptions {
  // Replace per-frame counts by running totals since the grid origin.
  // Off by default; kept for replication of the cumulative encoding.
  bool cumulative = false;
};

// Join frame of a user from the first-edit side table: the quarter offset of
// the first-ever edit, negative for users who joined before the grid origin.
int join_frame(const std::string& user_id, const FirstEditTable& first_edits, const TimeGrid& grid);

struct FrameFeatures {
  std::string user_id;
  int frame = 0;
  std::vector<std::uint32_t> counts;
  std::vector<std::uint8_t> missing_flags;
};

// Counts one user's events in `frame`. `join` is the user's join frame; when
// absent it defaults to the frame of the user's earliest event.
FrameFeatures instantaneous_features(std::span<const Event> user_events, const TimeGrid& grid,
                                     const CategoryScheme& scheme, int frame,
                                     std::optional<int> join = std::nullopt);

// Per-user frame x category count grid for the whole window.
struct UserActivity {
  std::string user_id;
  int join_frame = 0;
  int first_active_frame = 0;  // first frame with an in-window event
  int last_active_frame = 0;
  std::vector<std::uint32_t> counts;  // frame-major, frame_count x categories

  std::uint32_t count(int frame, std::size_t category, std::size_t categories) const {
    return counts[static_cast<std::size_t>(frame) * categories + category];
  }
  bool active_in(int frame, std::size_t categories) const;
  std::uint8_t missing_flag(int frame) const { return frame < join_frame ? 1 : 0; }
};

class ActivityTable {
 public:
  ActivityTable(TimeGrid grid, CategoryScheme scheme) : grid_(grid), scheme_(scheme) {}

  // Events outside the grid are ignored. Join frames come from the side
  // table when given (users absent from it fall back to their first event).
  static ActivityTable build(const std::vector<Event>& events, const TimeGrid& grid,
                             const CategoryScheme& scheme, const FirstEditTable* first_edits = nullptr);

  const TimeGrid& grid() const { return grid_; }
  const CategoryScheme& scheme() const { return scheme_; }
  std::size_t categories() const { return scheme_.size(); }
  const std::vector<UserActivity>& users() const { return users_; }
  std::size_t size() const { return users_.size(); }

  const UserActivity* find(const std::string& user_id) const;
  // Rows restricted to the given users (order preserved).
  ActivityTable subset(const std::set<std::string>& user_ids) const;

  // Users are kept sorted by id; add() must be called in increasing id order.
  void add(UserActivity user);

  friend bool operator==(const ActivityTable&, const ActivityTable&);

 private:
  TimeGrid grid_;
  CategoryScheme scheme_;
  std::vector<UserActivity> users_;
};

FrameFeatures instantaneous_features(const UserActivity& user, const ActivityTable& table, int frame,
                                     const FeatureOptions& options = {});

struct LongitudinalFeatures {
  std::string user_id;
  int horizon = 0;
  // Per frame, per category: (count, flag).
  std::vector<double> values;
};

LongitudinalFeatures longitudinal_features(const UserActivity& user, const ActivityTable& table, int horizon,
                                           const FeatureOptions& options = {});

std::vector<std::string> feature_column_names(const CategoryScheme& scheme, int horizon);

struct TemporalDataset {
  int horizon = 0;
  std::vector<std::string> user_ids;  // sorted
  std::vector<std::string> columns;
  Eigen::MatrixXd features;           // users x columns
  std::vector<UserTraits> labels;     // parallel to user_ids; empty when unlabeled

  std::size_t size() const { return user_ids.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  // Rows whose user carries a label for `trait`.
  std::vector<std::size_t> labeled_rows(Trait trait) const;
};

// Dataset at horizon h: users with at least one in-window revision in frames
// 0..h-1, each row the longitudinal vector over those frames.
TemporalDataset build_temporal_dataset(const ActivityTable& table, int horizon, const LabelTable* labels = nullptr,
                                       const FeatureOptions& options = {});

struct DatasetSeries {
  std::vector<TemporalDataset> datasets;  // horizons 1..T
  std::vector<std::string> warnings;      // EmptyDataset notices
};

// When `trait` is given, horizons without labeled users for it produce an
// EmptyDataset warning.
DatasetSeries build_temporal_dataset_series(const ActivityTable& table, const LabelTable* labels = nullptr,
                                            std::optional<Trait> trait = std::nullopt,
                                            const FeatureOptions& options = {});
DatasetSeries build_temporal_dataset_series(const std::vector<Event>& events, const TimeGrid& grid,
                                            const CategoryScheme& scheme, const LabelTable* labels = nullptr,
                                            std::optional<Trait> trait = std::nullopt,
                                            const FeatureOptions& options = {});

// Delimited export: `user_id,<cat>_<i>,p_<cat>_<i>,...`.
void write_feature_matrix(std::ostream& out, const TemporalDataset& dataset);

// Versioned binary cache of an activity table ("CRMBFEA").
void write_feature_cache(std::ostream& out, const ActivityTable& table, const FeatureOptions& options);
struct FeatureCache {
  ActivityTable table;
  FeatureOptions options;
};
FeatureCache read_feature_cache(std::istream& in);

}  // namespace crumbs
