#include "crumbs/featurize.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "binary_io.hpp"
#include "crumbs/delimited.hpp"
#include "crumbs/error.hpp"

namespace crumbs {

namespace {

void add_event(std::uint32_t* frame_counts, const Event& e, const CategoryScheme& scheme) {
  ++frame_counts[CategoryScheme::index_of(e.category)];
  if (scheme.mode() == SchemeMode::Extended && e.category == BasicCategory::Content) {
    for (Theme t : e.themes.members()) ++frame_counts[CategoryScheme::index_of(t)];
  }
}

}  // namespace

int join_frame(const std::string& user_id, const FirstEditTable& first_edits, const TimeGrid& grid) {
  auto it = first_edits.find(user_id);
  if (it == first_edits.end()) throw Error(ErrorKind::MissingUser, "no first edit recorded for '" + user_id + "'");
  return grid.quarter_offset(it->second);
}

FrameFeatures instantaneous_features(std::span<const Event> user_events, const TimeGrid& grid,
                                     const CategoryScheme& scheme, int frame, std::optional<int> join) {
  FrameFeatures out;
  out.frame = frame;
  out.counts.assign(scheme.size(), 0);
  if (!user_events.empty()) out.user_id = user_events.front().user_id;
  int earliest = grid.frame_count();
  for (const Event& e : user_events) {
    const auto f = grid.frame_of(e.timestamp);
    if (!f) continue;
    earliest = std::min(earliest, *f);
    if (*f == frame) add_event(out.counts.data(), e, scheme);
  }
  const int joined = join.value_or(earliest);
  out.missing_flags.assign(scheme.size(), frame < joined ? 1 : 0);
  return out;
}

bool UserActivity::active_in(int frame, std::size_t categories) const {
  for (std::size_t c = 0; c < std::min(categories, kBasicCategoryCount); ++c) {
    if (count(frame, c, categories) > 0) return true;
  }
  return false;
}

ActivityTable ActivityTable::build(const std::vector<Event>& events, const TimeGrid& grid,
                                   const CategoryScheme& scheme, const FirstEditTable* first_edits) {
  const std::size_t cats = scheme.size();
  const auto frames = static_cast<std::size_t>(grid.frame_count());
  std::map<std::string, UserActivity> by_user;
  for (const Event& e : events) {
    const auto f = grid.frame_of(e.timestamp);
    if (!f) continue;
    auto [it, inserted] = by_user.try_emplace(e.user_id);
    UserActivity& u = it->second;
    if (inserted) {
      u.user_id = e.user_id;
      u.counts.assign(frames * cats, 0);
      u.first_active_frame = *f;
      u.last_active_frame = *f;
    }
    u.first_active_frame = std::min(u.first_active_frame, *f);
    u.last_active_frame = std::max(u.last_active_frame, *f);
    add_event(u.counts.data() + static_cast<std::size_t>(*f) * cats, e, scheme);
  }
  ActivityTable table(grid, scheme);
  table.users_.reserve(by_user.size());
  for (auto& [id, u] : by_user) {
    u.join_frame = u.first_active_frame;
    if (first_edits) {
      if (auto it = first_edits->find(id); it != first_edits->end()) {
        u.join_frame = std::min(u.join_frame, grid.quarter_offset(it->second));
      }
    }
    table.users_.push_back(std::move(u));
  }
  return table;
}

const UserActivity* ActivityTable::find(const std::string& user_id) const {
  auto it = std::lower_bound(users_.begin(), users_.end(), user_id,
                             [](const UserActivity& u, const std::string& id) { return u.user_id < id; });
  if (it == users_.end() || it->user_id != user_id) return nullptr;
  return &*it;
}

ActivityTable ActivityTable::subset(const std::set<std::string>& user_ids) const {
  ActivityTable out(grid_, scheme_);
  for (const UserActivity& u : users_) {
    if (user_ids.count(u.user_id)) out.users_.push_back(u);
  }
  return out;
}

void ActivityTable::add(UserActivity user) {
  if (!users_.empty() && !(users_.back().user_id < user.user_id)) {
    throw Error(ErrorKind::SchemaError, "activity rows must be added in increasing user order");
  }
  if (user.counts.size() != static_cast<std::size_t>(grid_.frame_count()) * categories()) {
    throw Error(ErrorKind::SchemaError, "activity row for '" + user.user_id + "' has the wrong size");
  }
  users_.push_back(std::move(user));
}

bool operator==(const ActivityTable& a, const ActivityTable& b) {
  if (!(a.grid_ == b.grid_) || !(a.scheme_ == b.scheme_) || a.users_.size() != b.users_.size()) return false;
  for (std::size_t i = 0; i < a.users_.size(); ++i) {
    const auto& x = a.users_[i];
    const auto& y = b.users_[i];
    if (x.user_id != y.user_id || x.join_frame != y.join_frame || x.first_active_frame != y.first_active_frame ||
        x.last_active_frame != y.last_active_frame || x.counts != y.counts) {
      return false;
    }
  }
  return true;
}

FrameFeatures instantaneous_features(const UserActivity& user, const ActivityTable& table, int frame,
                                     const FeatureOptions& options) {
  const std::size_t cats = table.categories();
  FrameFeatures out;
  out.user_id = user.user_id;
  out.frame = frame;
  out.counts.assign(cats, 0);
  const int from = options.cumulative ? 0 : frame;
  for (int f = from; f <= frame; ++f) {
    for (std::size_t c = 0; c < cats; ++c) out.counts[c] += user.count(f, c, cats);
  }
  out.missing_flags.assign(cats, user.missing_flag(frame));
  return out;
}

LongitudinalFeatures longitudinal_features(const UserActivity& user, const ActivityTable& table, int horizon,
                                           const FeatureOptions& options) {
  if (horizon < 1 || horizon > table.grid().frame_count()) {
    throw Error(ErrorKind::ConfigError, "horizon " + std::to_string(horizon) + " outside the grid");
  }
  const std::size_t cats = table.categories();
  LongitudinalFeatures out;
  out.user_id = user.user_id;
  out.horizon = horizon;
  out.values.reserve(static_cast<std::size_t>(horizon) * 2 * cats);
  std::vector<double> running(cats, 0.0);
  for (int f = 0; f < horizon; ++f) {
    const double flag = user.missing_flag(f);
    for (std::size_t c = 0; c < cats; ++c) {
      double v = user.count(f, c, cats);
      if (options.cumulative) {
        running[c] += v;
        v = running[c];
      }
      out.values.push_back(v);
      out.values.push_back(flag);
    }
  }
  return out;
}

std::vector<std::string> feature_column_names(const CategoryScheme& scheme, int horizon) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(horizon) * 2 * scheme.size());
  for (int f = 1; f <= horizon; ++f) {
    const std::string suffix = "_" + std::to_string(f);
    for (std::size_t c = 0; c < scheme.size(); ++c) {
      const std::string cat(scheme.name(c));
      names.push_back(cat + suffix);
      names.push_back("p_" + cat + suffix);
    }
  }
  return names;
}

std::optional<std::size_t> TemporalDataset::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> TemporalDataset::labeled_rows(Trait trait) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].count(trait)) rows.push_back(i);
  }
  return rows;
}

TemporalDataset build_temporal_dataset(const ActivityTable& table, int horizon, const LabelTable* labels,
                                       const FeatureOptions& options) {
  TemporalDataset ds;
  ds.horizon = horizon;
  ds.columns = feature_column_names(table.scheme(), horizon);
  std::vector<const UserActivity*> rows;
  for (const UserActivity& u : table.users()) {
    if (u.first_active_frame < horizon) rows.push_back(&u);
  }
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.columns.size()));
  ds.user_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto lf = longitudinal_features(*rows[r], table, horizon, options);
    for (std::size_t c = 0; c < lf.values.size(); ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = lf.values[c];
    }
    ds.user_ids.push_back(rows[r]->user_id);
    if (labels) {
      auto it = labels->find(rows[r]->user_id);
      ds.labels.push_back(it == labels->end() ? UserTraits{} : it->second);
    }
  }
  return ds;
}

DatasetSeries build_temporal_dataset_series(const ActivityTable& table, const LabelTable* labels,
                                            std::optional<Trait> trait, const FeatureOptions& options) {
  DatasetSeries series;
  for (int h = 1; h <= table.grid().frame_count(); ++h) {
    series.datasets.push_back(build_temporal_dataset(table, h, labels, options));
    if (trait && labels && series.datasets.back().labeled_rows(*trait).empty()) {
      series.warnings.push_back("EmptyDataset: horizon " + std::to_string(h) + " has no users labeled for " +
                                std::string(to_string(*trait)));
    }
  }
  return series;
}

DatasetSeries build_temporal_dataset_series(const std::vector<Event>& events, const TimeGrid& grid,
                                            const CategoryScheme& scheme, const LabelTable* labels,
                                            std::optional<Trait> trait, const FeatureOptions& options) {
  const auto table = ActivityTable::build(events, grid, scheme);
  return build_temporal_dataset_series(table, labels, trait, options);
}

void write_feature_matrix(std::ostream& out, const TemporalDataset& dataset) {
  DelimitedWriter w(out);
  std::vector<std::string> row;
  row.reserve(dataset.columns.size() + 1);
  row.push_back("user_id");
  row.insert(row.end(), dataset.columns.begin(), dataset.columns.end());
  w.row(row);
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    row.clear();
    row.push_back(dataset.user_ids[r]);
    for (Eigen::Index c = 0; c < dataset.features.cols(); ++c) {
      row.push_back(format_double(dataset.features(static_cast<Eigen::Index>(r), c)));
    }
    w.row(row);
  }
}

namespace {
constexpr char kFeatureMagic[8] = {'C', 'R', 'M', 'B', 'F', 'E', 'A', '\0'};
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

void write_feature_cache(std::ostream& out, const ActivityTable& table, const FeatureOptions& options) {
  using namespace binary;
  put_magic(out, kFeatureMagic, kFeatureVersion);
  put_string(out, table.grid().origin_string());
  put<std::int32_t>(out, table.grid().frame_count());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(table.scheme().mode()));
  put<std::uint8_t>(out, options.cumulative ? 1 : 0);
  put<std::uint64_t>(out, table.size());
  for (const UserActivity& u : table.users()) {
    put_string(out, u.user_id);
    put<std::int32_t>(out, u.join_frame);
    put<std::int32_t>(out, u.first_active_frame);
    put<std::int32_t>(out, u.last_active_frame);
    for (std::uint32_t c : u.counts) put<std::uint32_t>(out, c);
  }
  if (!out) throw Error(ErrorKind::IoError, "write failure on feature cache");
}

FeatureCache read_feature_cache(std::istream& in) {
  using namespace binary;
  expect_magic(in, kFeatureMagic, kFeatureVersion);
  const std::string origin = get_string(in);
  const auto frames = get<std::int32_t>(in);
  const auto mode = get<std::uint8_t>(in);
  if (mode > 1) throw Error(ErrorKind::SchemaError, "corrupt scheme in feature cache");
  FeatureOptions options;
  options.cumulative = get<std::uint8_t>(in) != 0;
  FeatureCache cache{ActivityTable(TimeGrid::from_string(origin, frames), CategoryScheme(static_cast<SchemeMode>(mode))),
                     options};
  const auto n = get<std::uint64_t>(in);
  const std::size_t width = static_cast<std::size_t>(frames) * cache.table.categories();
  for (std::uint64_t i = 0; i < n; ++i) {
    UserActivity u;
    u.user_id = get_string(in);
    u.join_frame = get<std::int32_t>(in);
    u.first_active_frame = get<std::int32_t>(in);
    u.last_active_frame = get<std::int32_t>(in);
    u.counts.resize(width);
    for (auto& c : u.counts) c = get<std::uint32_t>(in);
    cache.table.add(std::move(u));
  }
  return cache;
}

}  // namespace crumbs
