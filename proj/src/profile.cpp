#include "crumbs/profile.hpp"

#include <map>
#include <ostream>

#include "crumbs/delimited.hpp"
#include "crumbs/error.hpp"

namespace crumbs {

std::vector<FrameActivity> population_dynamics(const ActivityTable& table) {
  const int frames = table.grid().frame_count();
  const std::size_t cats = table.categories();
  std::vector<FrameActivity> out(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    out[static_cast<std::size_t>(f)].frame = f + 1;
    out[static_cast<std::size_t>(f)].revisions.assign(cats, 0);
  }
  for (const UserActivity& u : table.users()) {
    ++out[static_cast<std::size_t>(u.first_active_frame)].new_users;
    for (int f = 0; f < frames; ++f) {
      auto& row = out[static_cast<std::size_t>(f)];
      if (u.active_in(f, cats)) ++row.active;
      for (std::size_t c = 0; c < cats; ++c) row.revisions[c] += u.count(f, c, cats);
    }
  }
  return out;
}

namespace {

std::uint64_t basic_total(const UserActivity& u, int frame_from, int frame_to, std::size_t cats) {
  std::uint64_t total = 0;
  for (int f = frame_from; f < frame_to; ++f) {
    for (std::size_t c = 0; c < kBasicCategoryCount; ++c) total += u.count(f, c, cats);
  }
  return total;
}

struct Accumulator {
  std::vector<double> share_sum;
  std::vector<std::uint64_t> count_sum;
  std::uint64_t total_sum = 0;
  std::size_t users = 0;
};

// Adds one user's counts over [from, to) to the class accumulator; false
// when the user has no revision there.
bool accumulate(Accumulator& acc, const UserActivity& u, int from, int to, std::size_t cats) {
  const std::uint64_t total = basic_total(u, from, to, cats);
  if (total == 0) return false;
  if (acc.share_sum.empty()) {
    acc.share_sum.assign(cats, 0.0);
    acc.count_sum.assign(cats, 0);
  }
  for (std::size_t c = 0; c < cats; ++c) {
    std::uint64_t n = 0;
    for (int f = from; f < to; ++f) n += u.count(f, c, cats);
    acc.share_sum[c] += static_cast<double>(n) / static_cast<double>(total);
    acc.count_sum[c] += n;
  }
  acc.total_sum += total;
  ++acc.users;
  return true;
}

double share_of(const Accumulator& acc, std::size_t c, const ShareOptions& options) {
  if (options.pooled) return static_cast<double>(acc.count_sum[c]) / static_cast<double>(acc.total_sum);
  return acc.share_sum[c] / static_cast<double>(acc.users);
}

const std::string* class_of(const LabelTable& labels, const std::string& user, Trait trait) {
  auto it = labels.find(user);
  if (it == labels.end()) return nullptr;
  auto jt = it->second.find(trait);
  return jt == it->second.end() ? nullptr : &jt->second;
}

}  // namespace

std::vector<ClassShare> class_feature_shares(const ActivityTable& table, const LabelTable& labels, Trait trait,
                                             const ShareOptions& options) {
  const std::size_t cats = table.categories();
  const int frames = table.grid().frame_count();
  std::map<std::string, Accumulator> by_class;
  for (const UserActivity& u : table.users()) {
    const std::string* cls = class_of(labels, u.user_id, trait);
    if (!cls) continue;
    if (basic_total(u, 0, frames, cats) == 0) continue;
    accumulate(by_class[*cls], u, 0, frames, cats);
  }
  if (by_class.empty()) {
    throw Error(ErrorKind::DegeneratePrior, "no labeled user with revisions for " + std::string(to_string(trait)));
  }
  std::vector<ClassShare> out;
  for (const auto& [cls, acc] : by_class) {
    for (std::size_t c = 0; c < cats; ++c) {
      out.push_back({cls, std::string(table.scheme().name(c)), share_of(acc, c, options), acc.users});
    }
  }
  return out;
}

std::vector<ClassTemporalShare> class_temporal_means(const ActivityTable& table, const LabelTable& labels,
                                                     Trait trait, const ShareOptions& options) {
  const std::size_t cats = table.categories();
  const int frames = table.grid().frame_count();
  std::map<std::string, std::vector<Accumulator>> by_class;
  for (const UserActivity& u : table.users()) {
    const std::string* cls = class_of(labels, u.user_id, trait);
    if (!cls) continue;
    auto& per_frame = by_class[*cls];
    per_frame.resize(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) accumulate(per_frame[static_cast<std::size_t>(f)], u, f, f + 1, cats);
  }
  if (by_class.empty()) {
    throw Error(ErrorKind::DegeneratePrior, "no labeled user for " + std::string(to_string(trait)));
  }
  std::vector<ClassTemporalShare> out;
  for (const auto& [cls, per_frame] : by_class) {
    for (std::size_t c = 0; c < cats; ++c) {
      for (int f = 0; f < frames; ++f) {
        const Accumulator& acc = per_frame[static_cast<std::size_t>(f)];
        ClassTemporalShare row{cls, std::string(table.scheme().name(c)), f + 1, std::nullopt, acc.users};
        if (acc.users) row.mean_share = share_of(acc, c, options);
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

void write_population_dynamics(std::ostream& out, const std::vector<FrameActivity>& rows,
                               const CategoryScheme& scheme) {
  DelimitedWriter w(out);
  std::vector<std::string> header{"frame", "active", "new"};
  for (const auto& n : scheme.names()) header.push_back(n);
  w.row(header);
  for (const auto& r : rows) {
    std::vector<std::string> fields{std::to_string(r.frame), std::to_string(r.active), std::to_string(r.new_users)};
    for (auto v : r.revisions) fields.push_back(std::to_string(v));
    w.row(fields);
  }
}

void write_class_shares(std::ostream& out, const std::vector<ClassShare>& rows) {
  DelimitedWriter w(out);
  w.row({"class", "category", "mean_share", "users"});
  for (const auto& r : rows) w.row({r.class_value, r.category, format_double(r.mean_share), std::to_string(r.users)});
}

void write_class_temporal_means(std::ostream& out, const std::vector<ClassTemporalShare>& rows) {
  DelimitedWriter w(out);
  w.row({"class", "category", "frame", "mean_share", "users"});
  for (const auto& r : rows) {
    w.row({r.class_value, r.category, std::to_string(r.frame), r.mean_share ? format_double(*r.mean_share) : "",
           std::to_string(r.users)});
  }
}

}  // namespace crumbs
