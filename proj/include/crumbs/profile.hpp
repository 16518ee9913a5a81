#pragma once

// Descriptive corpus statistics: active and new users per frame, and
// class-conditional category shares, overall and per frame.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crumbs/featurize.hpp"

namespace crumbs {

struct FrameActivity {
  int frame = 0;  // 1-based
  std::size_t active = 0;
  std::size_t new_users = 0;
  std::vector<std::uint64_t> revisions;  // per scheme category
};

std::vector<FrameActivity> population_dynamics(const ActivityTable& table);

struct ShareOptions {
  // Pool revisions over the class instead of averaging per-user shares.
  bool pooled = false;
};

struct ClassShare {
  std::string class_value;
  std::string category;
  double mean_share = 0.0;
  std::size_t users = 0;
};

// Shares are category counts over the user's total basic-category count.
// In extended mode the theme rows reuse that denominator, so they overlap
// and need not sum to 1. Users with no revisions are left out. Throws
// DegeneratePrior when no labeled user has a revision.
std::vector<ClassShare> class_feature_shares(const ActivityTable& table, const LabelTable& labels, Trait trait,
                                             const ShareOptions& options = {});

struct ClassTemporalShare {
  std::string class_value;
  std::string category;
  int frame = 0;                     // 1-based
  std::optional<double> mean_share;  // absent when no user of the class is active in the frame
  std::size_t users = 0;
};

std::vector<ClassTemporalShare> class_temporal_means(const ActivityTable& table, const LabelTable& labels,
                                                     Trait trait, const ShareOptions& options = {});

void write_population_dynamics(std::ostream& out, const std::vector<FrameActivity>& rows,
                               const CategoryScheme& scheme);
void write_class_shares(std::ostream& out, const std::vector<ClassShare>& rows);
void write_class_temporal_means(std::ostream& out, const std::vector<ClassTemporalShare>& rows);

}  // namespace crumbs
