#pragma once

// Population scenarios: New Entry (everyone), Fixed Population (frame-1
// actives only) and users who exited before a cutoff frame.

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crumbs/classify.hpp"
#include "crumbs/featurize.hpp"
#include "crumbs/infodynamics.hpp"

namespace crumbs {

enum class CohortKind : std::uint8_t { NewEntry, FixedPopulation, Exited };

std::string_view to_string(CohortKind k) noexcept;
CohortKind parse_cohort_kind(std::string_view s);

struct CohortSpec {
  CohortKind kind = CohortKind::NewEntry;
  int cutoff = 4;  // 0-based first frame of the exited period (2008Q1 on the default grid)

  void validate(const TimeGrid& grid) const;
};

using UserSet = std::set<std::string>;

// Throws EmptyCohort when nobody qualifies.
UserSet select_cohort(const ActivityTable& table, const CohortSpec& spec);
UserSet select_cohort(const std::vector<Event>& events, const TimeGrid& grid, const CohortSpec& spec);

struct NeFpComparison {
  EvalSeries new_entry;
  EvalSeries fixed_population;
  std::vector<double> gain;  // per frame, nan where either side is absent
  double pearson = 0.0;      // between the two mean AUC series over frames present in both
  std::size_t fp_users = 0;
};

NeFpComparison compare_ne_fp(const ActivityTable& table, const LabelTable& labels, Trait trait,
                             std::string_view target_class, const TrainSpec& spec);

struct ExitedOptions {
  FeatureDiscretization discretization;
  TransferOptions transfer;
  std::vector<std::string> transfer_categories;  // empty: every category of the scheme
};

struct ExitedResult {
  int cutoff = 0;
  UserSet exited;
  EvalSeries series;  // horizons cutoff+1 .. T
  std::vector<TransferSeries> transfer;
  std::vector<std::optional<FittedModel>> models;  // one per evaluated horizon, trained on the full training pool
  std::vector<int> horizons;
  std::vector<std::string> notes;  // provenance of the training-set choice
};

// Train on labeled users outside the exited cohort, test on the labeled
// exited users. Each repeat subsamples the training pool (stratified,
// train_fraction) and cross-validates lambda on it.
ExitedResult exited_eval(const ActivityTable& table, const LabelTable& labels, Trait trait,
                         std::string_view target_class, int cutoff, const TrainSpec& spec,
                         const ExitedOptions& options = {});

void write_cohort_membership(std::ostream& out, const std::vector<std::pair<std::string, UserSet>>& cohorts);
void write_ne_fp(std::ostream& out, const NeFpComparison& cmp);

}  // namespace crumbs
