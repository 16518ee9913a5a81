#include "crumbs/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "crumbs/delimited.hpp"
#include "crumbs/error.hpp"
#include "crumbs/metrics.hpp"
#include "crumbs/parallel.hpp"

namespace crumbs {

std::string_view to_string(CohortKind k) noexcept {
  switch (k) {
    case CohortKind::NewEntry: return "new_entry";
    case CohortKind::FixedPopulation: return "fixed_population";
    case CohortKind::Exited: return "exited";
  }
  return "?";
}

CohortKind parse_cohort_kind(std::string_view s) {
  if (s == "new_entry" || s == "NE") return CohortKind::NewEntry;
  if (s == "fixed_population" || s == "FP") return CohortKind::FixedPopulation;
  if (s == "exited") return CohortKind::Exited;
  throw Error(ErrorKind::ConfigError, "unknown cohort '" + std::string(s) + "'");
}

void CohortSpec::validate(const TimeGrid& grid) const {
  if (kind == CohortKind::Exited && (cutoff < 1 || cutoff >= grid.frame_count())) {
    throw Error(ErrorKind::ConfigError, "cutoff frame " + std::to_string(cutoff + 1) + " must lie in 2.." +
                                            std::to_string(grid.frame_count()));
  }
}

UserSet select_cohort(const ActivityTable& table, const CohortSpec& spec) {
  spec.validate(table.grid());
  UserSet out;
  for (const UserActivity& u : table.users()) {
    bool keep = false;
    switch (spec.kind) {
      case CohortKind::NewEntry: keep = true; break;
      case CohortKind::FixedPopulation: keep = u.first_active_frame == 0; break;
      case CohortKind::Exited: keep = u.first_active_frame < spec.cutoff && u.last_active_frame < spec.cutoff; break;
    }
    if (keep) out.insert(u.user_id);
  }
  if (out.empty()) throw Error(ErrorKind::EmptyCohort, std::string(to_string(spec.kind)) + " cohort is empty");
  return out;
}

UserSet select_cohort(const std::vector<Event>& events, const TimeGrid& grid, const CohortSpec& spec) {
  return select_cohort(ActivityTable::build(events, grid, CategoryScheme(SchemeMode::Basic)), spec);
}

NeFpComparison compare_ne_fp(const ActivityTable& table, const LabelTable& labels, Trait trait,
                             std::string_view target_class, const TrainSpec& spec) {
  const UserSet fp = select_cohort(table, {CohortKind::FixedPopulation, 0});
  const ActivityTable fp_table = table.subset(fp);
  NeFpComparison cmp;
  cmp.fp_users = fp.size();
  cmp.new_entry = repeated_eval(build_temporal_dataset_series(table, &labels).datasets, trait, target_class, spec);
  cmp.fixed_population =
      repeated_eval(build_temporal_dataset_series(fp_table, &labels).datasets, trait, target_class, spec);
  std::vector<double> ne_auc, fp_auc;
  for (std::size_t i = 0; i < cmp.new_entry.frames.size(); ++i) {
    const auto& a = cmp.new_entry.frames[i];
    const auto& b = cmp.fixed_population.frames[i];
    if (a.present && b.present) {
      cmp.gain.push_back((a.mean_auc - b.mean_auc) / b.mean_auc);
      ne_auc.push_back(a.mean_auc);
      fp_auc.push_back(b.mean_auc);
    } else {
      cmp.gain.push_back(std::nan(""));
    }
  }
  cmp.pearson = pearson(ne_auc, fp_auc);
  return cmp;
}

namespace {

struct Partition {
  std::vector<std::size_t> train, test;
  std::vector<int> y_train, y_test;
};

Partition partition_rows(const TemporalDataset& ds, Trait trait, std::string_view target_class, const UserSet& exited) {
  Partition p;
  const auto rows = ds.labeled_rows(trait);
  const auto y = binary_targets(ds, rows, trait, target_class);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (exited.count(ds.user_ids[rows[i]])) {
      p.test.push_back(rows[i]);
      p.y_test.push_back(y[i]);
    } else {
      p.train.push_back(rows[i]);
      p.y_train.push_back(y[i]);
    }
  }
  return p;
}

std::size_t positives(const std::vector<int>& y) { return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1)); }

}  // namespace

ExitedResult exited_eval(const ActivityTable& table, const LabelTable& labels, Trait trait,
                         std::string_view target_class, int cutoff, const TrainSpec& spec,
                         const ExitedOptions& options) {
  spec.validate();
  ExitedResult res;
  res.cutoff = cutoff;
  res.exited = select_cohort(table, {CohortKind::Exited, cutoff});
  const bool straddlers = std::any_of(table.users().begin(), table.users().end(), [&](const UserActivity& u) {
    return u.first_active_frame < cutoff && u.last_active_frame >= cutoff;
  });
  if (!straddlers) throw Error(ErrorKind::EmptyCohort, "no user is active on both sides of the cutoff");
  res.notes.push_back("training set: labeled users outside the exited cohort, subsampled per repeat");

  const int frames = table.grid().frame_count();
  res.series.trait = trait;
  res.series.target_class = normalize_class_value(trait, target_class).value_or(std::string(target_class));
  res.series.n_repeats = spec.n_repeats;
  res.series.spec_hash = spec.hash();

  std::vector<TemporalDataset> datasets;
  for (int h = cutoff + 1; h <= frames; ++h) {
    datasets.push_back(build_temporal_dataset(table, h, &labels));
    res.horizons.push_back(h);
  }
  res.models.resize(datasets.size());

  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const TemporalDataset& ds = datasets[k];
    FrameEval fe;
    fe.horizon = ds.horizon;
    const Partition part = partition_rows(ds, trait, target_class, res.exited);
    const std::size_t tp = positives(part.y_test), trp = positives(part.y_train);
    fe.prior = part.y_test.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(part.y_test.size());
    if (tp == 0 || tp == part.y_test.size()) {
      fe.absent_reason = "DegeneratePrior: exited cohort lacks one class";
    } else if (trp < 2 || part.y_train.size() - trp < 2) {
      fe.absent_reason = "DegeneratePrior: training pool lacks a class";
    }
    if (!fe.absent_reason.empty()) {
      res.series.warnings.push_back("horizon " + std::to_string(ds.horizon) + " absent: " + fe.absent_reason);
      res.series.frames.push_back(std::move(fe));
      continue;
    }
    const Eigen::MatrixXd x_pool = select_rows(ds.features, part.train);
    const Eigen::MatrixXd x_test = select_rows(ds.features, part.test);
    const auto repeats = static_cast<std::size_t>(spec.n_repeats);
    fe.aucs.assign(repeats, 0.0);
    fe.eprs.assign(repeats, 0.0);
    fe.lambdas.assign(repeats, 0.0);
    parallel_for(repeats, spec.threads, [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(ds.horizon), r);
      const Split split = stratified_split(part.y_train, spec.train_fraction, seed);
      std::vector<int> ytr;
      for (auto i : split.train) ytr.push_back(part.y_train[i]);
      const FittedModel m = train_model(select_rows(x_pool, split.train), ytr, spec, derive_seed(seed, 0xC5));
      const Eigen::VectorXd scores = m.decision_function(x_test);
      const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
      fe.aucs[r] = auc(s, part.y_test);
      fe.eprs[r] = epr(s, part.y_test).value;
      fe.lambdas[r] = m.lambda;
    });
    fe.n_train = stratified_split(part.y_train, spec.train_fraction,
                                  derive_seed(spec.seed, static_cast<std::uint64_t>(ds.horizon), 0))
                     .train.size();
    fe.n_test = part.test.size();
    fe.mean_auc = mean(fe.aucs);
    fe.std_auc = stddev(fe.aucs);
    fe.mean_epr = mean(fe.eprs);
    fe.std_epr = stddev(fe.eprs);
    fe.present = true;
    res.series.frames.push_back(std::move(fe));
    res.models[k] = train_model(x_pool, part.y_train, spec,
                                derive_seed(spec.seed, static_cast<std::uint64_t>(ds.horizon), 0xF17), &ds.columns);
  }

  // Information transfer over the exited cohort's full history.
  const TemporalDataset full = build_temporal_dataset(table, frames, &labels);
  const Partition part = partition_rows(full, trait, target_class, res.exited);
  std::vector<std::string> cats = options.transfer_categories;
  if (cats.empty()) cats = table.scheme().names();
  if (!part.test.empty()) {
    res.transfer.resize(cats.size());
    parallel_for(cats.size(), spec.threads, [&](std::size_t i) {
      res.transfer[i] = feature_transfer_series(full, part.test, part.y_test, cats[i], options.discretization,
                                                options.transfer);
    });
  }
  return res;
}

void write_cohort_membership(std::ostream& out, const std::vector<std::pair<std::string, UserSet>>& cohorts) {
  DelimitedWriter w(out);
  w.row({"user_id", "cohort"});
  for (const auto& [name, users] : cohorts) {
    for (const auto& u : users) w.row({u, name});
  }
}

void write_ne_fp(std::ostream& out, const NeFpComparison& cmp) {
  DelimitedWriter w(out);
  w.row({"frame", "auc_ne", "auc_fp", "gain"});
  for (std::size_t i = 0; i < cmp.gain.size(); ++i) {
    const auto& a = cmp.new_entry.frames[i];
    const auto& b = cmp.fixed_population.frames[i];
    w.row({std::to_string(a.horizon), a.present ? format_double(a.mean_auc) : "nan",
           b.present ? format_double(b.mean_auc) : "nan", format_double(cmp.gain[i])});
  }
}

}  // namespace crumbs
