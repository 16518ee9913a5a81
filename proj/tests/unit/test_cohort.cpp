#include <cmath>
#include <sstream>

#include "crumbs/cohort.hpp"
#include "crumbs/error.hpp"
#include "crumbs/synth.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crumbs;
using testing::make_event;

namespace {

const TimeGrid kGrid = TimeGrid::from_string("2007-01-01", 6);

TrainSpec quick_spec() {
  TrainSpec s;
  s.grid_size = 10;
  s.n_repeats = 3;
  s.seed = 11;
  return s;
}

// Busy users with no activity dispersion: every frame between arrival and
// exit has events, so activity bookkeeping equals the generator's.
SynthConfig busy_config(int frames) {
  SynthConfig cfg = reference_config("planted_signal");
  cfg.n_users = 400;
  cfg.frames = frames;
  cfg.dispersion = 0.0;
  for (auto& c : cfg.classes) {
    for (auto& r : c.rates) r *= 6.0;
  }
  return cfg;
}

}  // namespace

TEST_SUITE("cohort") {

TEST_CASE("cohort definitions") {
  const std::vector<Event> ev{make_event("first_only", "2007-02-01T00:00:00", BasicCategory::Content),
                              make_event("late", "2007-07-10T00:00:00", BasicCategory::User),
                              make_event("steady", "2007-01-10T00:00:00", BasicCategory::Content),
                              make_event("steady", "2008-04-10T00:00:00", BasicCategory::Content)};
  const auto ne = select_cohort(ev, kGrid, {CohortKind::NewEntry, 0});
  const auto fp = select_cohort(ev, kGrid, {CohortKind::FixedPopulation, 0});
  const auto ex = select_cohort(ev, kGrid, {CohortKind::Exited, 4});
  CHECK(ne == UserSet{"first_only", "late", "steady"});
  CHECK(fp == UserSet{"first_only", "steady"});
  CHECK(ex == UserSet{"first_only", "late"});
  CHECK(select_cohort(ev, kGrid, {CohortKind::Exited, 2}) == UserSet{"first_only"});
  CHECK(select_cohort(ev, kGrid, {CohortKind::Exited, 1}) == UserSet{"first_only"});
  const std::vector<Event> stayers(ev.begin() + 2, ev.end());
  try {
    select_cohort(stayers, kGrid, {CohortKind::Exited, 1});
    FAIL("expected EmptyCohort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCohort);
  }
  CHECK_THROWS_AS(select_cohort(ev, kGrid, {CohortKind::Exited, 6}), Error);
  CHECK_THROWS_AS(select_cohort(ev, kGrid, {CohortKind::Exited, 0}), Error);
  CHECK(parse_cohort_kind("FP") == CohortKind::FixedPopulation);
  CHECK_THROWS_AS(parse_cohort_kind("everyone"), Error);
}

TEST_CASE("exited users keep zero counts and zero flags after leaving") {
  const std::vector<Event> ev{make_event("gone", "2007-02-01T00:00:00", BasicCategory::Content),
                              make_event("stay", "2007-02-01T00:00:00", BasicCategory::Content),
                              make_event("stay", "2008-05-01T00:00:00", BasicCategory::Wiki)};
  const auto table = ActivityTable::build(ev, kGrid, CategoryScheme());
  const auto ds = build_temporal_dataset(table, 6);
  const auto row = static_cast<Eigen::Index>(std::find(ds.user_ids.begin(), ds.user_ids.end(), "gone") - ds.user_ids.begin());
  for (int f = 5; f <= 6; ++f) {
    for (const auto& c : CategoryScheme().names()) {
      CHECK(ds.features(row, *ds.column_index(c + "_" + std::to_string(f))) == 0.0);
      CHECK(ds.features(row, *ds.column_index("p_" + c + "_" + std::to_string(f))) == 0.0);
    }
  }
}

TEST_CASE("exited set equals the generator's exit bookkeeping") {
  SynthConfig cfg = busy_config(8);
  cfg.arrival = {0.4, 0.2, 0.1, 0.1, 0.1, 0.1, 0, 0};
  cfg.exit_hazard = {0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
  for (auto& c : cfg.classes) c.exit_scale = 1.0, c.exit_activity_exponent = 0.0;
  const auto out = generate(cfg);
  const auto table = ActivityTable::build(out.events, cfg.grid(), CategoryScheme(), &out.first_edits);
  for (int cutoff = 1; cutoff < 8; ++cutoff) {
    UserSet expected;
    for (const auto& u : out.truth.users) {
      if (u.arrival < cutoff && u.exit && *u.exit <= cutoff) expected.insert(u.user_id);
    }
    if (expected.empty()) continue;
    const auto got = select_cohort(table, {CohortKind::Exited, cutoff});
    CHECK(got == expected);
    for (const auto& u : table.users()) {
      if (got.count(u.user_id)) {
        for (int f = cutoff; f < 8; ++f) CHECK_FALSE(u.active_in(f, table.categories()));
      }
    }
  }
  const auto fp = select_cohort(table, {CohortKind::FixedPopulation, 0});
  const auto ne = select_cohort(table, {CohortKind::NewEntry, 0});
  CHECK(std::includes(ne.begin(), ne.end(), fp.begin(), fp.end()));
  const auto series = build_temporal_dataset_series(table);
  for (const auto& ds : series.datasets) {
    const UserSet members(ds.user_ids.begin(), ds.user_ids.end());
    const UserSet fp_members = [&] {
      UserSet s;
      for (const auto& u : members) {
        if (fp.count(u)) s.insert(u);
      }
      return s;
    }();
    CHECK(fp_members == fp);
  }
}

TEST_CASE("certain exit at frame k") {
  const int k = 3;
  SynthConfig cfg = busy_config(6);
  cfg.arrival = {0.5, 0.3, 0.2, 0, 0, 0};
  cfg.exit_hazard = {0, 0, 0, 1.0, 0, 0};
  for (auto& c : cfg.classes) c.exit_scale = 1.0, c.exit_activity_exponent = 0.0;
  const auto out = generate(cfg);
  const auto grid = cfg.grid();
  for (const auto& e : out.events) CHECK(*grid.frame_of(e.timestamp) < k);
  UserSet arrived;
  for (const auto& u : out.truth.users) {
    if (u.arrival < k) arrived.insert(u.user_id);
  }
  CHECK(arrived.size() == out.truth.users.size());
  CHECK(select_cohort(out.events, grid, {CohortKind::Exited, k}) == arrived);
}

TEST_CASE("without newcomers NE and FP coincide") {
  SynthConfig cfg = reference_config("newcomer_signal");
  cfg.n_users = 300;
  cfg.frames = 4;
  cfg.arrival = {1, 0, 0, 0};
  cfg.exit_hazard.clear();
  const auto out = generate(cfg);
  const auto table = ActivityTable::build(out.events, cfg.grid(), CategoryScheme(), &out.first_edits);
  const auto cmp = compare_ne_fp(table, out.labels, Trait::Gender, "female", quick_spec());
  CHECK(cmp.fp_users == table.size());
  REQUIRE(cmp.gain.size() == 4);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(cmp.gain[f] == 0.0);
    CHECK(cmp.new_entry.frames[f].aucs == cmp.fixed_population.frames[f].aucs);
  }
  const auto again = compare_ne_fp(table, out.labels, Trait::Gender, "female", quick_spec());
  for (std::size_t f = 0; f < 4; ++f) CHECK(again.gain[f] == cmp.gain[f]);
  std::ostringstream csv;
  write_ne_fp(csv, cmp);
  CHECK(csv.str().rfind("frame,auc_ne,auc_fp,gain\n1,", 0) == 0);
}

TEST_CASE("exited cohort transfer vanishes after the cutoff") {
  SynthConfig cfg = reference_config("exit_amplify");
  cfg.n_users = 600;
  const auto out = generate(cfg);
  const auto table = ActivityTable::build(out.events, cfg.grid(), CategoryScheme(), &out.first_edits);
  const int cutoff = 4;
  TrainSpec spec = quick_spec();
  spec.n_repeats = 2;
  const auto res = exited_eval(table, out.labels, Trait::Gender, "female", cutoff, spec);
  CHECK(res.horizons == std::vector<int>{5, 6, 7, 8});
  CHECK(res.series.frames.size() == 4);
  CHECK(res.models.size() == 4);
  CHECK(!res.notes.empty());
  REQUIRE(res.transfer.size() == 6);
  for (const auto& s : res.transfer) {
    REQUIRE(s.points.size() == 8);
    for (std::size_t t = cutoff; t < 8; ++t) CHECK(s.points[t].transfer == 0.0);
  }
  for (const auto& fe : res.series.frames) {
    if (!fe.present) continue;
    CHECK(fe.n_test == [&] {
      std::size_t labeled = 0;
      for (const auto& u : res.exited) labeled += out.labels.count(u);
      return labeled;
    }());
  }
}

TEST_CASE("exited evaluation needs users on both sides of the cutoff") {
  const std::vector<Event> ev{make_event("a", "2007-02-01T00:00:00", BasicCategory::Content),
                              make_event("b", "2007-03-01T00:00:00", BasicCategory::Content)};
  const auto table = ActivityTable::build(ev, kGrid, CategoryScheme());
  LabelTable labels;
  labels["a"][Trait::Gender] = "male";
  labels["b"][Trait::Gender] = "female";
  try {
    exited_eval(table, labels, Trait::Gender, "female", 3, quick_spec());
    FAIL("expected EmptyCohort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCohort);
  }
}

TEST_CASE("cohort membership export") {
  std::ostringstream out;
  write_cohort_membership(out, {{"exited", {"b", "a"}}, {"fixed_population", {"c"}}});
  CHECK(out.str() == "user_id,cohort\na,exited\nb,exited\nc,fixed_population\n");
}

}
