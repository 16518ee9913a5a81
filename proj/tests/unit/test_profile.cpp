#include <algorithm>
#include <random>
#include <sstream>

#include "crumbs/error.hpp"
#include "crumbs/profile.hpp"
#include "crumbs/synth.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crumbs;
using testing::make_event;

namespace {

const TimeGrid kGrid = TimeGrid::from_string("2007-01-01", 6);

const ClassShare& share(const std::vector<ClassShare>& rows, const std::string& cls, const std::string& cat) {
  return *std::find_if(rows.begin(), rows.end(),
                       [&](const ClassShare& r) { return r.class_value == cls && r.category == cat; });
}

const ClassTemporalShare& tshare(const std::vector<ClassTemporalShare>& rows, const std::string& cls,
                                 const std::string& cat, int frame) {
  return *std::find_if(rows.begin(), rows.end(), [&](const ClassTemporalShare& r) {
    return r.class_value == cls && r.category == cat && r.frame == frame;
  });
}

std::vector<Event> repeat(const std::string& user, const std::string& iso, BasicCategory c, int n) {
  return std::vector<Event>(static_cast<std::size_t>(n), make_event(user, iso, c));
}

void append(std::vector<Event>& to, const std::vector<Event>& from) { to.insert(to.end(), from.begin(), from.end()); }

}  // namespace

TEST_SUITE("profile") {

TEST_CASE("active and new users") {
  const std::vector<Event> ev{make_event("a", "2007-04-02T00:00:00", BasicCategory::Content),
                              make_event("a", "2008-01-02T00:00:00", BasicCategory::User),
                              make_event("b", "2007-04-03T00:00:00", BasicCategory::Wiki)};
  const auto rows = population_dynamics(ActivityTable::build(ev, kGrid, CategoryScheme()));
  REQUIRE(rows.size() == 6);
  CHECK(rows[1].active == 2);
  CHECK(rows[1].new_users == 2);
  CHECK(rows[4].active == 1);
  CHECK(rows[4].new_users == 0);
  CHECK(rows[0].active == 0);
  CHECK(rows[1].revisions[0] == 1);
  CHECK(rows[1].revisions[4] == 1);
  CHECK(rows[4].revisions[2] == 1);
  std::ostringstream csv;
  write_population_dynamics(csv, rows, CategoryScheme());
  CHECK(csv.str().rfind("frame,active,new,CONTENT,TALK-C,USER,TALK-U,WIKI,INFRA\n1,0,0,", 0) == 0);
}

TEST_CASE("population counts equal the generator's bookkeeping") {
  SynthConfig cfg = reference_config("planted_signal");
  cfg.n_users = 800;
  cfg.dispersion = 0.0;
  for (auto& c : cfg.classes) {
    for (auto& r : c.rates) r *= 6.0;
  }
  const auto out = generate(cfg);
  const auto rows = population_dynamics(ActivityTable::build(out.events, cfg.grid(), CategoryScheme()));
  std::size_t new_total = 0;
  for (int f = 0; f < cfg.frames; ++f) {
    std::size_t arrived = 0, alive = 0;
    for (const auto& u : out.truth.users) {
      arrived += u.arrival == f;
      alive += u.arrival <= f && (!u.exit || *u.exit > f);
    }
    CHECK(rows[static_cast<std::size_t>(f)].new_users == arrived);
    CHECK(rows[static_cast<std::size_t>(f)].active == alive);
    CHECK(rows[static_cast<std::size_t>(f)].active >= rows[static_cast<std::size_t>(f)].new_users);
    new_total += rows[static_cast<std::size_t>(f)].new_users;
  }
  CHECK(new_total == out.truth.users.size());
}

TEST_CASE("class shares") {
  std::vector<Event> ev = repeat("m", "2007-01-05T00:00:00", BasicCategory::Content, 59);
  append(ev, repeat("m", "2007-01-06T00:00:00", BasicCategory::User, 41));
  append(ev, repeat("f1", "2007-01-05T00:00:00", BasicCategory::Content, 2));
  append(ev, repeat("f1", "2007-01-05T00:00:00", BasicCategory::Wiki, 3));
  append(ev, repeat("f2", "2007-04-05T00:00:00", BasicCategory::Content, 6));
  append(ev, repeat("f2", "2007-04-05T00:00:00", BasicCategory::Wiki, 4));
  LabelTable labels;
  labels["m"][Trait::Gender] = "male";
  labels["f1"][Trait::Gender] = "female";
  labels["f2"][Trait::Gender] = "female";
  labels["silent"][Trait::Gender] = "female";
  const auto table = ActivityTable::build(ev, kGrid, CategoryScheme());
  const auto rows = class_feature_shares(table, labels, Trait::Gender);
  CHECK(share(rows, "male", "CONTENT").mean_share == doctest::Approx(0.59));
  CHECK(share(rows, "female", "CONTENT").mean_share == doctest::Approx(0.5));
  CHECK(share(rows, "female", "CONTENT").users == 2);
  const auto pooled = class_feature_shares(table, labels, Trait::Gender, {true});
  CHECK(share(pooled, "female", "CONTENT").mean_share == doctest::Approx(8.0 / 15.0));
  for (const std::string cls : {"male", "female"}) {
    double total = 0;
    for (const auto& c : CategoryScheme().names()) total += share(rows, cls, c).mean_share;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  LabelTable nobody;
  nobody["silent"][Trait::Gender] = "female";
  CHECK_THROWS_AS(class_feature_shares(table, nobody, Trait::Gender), Error);
}

TEST_CASE("extended shares overlap") {
  std::vector<Event> ev{make_event("u", "2007-01-05T00:00:00", BasicCategory::Content, {Theme::Arts, Theme::People}),
                        make_event("u", "2007-01-05T00:00:00", BasicCategory::User)};
  LabelTable labels;
  labels["u"][Trait::Gender] = "female";
  const auto rows = class_feature_shares(ActivityTable::build(ev, kGrid, CategoryScheme(SchemeMode::Extended)),
                                         labels, Trait::Gender);
  CHECK(rows.size() == 29);
  CHECK(share(rows, "female", "ARTS").mean_share == 0.5);
  CHECK(share(rows, "female", "PEOPLE").mean_share == 0.5);
  double total = 0;
  for (const auto& r : rows) total += r.mean_share;
  CHECK(total == doctest::Approx(2.0));
}

TEST_CASE("temporal means") {
  std::vector<Event> ev = repeat("m", "2007-01-05T00:00:00", BasicCategory::Content, 3);
  append(ev, repeat("m", "2007-01-05T00:00:00", BasicCategory::User, 1));
  append(ev, repeat("m", "2007-07-05T00:00:00", BasicCategory::User, 2));
  append(ev, repeat("f", "2007-04-05T00:00:00", BasicCategory::Content, 1));
  LabelTable labels;
  labels["m"][Trait::Gender] = "male";
  labels["f"][Trait::Gender] = "female";
  const auto rows = class_temporal_means(ActivityTable::build(ev, kGrid, CategoryScheme()), labels, Trait::Gender);
  CHECK(tshare(rows, "male", "CONTENT", 1).mean_share == 0.75);
  CHECK(tshare(rows, "male", "USER", 1).mean_share == 0.25);
  CHECK_FALSE(tshare(rows, "male", "USER", 2).mean_share.has_value());
  CHECK(tshare(rows, "male", "USER", 3).mean_share == 1.0);
  CHECK(tshare(rows, "male", "CONTENT", 3).mean_share == 0.0);
  CHECK_FALSE(tshare(rows, "female", "CONTENT", 1).mean_share.has_value());
  CHECK(tshare(rows, "female", "CONTENT", 2).mean_share == 1.0);
  std::ostringstream csv;
  write_class_temporal_means(csv, rows);
  CHECK(csv.str().find("female,CONTENT,1,,0") != std::string::npos);
}

TEST_CASE("planted USER drift shows up at its frame") {
  SynthConfig cfg = reference_config("planted_signal");
  cfg.n_users = 2000;
  cfg.arrival = {1, 0, 0, 0, 0, 0, 0, 0};
  cfg.exit_hazard.clear();
  cfg.drift = {{"female", BasicCategory::User, 4, -1, 3.0}};
  const auto out = generate(cfg);
  const auto rows = class_temporal_means(ActivityTable::build(out.events, cfg.grid(), CategoryScheme()), out.labels,
                                         Trait::Gender);
  const double f_before = *tshare(rows, "female", "USER", 4).mean_share;
  const double f_after = *tshare(rows, "female", "USER", 5).mean_share;
  const double m_before = *tshare(rows, "male", "USER", 4).mean_share;
  const double m_after = *tshare(rows, "male", "USER", 5).mean_share;
  MESSAGE("female USER share " << f_before << " -> " << f_after << ", male " << m_before << " -> " << m_after);
  CHECK(f_after > f_before + 0.1);
  CHECK(std::abs(m_after - m_before) < 0.02);
  for (int f = 1; f < 4; ++f) {
    CHECK(std::abs(*tshare(rows, "female", "USER", f).mean_share - f_before) < 0.02);
  }
}

TEST_CASE("reports do not depend on event order") {
  const auto corpus = testing::fuzz_corpus(8, 120, kGrid);
  LabelTable labels;
  for (const auto& [user, t] : corpus.first_edits) {
    labels[user][Trait::Gender] = user.back() % 2 ? "male" : "female";
  }
  auto shuffled = corpus.events;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = ActivityTable::build(corpus.events, kGrid, CategoryScheme());
  const auto b = ActivityTable::build(shuffled, kGrid, CategoryScheme());
  std::ostringstream sa, sb;
  write_population_dynamics(sa, population_dynamics(a), a.scheme());
  write_class_shares(sa, class_feature_shares(a, labels, Trait::Gender));
  write_class_temporal_means(sa, class_temporal_means(a, labels, Trait::Gender));
  write_population_dynamics(sb, population_dynamics(b), b.scheme());
  write_class_shares(sb, class_feature_shares(b, labels, Trait::Gender));
  write_class_temporal_means(sb, class_temporal_means(b, labels, Trait::Gender));
  CHECK(sa.str() == sb.str());
}

}
