#include <fstream>
#include <sstream>

#include "crumbs/error.hpp"
#include "crumbs/ingest.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crumbs;

namespace {

std::string page(int id, int ns, const std::vector<std::pair<std::string, std::string>>& revs) {
  std::string s = "<page><title>P" + std::to_string(id) + "</title><ns>" + std::to_string(ns) + "</ns><id>" +
                  std::to_string(id) + "</id>";
  for (const auto& [who, ts] : revs) {
    s += "<revision><id>9</id><timestamp>" + ts + "</timestamp><contributor>";
    s += who.rfind("ip:", 0) == 0 ? "<ip>" + who.substr(3) + "</ip>" : "<username>" + who + "</username>";
    s += "</contributor><text/></revision>";
  }
  return s + "</page>";
}

std::string dump(const std::vector<std::string>& pages) {
  std::string s = "<mediawiki><siteinfo><sitename>x</sitename></siteinfo>";
  for (const auto& p : pages) s += p;
  return s + "</mediawiki>";
}

WikiDumpEvents parse(const std::string& xml, const TimeGrid& grid = TimeGrid(), const WikiDumpOptions& o = {}) {
  std::istringstream in(xml);
  return read_wiki_dump(in, grid, o);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("two pages with three named revisions") {
  const auto r = parse(dump({page(1, 0, {{"Ann", "2008-01-02T00:00:00Z"}, {"Bob", "2009-05-02T10:00:00Z"}}),
                             page(2, 2, {{"Ann", "2010-01-02T00:00:00Z"}})}));
  CHECK(r.events.size() == 3);
  CHECK(r.result.report.events_emitted == 3);
  CHECK(r.result.report.pages_seen == 2);
  CHECK(r.result.report.users_seen == 2);
  CHECK(r.events[0].category == BasicCategory::Content);
  CHECK(r.events[0].namespace_code == 0);
  CHECK(r.events[2].category == BasicCategory::User);
  CHECK(r.events[2].user_id == "Ann");
}

TEST_CASE("an IP-only contributor is skipped and counted") {
  const auto r = parse(dump({page(1, 0, {{"Ann", "2008-01-02T00:00:00Z"}, {"ip:10.1.1.1", "2009-05-02T10:00:00Z"}}),
                             page(2, 2, {{"Ann", "2010-01-02T00:00:00Z"}})}));
  CHECK(r.result.report.events_emitted == 2);
  CHECK(r.result.report.skipped_anonymous == 1);
  CHECK(r.result.report.revisions_scanned == 3);
}

TEST_CASE("unmapped, out-of-range and excluded revisions are tallied") {
  const std::set<std::string> bots{"Bot"};
  WikiDumpOptions o;
  o.excluded = &bots;
  const auto r = parse(dump({page(1, 16, {{"Ann", "2008-01-02T00:00:00Z"}}),
                             page(2, 0, {{"Ann", "2004-01-02T00:00:00Z"}, {"Bot", "2008-01-02T00:00:00Z"}}),
                             page(3, 1, {{"Cy", "2008-01-02T00:00:00Z"}, {"Cy", "not a time"}})}),
                       TimeGrid(), o);
  const auto& rep = r.result.report;
  CHECK(rep.skipped_unmapped_namespace == 1);
  CHECK(rep.skipped_out_of_range == 1);
  CHECK(rep.skipped_excluded == 1);
  CHECK(rep.parse_errors == 1);
  CHECK(rep.events_emitted == 1);
  CHECK(rep.accounted() == rep.revisions_scanned);
  // The side table sees history outside the window and in unmapped namespaces.
  CHECK(format_iso8601(r.result.first_edits.at("Ann")) == "2004-01-02T00:00:00Z");
  CHECK_FALSE(r.result.first_edits.count("Bot"));
}

TEST_CASE("page themes attach to content revisions only") {
  PageThemeMap themes;
  themes["1"].insert(Theme::Mathematics);
  themes["1"].insert(Theme::Science);
  themes["2"].insert(Theme::Arts);
  WikiDumpOptions o;
  o.themes = &themes;
  const auto r = parse(dump({page(1, 0, {{"Ann", "2008-01-02T00:00:00Z"}}), page(2, 1, {{"Ann", "2008-01-02T00:00:00Z"}})}),
                       TimeGrid(), o);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].themes.size() == 2);
  CHECK(r.events[1].themes.empty());
}

TEST_CASE("malformed XML reports a byte offset") {
  const std::string xml = "<mediawiki><page><ns>0</ns><revision></page></mediawiki>";
  try {
    parse(xml);
    FAIL("expected MalformedXml");
  } catch (const MalformedXml& e) {
    CHECK(e.kind() == ErrorKind::MalformedXml);
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() < xml.size());
  }
  CHECK_THROWS_AS(parse("<mediawiki><page>"), MalformedXml);
}

TEST_CASE("bundled 20-page dump matches its bookkeeping") {
  const std::string xml = slurp(CRUMBS_TEST_DATA "/dump20.xml");
  const auto truth = testing::DumpTruth::from_json(slurp(CRUMBS_TEST_DATA "/dump20.truth.json"));
  const auto r = parse(xml);
  const auto& rep = r.result.report;
  CHECK(rep.pages_seen == 20);
  CHECK(rep.pages_seen == truth.pages);
  CHECK(rep.revisions_scanned == truth.revisions);
  CHECK(rep.events_emitted == truth.events);
  CHECK(rep.skipped_anonymous == truth.anonymous);
  CHECK(rep.skipped_unmapped_namespace == truth.unmapped);
  CHECK(rep.skipped_out_of_range == truth.out_of_range);
  CHECK(rep.parse_errors == 0);
  CHECK(rep.users_seen == truth.named_users.size());
  CHECK(rep.accounted() == rep.revisions_scanned);
  std::array<std::uint64_t, kBasicCategoryCount> per{};
  std::map<int, std::uint64_t> per_ns;
  for (const auto& e : r.events) {
    ++per[static_cast<std::size_t>(e.category)];
    ++per_ns[*e.namespace_code];
  }
  CHECK(per == truth.per_category);
  CHECK(per_ns == truth.per_namespace);

  // The bundled file is exactly what the generator writes.
  const auto regenerated = testing::make_dump_fixture(20130701, 20, TimeGrid());
  CHECK(regenerated.xml == xml);
}

TEST_CASE("generated dumps: conservation and determinism") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = testing::make_dump_fixture(seed, 40, TimeGrid());
    const auto a = parse(f.xml);
    WikiDumpOptions small;
    small.chunk_bytes = 4096;
    const auto b = parse(f.xml, TimeGrid(), small);
    CHECK(a.result.report == b.result.report);
    CHECK(a.events == b.events);
    CHECK(a.result.report.accounted() == a.result.report.revisions_scanned);
    CHECK(a.result.report.events_emitted == f.truth.events);
    CHECK(a.result.report.events_emitted <= a.result.report.revisions_scanned);
  }
}

TEST_CASE("event log reader") {
  SUBCASE("three valid rows") {
    std::istringstream in(
        "user_id,timestamp,category\nu1,2008-01-01T00:00:00Z,CONTENT\nu2,2008-02-01T00:00:00Z,TALK-U\n"
        "u1,2008-03-01T00:00:00,WIKI\n");
    const auto r = read_event_log(in);
    CHECK(r.events.size() == 3);
    CHECK(r.events[1].category == BasicCategory::TalkUser);
    CHECK_FALSE(r.events[0].namespace_code);
  }
  SUBCASE("unknown category is a row error at its line") {
    std::istringstream in("user_id,timestamp,category\nu1,2008-01-01T00:00:00Z,CONTENT\nu1,2008-01-01T00:00:00Z,CONTNT\n");
    try {
      read_event_log(in);
      FAIL("expected RowError");
    } catch (const RowError& e) {
      CHECK(e.line() == 3);
      CHECK(e.kind() == ErrorKind::RowError);
    }
  }
  SUBCASE("lenient mode collects row errors") {
    std::istringstream in("user_id,timestamp,category\nu1,2008-01-01T00:00:00Z,CONTNT\nu1,yesterday,USER\n"
                          "u2,2008-01-01T00:00:00Z,USER\n");
    const auto r = read_event_log(in, false);
    CHECK(r.events.size() == 1);
    REQUIRE(r.row_errors.size() == 2);
    CHECK(r.row_errors[0].line() == 2);
    CHECK(r.row_errors[1].line() == 3);
  }
  SUBCASE("header only") {
    std::istringstream in("user_id,timestamp,category\n");
    CHECK(read_event_log(in).events.empty());
  }
  SUBCASE("tab separated with themes") {
    std::istringstream in("user_id\ttimestamp\tcategory\tthemes\nu1\t2008-01-01T00:00:00Z\tCONTENT\tMATHEMATICS;SCIENCE\n");
    const auto r = read_event_log(in);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].themes.contains(Theme::Mathematics));
    CHECK(r.events[0].themes.contains(Theme::Science));
  }
  SUBCASE("missing columns are a schema error") {
    std::istringstream in("user_id,when,category\n");
    try {
      read_event_log(in);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaError);
    }
  }
  SUBCASE("write and read back") {
    const TimeGrid g = TimeGrid::from_string("2007-01-01", 8);
    auto corpus = testing::fuzz_corpus(5, 30, g);
    std::stringstream ss;
    write_event_log(ss, corpus.events);
    CHECK(read_event_log(ss).events == corpus.events);
  }
}

TEST_CASE("trait labels") {
  SUBCASE("one label") {
    std::istringstream in("user_id,trait,class\nu1,gender,female\n");
    const auto l = read_trait_labels(in);
    CHECK(l.at("u1").at(Trait::Gender) == "female");
  }
  SUBCASE("conflict") {
    std::istringstream in("user_id,trait,class\nu1,gender,female\nu1,gender,male\n");
    try {
      read_trait_labels(in);
      FAIL("expected ConflictError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConflictError);
    }
  }
  SUBCASE("distinct traits and exact duplicates") {
    std::istringstream in("user_id,trait,class\nu1,gender,female\nu1,religion,jewish\nu1,gender,female\n");
    const auto l = read_trait_labels(in);
    CHECK(l.at("u1").size() == 2);
    CHECK(l.at("u1").at(Trait::Religion) == "jewish");
  }
  SUBCASE("bad header") {
    std::istringstream in("user,trait,class\n");
    CHECK_THROWS_AS(read_trait_labels(in), Error);
  }
}

TEST_CASE("page theme map") {
  SUBCASE("rows accumulate") {
    std::istringstream in("page_id,theme\np1,MATHEMATICS\np1,SCIENCE\n");
    const auto m = read_page_theme_map(in);
    CHECK(m.at("p1").size() == 2);
    CHECK(m.at("p1").contains(Theme::Science));
  }
  SUBCASE("unknown theme") {
    std::istringstream in("page_id,theme\np2,ASTROLOGY\n");
    try {
      read_page_theme_map(in);
      FAIL("expected UnknownTheme");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownTheme);
    }
  }
}

TEST_CASE("first-edit side table round trip") {
  FirstEditTable t;
  t["a"] = *parse_iso8601("2005-03-04T05:06:07Z");
  t["b"] = *parse_iso8601("2009-03-04T05:06:07Z");
  std::stringstream ss;
  write_first_edits(ss, t);
  CHECK(read_first_edits(ss) == t);
}

}
