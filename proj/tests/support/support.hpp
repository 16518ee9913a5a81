#pragma once

// Fixture generators and brute-force oracles shared by the unit tests and
// the acceptance runner. Nothing here calls into the code under test except
// for the plain domain types.

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <streambuf>
#include <string>
#include <vector>

#include "crumbs/ingest.hpp"
#include "crumbs/trace_model.hpp"

namespace crumbs::testing {

// ---------------------------------------------------------------------------
// Wikipedia dump fixtures
// ---------------------------------------------------------------------------

// What the generator emitted, tallied while writing.
struct DumpTruth {
  std::uint64_t pages = 0;
  std::uint64_t revisions = 0;
  std::uint64_t events = 0;
  std::uint64_t anonymous = 0;
  std::uint64_t unmapped = 0;
  std::uint64_t out_of_range = 0;
  std::array<std::uint64_t, kBasicCategoryCount> per_category{};
  std::map<int, std::uint64_t> per_namespace;  // emitted events by namespace code
  std::set<std::string> named_users;

  std::string to_json() const;
  static DumpTruth from_json(const std::string& text);
};

// Writes MediaWiki export XML page by page from a seeded generator.
class DumpWriter {
 public:
  DumpWriter(std::uint64_t seed, const TimeGrid& grid);

  std::string header() const;
  std::string footer() const;
  std::string next_page();

  const DumpTruth& truth() const { return truth_; }

 private:
  std::mt19937_64 rng_;
  TimeGrid grid_;
  DumpTruth truth_;
  int page_ = 0;
};

struct DumpFixture {
  std::string xml;
  DumpTruth truth;
};

DumpFixture make_dump_fixture(std::uint64_t seed, int pages, const TimeGrid& grid);

// Input stream source that synthesizes a dump of at least `bytes` bytes on
// the fly, so arbitrarily large inputs never exist in memory or on disk.
class GeneratedDumpBuf : public std::streambuf {
 public:
  GeneratedDumpBuf(std::uint64_t seed, const TimeGrid& grid, std::uint64_t bytes);

  const DumpTruth& truth() const { return writer_.truth(); }
  std::uint64_t produced() const { return produced_; }

 protected:
  int_type underflow() override;

 private:
  DumpWriter writer_;
  std::uint64_t target_;
  std::uint64_t produced_ = 0;
  bool header_done_ = false;
  bool footer_done_ = false;
  std::string chunk_;
};

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

Event make_event(const std::string& user, const std::string& iso, BasicCategory category,
                 std::initializer_list<Theme> themes = {});

// Random users with random events on the grid, including empty frames,
// multi-theme CONTENT edits and users joining before the origin.
struct FuzzCorpus {
  std::vector<Event> events;
  FirstEditTable first_edits;
};
FuzzCorpus fuzz_corpus(std::uint64_t seed, int users, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

// Plug-in entropy (bits) of the joint distribution of the given variables,
// by explicit enumeration of the contingency table.
double joint_entropy_oracle(const std::vector<std::vector<int>>& variables);
double entropy_oracle(std::span<const int> y);
double conditional_entropy_oracle(std::span<const int> y, const std::vector<std::vector<int>>& given);
// Direct sum of p(x,y) log p(x,y) / (p(x) p(y)).
double mutual_information_oracle(std::span<const int> y, std::span<const int> x);
double conditional_mi_oracle(std::span<const int> y, std::span<const int> x,
                             const std::vector<std::vector<int>>& given);

// O(n^2) pair counting, ties count one half.
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

// Equal precision-recall point from `thresholds` evenly spaced thresholds
// between the largest and smallest score, each evaluated by a full scan.
double sweep_epr(std::span<const double> scores, std::span<const int> labels, int thresholds = 10000);

}  // namespace crumbs::testing
