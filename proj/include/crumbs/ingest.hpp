#pragma once

// Readers for the toolkit's inputs: MediaWiki stub-meta-history dumps,
// generic delimited event logs, trait labels, page->theme maps and the
// first-edit side table. Also the binary event cache used between CLI runs.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "crumbs/error.hpp"
#include "crumbs/trace_model.hpp"

namespace crumbs {

using LabelTable = std::map<std::string, UserTraits>;
using PageThemeMap = std::unordered_map<std::string, ThemeSet>;
using FirstEditTable = std::map<std::string, Instant>;

struct IngestReport {
  std::uint64_t revisions_scanned = 0;
  std::uint64_t events_emitted = 0;
  std::uint64_t pages_seen = 0;
  std::uint64_t users_seen = 0;
  std::uint64_t skipped_unmapped_namespace = 0;
  std::uint64_t skipped_anonymous = 0;
  std::uint64_t skipped_out_of_range = 0;
  std::uint64_t skipped_excluded = 0;
  std::uint64_t parse_errors = 0;
  std::uint64_t bytes_read = 0;

  // events_emitted plus every skip counter; equals revisions_scanned.
  std::uint64_t accounted() const {
    return events_emitted + skipped_unmapped_namespace + skipped_anonymous + skipped_out_of_range +
           skipped_excluded + parse_errors;
  }

  std::string to_json() const;
  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

using EventSink = std::function<void(Event&&)>;

struct WikiDumpOptions {
  const PageThemeMap* themes = nullptr;           // optional
  const std::set<std::string>* excluded = nullptr;  // optional user exclusion list (e.g. bots)
  std::size_t chunk_bytes = 1 << 16;
};

struct WikiDumpResult {
  IngestReport report;
  // Earliest revision timestamp per named contributor over the whole dump,
  // including revisions outside the grid and in unmapped namespaces.
  FirstEditTable first_edits;
};

// Single streaming pass; the sink receives events in document order.
// Throws MalformedXml with the byte offset of the failure.
WikiDumpResult read_wiki_dump(std::istream& in, const TimeGrid& grid, const WikiDumpOptions& options,
                              const EventSink& sink);

struct WikiDumpEvents {
  std::vector<Event> events;
  WikiDumpResult result;
};
WikiDumpEvents read_wiki_dump(std::istream& in, const TimeGrid& grid, const WikiDumpOptions& options = {});

// Generic event log: header `user_id,timestamp,category[,themes]`.
struct EventLogResult {
  std::vector<Event> events;
  std::vector<RowError> row_errors;  // only populated when strict == false
};
EventLogResult read_event_log(std::istream& in, bool strict = true);
void write_event_log(std::ostream& out, const std::vector<Event>& events, bool with_themes = true);

// Header `user_id,trait,class`. Exact duplicates collapse; a conflicting
// class for the same (user, trait) throws ConflictError.
LabelTable read_trait_labels(std::istream& in);
void write_trait_labels(std::ostream& out, const LabelTable& labels);

// Header `page_id,theme`; rows for the same page accumulate.
PageThemeMap read_page_theme_map(std::istream& in);

// Header `user_id,first_edit_timestamp`.
FirstEditTable read_first_edits(std::istream& in);
void write_first_edits(std::ostream& out, const FirstEditTable& table);

// One user id per line (header `user_id`).
std::set<std::string> read_user_list(std::istream& in);

// Earliest event per user.
FirstEditTable first_edits_of(const std::vector<Event>& events);

// Binary event cache (magic "CRMBEVT", little-endian, versioned). Round-trips
// every Event field exactly.
void write_event_cache(std::ostream& out, const TimeGrid& grid, const std::vector<Event>& events);
struct EventCache {
  TimeGrid grid;
  std::vector<Event> events;
};
EventCache read_event_cache(std::istream& in);

}  // namespace crumbs
