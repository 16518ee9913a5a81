#include "crumbs/ingest.hpp"

#include <expat.h>

#include <algorithm>
#include <exception>
#include <istream>
#include <memory>
#include <ostream>
#include <string_view>

#include <json.hpp>

#include "binary_io.hpp"
#include "crumbs/delimited.hpp"

namespace crumbs {

std::string IngestReport::to_json() const {
  nlohmann::ordered_json j;
  j["revisions_scanned"] = revisions_scanned;
  j["events_emitted"] = events_emitted;
  j["pages_seen"] = pages_seen;
  j["users_seen"] = users_seen;
  j["skipped_unmapped_namespace"] = skipped_unmapped_namespace;
  j["skipped_anonymous"] = skipped_anonymous;
  j["skipped_out_of_range"] = skipped_out_of_range;
  j["skipped_excluded"] = skipped_excluded;
  j["parse_errors"] = parse_errors;
  j["bytes_read"] = bytes_read;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// MediaWiki dump
// ---------------------------------------------------------------------------

namespace {

enum class Field { None, Title, Ns, PageId, Timestamp, Username, Ip };

struct PendingRevision {
  std::string timestamp;
  std::string username;
  bool named = false;
};

// Expat callback state. Only the current page is held in memory.
class DumpHandler {
 public:
  DumpHandler(const TimeGrid& grid, const WikiDumpOptions& options, const EventSink& sink)
      : grid_(grid), options_(options), sink_(sink) {}

  void start(std::string_view name) {
    path_.emplace_back(name);
    field_ = Field::None;
    if (name == "page") {
      in_page_ = true;
      page_ns_.clear();
      page_id_.clear();
      revisions_.clear();
    } else if (!in_page_) {
      return;
    } else if (name == "revision" && parent_is("page")) {
      in_revision_ = true;
      revisions_.emplace_back();
    } else if (in_revision_ && name == "contributor") {
      in_contributor_ = true;
    } else if (name == "ns" && parent_is("page")) {
      field_ = Field::Ns;
    } else if (name == "id" && parent_is("page")) {
      field_ = Field::PageId;
    } else if (name == "title" && parent_is("page")) {
      field_ = Field::Title;
    } else if (name == "timestamp" && in_revision_ && parent_is("revision")) {
      field_ = Field::Timestamp;
    } else if (name == "username" && in_contributor_) {
      field_ = Field::Username;
    } else if (name == "ip" && in_contributor_) {
      field_ = Field::Ip;
    }
    text_.clear();
  }

  void end(std::string_view name) {
    switch (field_) {
      case Field::Ns: page_ns_ = text_; break;
      case Field::PageId: page_id_ = text_; break;
      case Field::Timestamp: revisions_.back().timestamp = text_; break;
      case Field::Username:
        revisions_.back().username = text_;
        revisions_.back().named = !text_.empty();
        break;
      default: break;
    }
    field_ = Field::None;
    text_.clear();
    if (name == "contributor") {
      in_contributor_ = false;
    } else if (name == "revision" && in_revision_ && parent_is("page")) {
      in_revision_ = false;
    } else if (name == "page" && in_page_) {
      flush_page();
      in_page_ = false;
    }
    path_.pop_back();
  }

  void text(std::string_view s) {
    if (field_ != Field::None) text_.append(s);
  }

  WikiDumpResult take_result() {
    result_.report.users_seen = result_.first_edits.size();
    return std::move(result_);
  }

  IngestReport& report() { return result_.report; }

 private:
  bool parent_is(std::string_view name) const {
    return path_.size() >= 2 && path_[path_.size() - 2] == name;
  }

  void flush_page() {
    IngestReport& rep = result_.report;
    ++rep.pages_seen;
    std::optional<BasicCategory> category;
    if (auto ns = parse_int(page_ns_)) category = try_map_namespace(static_cast<int>(*ns));
    const std::optional<long long> ns_code = parse_int(page_ns_);
    ThemeSet themes;
    if (options_.themes && category == BasicCategory::Content) {
      if (auto it = options_.themes->find(page_id_); it != options_.themes->end()) themes = it->second;
    }
    for (PendingRevision& rev : revisions_) {
      ++rep.revisions_scanned;
      const auto ts = parse_iso8601(rev.timestamp);
      if (!ts) {
        ++rep.parse_errors;
        continue;
      }
      if (!rev.named) {
        ++rep.skipped_anonymous;
        continue;
      }
      if (options_.excluded && options_.excluded->count(rev.username)) {
        ++rep.skipped_excluded;
        continue;
      }
      auto [it, inserted] = result_.first_edits.try_emplace(rev.username, *ts);
      if (!inserted && *ts < it->second) it->second = *ts;
      if (!category) {
        ++rep.skipped_unmapped_namespace;
        continue;
      }
      if (!grid_.frame_of(*ts)) {
        ++rep.skipped_out_of_range;
        continue;
      }
      Event e;
      e.user_id = std::move(rev.username);
      e.timestamp = *ts;
      e.namespace_code = static_cast<int>(*ns_code);
      e.category = *category;
      e.themes = themes;
      ++rep.events_emitted;
      sink_(std::move(e));
    }
    revisions_.clear();
  }

  const TimeGrid& grid_;
  const WikiDumpOptions& options_;
  const EventSink& sink_;
  WikiDumpResult result_;

  std::vector<std::string> path_;
  Field field_ = Field::None;
  std::string text_;
  bool in_page_ = false;
  bool in_revision_ = false;
  bool in_contributor_ = false;
  std::string page_ns_;
  std::string page_id_;
  std::vector<PendingRevision> revisions_;
};

struct ParserContext {
  XML_Parser parser = nullptr;
  DumpHandler* handler = nullptr;
  std::exception_ptr failure;
};

void on_start(void* data, const XML_Char* name, const XML_Char** /*attrs*/) {
  auto* ctx = static_cast<ParserContext*>(data);
  try {
    ctx->handler->start(name);
  } catch (...) {
    ctx->failure = std::current_exception();
    XML_StopParser(ctx->parser, XML_FALSE);
  }
}

void on_end(void* data, const XML_Char* name) {
  auto* ctx = static_cast<ParserContext*>(data);
  try {
    ctx->handler->end(name);
  } catch (...) {
    ctx->failure = std::current_exception();
    XML_StopParser(ctx->parser, XML_FALSE);
  }
}

void on_text(void* data, const XML_Char* s, int len) {
  auto* ctx = static_cast<ParserContext*>(data);
  ctx->handler->text(std::string_view(s, static_cast<std::size_t>(len)));
}

struct ParserDeleter {
  void operator()(XML_ParserStruct* p) const { XML_ParserFree(p); }
};

}  // namespace

WikiDumpResult read_wiki_dump(std::istream& in, const TimeGrid& grid, const WikiDumpOptions& options,
                              const EventSink& sink) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate(nullptr));
  if (!parser) throw Error(ErrorKind::IoError, "cannot allocate XML parser");
  DumpHandler handler(grid, options, sink);
  ParserContext ctx{parser.get(), &handler, nullptr};
  XML_SetUserData(parser.get(), &ctx);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);

  std::vector<char> buffer(std::max<std::size_t>(options.chunk_bytes, 4096));
  for (;;) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = in.gcount();
    const bool last = got < static_cast<std::streamsize>(buffer.size());
    handler.report().bytes_read += static_cast<std::uint64_t>(got);
    if (XML_Parse(parser.get(), buffer.data(), static_cast<int>(got), last ? XML_TRUE : XML_FALSE) ==
        XML_STATUS_ERROR) {
      if (ctx.failure) std::rethrow_exception(ctx.failure);
      throw MalformedXml(static_cast<std::uint64_t>(XML_GetCurrentByteIndex(parser.get())),
                         XML_ErrorString(XML_GetErrorCode(parser.get())));
    }
    if (last) break;
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read failure on dump stream");
  return handler.take_result();
}

WikiDumpEvents read_wiki_dump(std::istream& in, const TimeGrid& grid, const WikiDumpOptions& options) {
  WikiDumpEvents out;
  out.result = read_wiki_dump(in, grid, options, [&](Event&& e) { out.events.push_back(std::move(e)); });
  return out;
}

// ---------------------------------------------------------------------------
// Delimited inputs
// ---------------------------------------------------------------------------

namespace {

ThemeSet parse_theme_list(std::string_view text, std::size_t line) {
  ThemeSet set;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    auto end = text.find(';', begin);
    if (end == std::string_view::npos) end = text.size();
    const auto name = text.substr(begin, end - begin);
    if (!name.empty()) {
      auto theme = parse_theme(name);
      if (!theme) throw RowError(line, "unknown theme '" + std::string(name) + "'");
      set.insert(*theme);
    }
    begin = end + 1;
  }
  return set;
}

std::string join_themes(ThemeSet set) {
  std::string out;
  for (Theme t : set.members()) {
    if (!out.empty()) out += ';';
    out += to_string(t);
  }
  return out;
}

}  // namespace

EventLogResult read_event_log(std::istream& in, bool strict) {
  DelimitedReader reader(in);
  reader.expect_columns({"user_id", "timestamp", "category"}, {"themes"});
  const bool has_themes = reader.header().size() == 4;
  EventLogResult out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    try {
      if (f.size() != reader.header().size()) {
        throw RowError(reader.line(), "expected " + std::to_string(reader.header().size()) + " fields, got " +
                                          std::to_string(f.size()));
      }
      if (f[0].empty()) throw RowError(reader.line(), "empty user_id");
      auto ts = parse_iso8601(f[1]);
      if (!ts) throw RowError(reader.line(), "bad timestamp '" + f[1] + "'");
      auto cat = parse_basic_category(f[2]);
      if (!cat) throw RowError(reader.line(), "unknown category '" + f[2] + "'");
      Event e;
      e.user_id = f[0];
      e.timestamp = *ts;
      e.category = *cat;
      if (has_themes) e.themes = parse_theme_list(f[3], reader.line());
      out.events.push_back(std::move(e));
    } catch (const RowError& err) {
      if (strict) throw;
      out.row_errors.push_back(err);
    }
  }
  return out;
}

void write_event_log(std::ostream& out, const std::vector<Event>& events, bool with_themes) {
  DelimitedWriter w(out);
  if (with_themes) {
    w.row({"user_id", "timestamp", "category", "themes"});
  } else {
    w.row({"user_id", "timestamp", "category"});
  }
  for (const Event& e : events) {
    if (with_themes) {
      w.row({e.user_id, format_iso8601(e.timestamp), std::string(to_string(e.category)), join_themes(e.themes)});
    } else {
      w.row({e.user_id, format_iso8601(e.timestamp), std::string(to_string(e.category))});
    }
  }
}

LabelTable read_trait_labels(std::istream& in) {
  DelimitedReader reader(in);
  reader.expect_columns({"user_id", "trait", "class"});
  LabelTable labels;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 3) throw RowError(reader.line(), "expected 3 fields");
    auto trait = parse_trait(f[1]);
    if (!trait) throw Error(ErrorKind::SchemaError, "line " + std::to_string(reader.line()) + ": unknown trait '" + f[1] + "'");
    auto value = normalize_class_value(*trait, f[2]);
    if (!value) {
      throw Error(ErrorKind::UnknownClass, "line " + std::to_string(reader.line()) + ": '" + f[2] +
                                               "' is not a " + std::string(to_string(*trait)) + " class");
    }
    auto& traits = labels[f[0]];
    auto [it, inserted] = traits.emplace(*trait, *value);
    if (!inserted && it->second != *value) {
      throw Error(ErrorKind::ConflictError, "line " + std::to_string(reader.line()) + ": user '" + f[0] +
                                                "' has conflicting " + std::string(to_string(*trait)) +
                                                " labels '" + it->second + "' and '" + *value + "'");
    }
  }
  return labels;
}

void write_trait_labels(std::ostream& out, const LabelTable& labels) {
  DelimitedWriter w(out);
  w.row({"user_id", "trait", "class"});
  for (const auto& [user, traits] : labels) {
    for (const auto& [trait, value] : traits) w.row({user, std::string(to_string(trait)), value});
  }
}

PageThemeMap read_page_theme_map(std::istream& in) {
  DelimitedReader reader(in);
  reader.expect_columns({"page_id", "theme"});
  PageThemeMap map;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) throw RowError(reader.line(), "expected 2 fields");
    auto theme = parse_theme(f[1]);
    if (!theme) {
      throw Error(ErrorKind::UnknownTheme, "line " + std::to_string(reader.line()) + ": '" + f[1] + "'");
    }
    map[f[0]].insert(*theme);
  }
  return map;
}

FirstEditTable read_first_edits(std::istream& in) {
  DelimitedReader reader(in);
  reader.expect_columns({"user_id", "first_edit_timestamp"});
  FirstEditTable table;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) throw RowError(reader.line(), "expected 2 fields");
    auto ts = parse_iso8601(f[1]);
    if (!ts) throw RowError(reader.line(), "bad timestamp '" + f[1] + "'");
    auto [it, inserted] = table.try_emplace(f[0], *ts);
    if (!inserted && *ts < it->second) it->second = *ts;
  }
  return table;
}

void write_first_edits(std::ostream& out, const FirstEditTable& table) {
  DelimitedWriter w(out);
  w.row({"user_id", "first_edit_timestamp"});
  for (const auto& [user, ts] : table) w.row({user, format_iso8601(ts)});
}

std::set<std::string> read_user_list(std::istream& in) {
  DelimitedReader reader(in);
  reader.expect_columns({"user_id"});
  std::set<std::string> users;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (!f.empty() && !f[0].empty()) users.insert(f[0]);
  }
  return users;
}

FirstEditTable first_edits_of(const std::vector<Event>& events) {
  FirstEditTable table;
  for (const Event& e : events) {
    auto [it, inserted] = table.try_emplace(e.user_id, e.timestamp);
    if (!inserted && e.timestamp < it->second) it->second = e.timestamp;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

namespace {
constexpr char kEventMagic[8] = {'C', 'R', 'M', 'B', 'E', 'V', 'T', '\0'};
constexpr std::uint32_t kEventVersion = 1;
}  // namespace

void write_event_cache(std::ostream& out, const TimeGrid& grid, const std::vector<Event>& events) {
  using namespace binary;
  put_magic(out, kEventMagic, kEventVersion);
  put_string(out, grid.origin_string());
  put<std::int32_t>(out, grid.frame_count());
  put<std::uint64_t>(out, events.size());
  for (const Event& e : events) {
    put_string(out, e.user_id);
    put<std::int64_t>(out, e.timestamp.time_since_epoch().count());
    put<std::uint8_t>(out, e.namespace_code ? 1 : 0);
    put<std::int32_t>(out, e.namespace_code.value_or(0));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.category));
    put<std::uint32_t>(out, e.themes.bits());
  }
  if (!out) throw Error(ErrorKind::IoError, "write failure on event cache");
}

EventCache read_event_cache(std::istream& in) {
  using namespace binary;
  expect_magic(in, kEventMagic, kEventVersion);
  const std::string origin = get_string(in);
  const auto frames = get<std::int32_t>(in);
  EventCache cache{TimeGrid::from_string(origin, frames), {}};
  const auto n = get<std::uint64_t>(in);
  cache.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
  for (std::uint64_t i = 0; i < n; ++i) {
    Event e;
    e.user_id = get_string(in);
    e.timestamp = Instant{std::chrono::seconds{get<std::int64_t>(in)}};
    const bool has_ns = get<std::uint8_t>(in) != 0;
    const auto ns = get<std::int32_t>(in);
    if (has_ns) e.namespace_code = ns;
    const auto cat = get<std::uint8_t>(in);
    if (cat >= kBasicCategoryCount) throw Error(ErrorKind::SchemaError, "corrupt category in event cache");
    e.category = static_cast<BasicCategory>(cat);
    e.themes = ThemeSet(get<std::uint32_t>(in));
    cache.events.push_back(std::move(e));
  }
  return cache;
}

}  // namespace crumbs
