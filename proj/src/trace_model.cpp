#include "crumbs/trace_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "crumbs/error.hpp"

namespace crumbs {

namespace {

constexpr std::array<std::string_view, kBasicCategoryCount> kBasicNames = {
    "CONTENT", "TALK-C", "USER", "TALK-U", "WIKI", "INFRA"};

constexpr std::array<std::string_view, kThemeCount> kThemeNames = {
    "AGRICULTURE", "APPLIED-SCIENCES", "ARTS",      "BELIEF",   "BUSINESS", "CHRONOLOGY",
    "CULTURE",     "EDUCATION",        "ENVIRONMENT", "GEOGRAPHY", "HEALTH", "HISTORY",
    "HUMANITIES",  "LANGUAGE",         "LAW",       "LIFE",     "MATHEMATICS", "NATURE",
    "PEOPLE",      "POLITICS",         "SCIENCE",   "SOCIETY",  "TECHNOLOGY"};

constexpr std::array<std::string_view, 3> kTraitNames = {"gender", "education", "religion"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename Int>
bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

bool is_quarter_start(std::chrono::year_month_day d) {
  const unsigned m = static_cast<unsigned>(d.month());
  return d.ok() && static_cast<unsigned>(d.day()) == 1 && (m - 1) % 3 == 0;
}

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnmappedNamespace: return "UnmappedNamespace";
    case ErrorKind::MalformedXml: return "MalformedXml";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::RowError: return "RowError";
    case ErrorKind::ConflictError: return "ConflictError";
    case ErrorKind::UnknownTheme: return "UnknownTheme";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::MissingUser: return "MissingUser";
    case ErrorKind::DegeneratePrior: return "DegeneratePrior";
    case ErrorKind::DegenerateFeature: return "DegenerateFeature";
    case ErrorKind::EmptyCohort: return "EmptyCohort";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

std::string_view to_string(BasicCategory c) noexcept { return kBasicNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Theme t) noexcept { return kThemeNames[static_cast<std::size_t>(t)]; }

std::optional<BasicCategory> parse_basic_category(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kBasicNames.size(); ++i) {
    if (kBasicNames[i] == name) return static_cast<BasicCategory>(i);
  }
  return std::nullopt;
}

std::optional<Theme> parse_theme(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kThemeNames.size(); ++i) {
    if (kThemeNames[i] == name) return static_cast<Theme>(i);
  }
  return std::nullopt;
}

int ThemeSet::size() const { return std::popcount(bits_); }

std::vector<Theme> ThemeSet::members() const {
  std::vector<Theme> out;
  for (std::size_t i = 0; i < kThemeCount; ++i) {
    if (bits_ & (1u << i)) out.push_back(static_cast<Theme>(i));
  }
  return out;
}

std::optional<BasicCategory> try_map_namespace(int code) noexcept {
  switch (code) {
    case 0:
    case 6: return BasicCategory::Content;
    case 1:
    case 7: return BasicCategory::TalkContent;
    case 2: return BasicCategory::User;
    case 3: return BasicCategory::TalkUser;
    case 4:
    case 5: return BasicCategory::Wiki;
    case 8:
    case 9:
    case 10:
    case 11:
    case 12:
    case 13:
    case 14:
    case 15:
    case 100:
    case 101: return BasicCategory::Infra;
    default: return std::nullopt;
  }
}

BasicCategory map_namespace(int code) {
  if (auto c = try_map_namespace(code)) return *c;
  throw Error(ErrorKind::UnmappedNamespace, "namespace code " + std::to_string(code));
}

std::vector<int> mapped_namespace_codes() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 100, 101};
}

std::optional<Instant> parse_iso8601(std::string_view text) noexcept {
  using namespace std::chrono;
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, mo) || !parse_fixed(text, 8, 2, d) ||
      !parse_fixed(text, 11, 2, h) || !parse_fixed(text, 14, 2, mi) || !parse_fixed(text, 17, 2, s)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601(Instant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

TimeGrid::TimeGrid()
    : TimeGrid(std::chrono::year_month_day{std::chrono::year{2007}, std::chrono::January,
                                           std::chrono::day{1}},
               26) {}

TimeGrid::TimeGrid(std::chrono::year_month_day origin, int frame_count)
    : origin_(origin), frame_count_(frame_count) {
  if (!is_quarter_start(origin)) {
    throw Error(ErrorKind::ConfigError, "grid origin must be the first day of a calendar quarter");
  }
  if (frame_count <= 0) throw Error(ErrorKind::ConfigError, "grid frame count must be positive");
}

TimeGrid TimeGrid::from_string(std::string_view origin_iso_date, int frame_count) {
  std::string text(origin_iso_date);
  if (text.size() == 10) text += "T00:00:00";
  auto t = parse_iso8601(text);
  if (!t) throw Error(ErrorKind::ConfigError, "bad grid origin '" + std::string(origin_iso_date) + "'");
  return TimeGrid(std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(*t)}, frame_count);
}

Instant TimeGrid::frame_start(int frame) const {
  using namespace std::chrono;
  const year_month ym = year_month{origin_.year(), origin_.month()} + months{3 * frame};
  const year_month_day ymd = ym / day{1};
  return sys_days{ymd};
}

int TimeGrid::quarter_offset(Instant t) const {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  const int month_delta = (static_cast<int>(ymd.year()) - static_cast<int>(origin_.year())) * 12 +
                          (static_cast<int>(static_cast<unsigned>(ymd.month())) -
                           static_cast<int>(static_cast<unsigned>(origin_.month())));
  return floor_div(month_delta, 3);
}

std::optional<int> TimeGrid::frame_of(Instant t) const {
  if (t < start()) return std::nullopt;
  const int q = quarter_offset(t);
  if (q >= frame_count_) return std::nullopt;
  return q;
}

std::string TimeGrid::origin_string() const {
  return format_iso8601(std::chrono::sys_days{origin_}).substr(0, 10);
}

std::string_view to_string(SchemeMode m) noexcept {
  return m == SchemeMode::Basic ? "basic" : "extended";
}

std::optional<SchemeMode> parse_scheme_mode(std::string_view text) noexcept {
  if (text == "basic") return SchemeMode::Basic;
  if (text == "extended") return SchemeMode::Extended;
  return std::nullopt;
}

std::vector<std::string> CategoryScheme::names() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.emplace_back(name(i));
  return out;
}

std::string_view CategoryScheme::name(std::size_t index) const {
  if (index < kBasicCategoryCount) return kBasicNames[index];
  return kThemeNames[index - kBasicCategoryCount];
}

std::optional<std::size_t> CategoryScheme::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (this->name(i) == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Trait t) noexcept { return kTraitNames[static_cast<std::size_t>(t)]; }

std::optional<Trait> parse_trait(std::string_view text) noexcept {
  const std::string l = lower(text);
  for (std::size_t i = 0; i < kTraitNames.size(); ++i) {
    if (kTraitNames[i] == l) return static_cast<Trait>(i);
  }
  return std::nullopt;
}

const std::vector<std::string>& trait_vocabulary(Trait t) {
  static const std::vector<std::string> gender = {"male", "female"};
  static const std::vector<std::string> education = {"undergrads", "grads", "phd"};
  static const std::vector<std::string> religion = {"christian", "muslim", "atheist", "jewish"};
  switch (t) {
    case Trait::Gender: return gender;
    case Trait::Education: return education;
    case Trait::Religion: return religion;
  }
  return gender;
}

std::optional<std::string> normalize_class_value(Trait t, std::string_view value) {
  const std::string l = lower(value);
  const auto& vocab = trait_vocabulary(t);
  if (std::find(vocab.begin(), vocab.end(), l) != vocab.end()) return l;
  return std::nullopt;
}

}  // namespace crumbs
