#pragma once

// Core domain types shared by every stage of the pipeline: revision events,
// the quarterly time grid, the category schemes and trait labels.

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crumbs {

using Instant = std::chrono::sys_seconds;

// ---------------------------------------------------------------------------
// Categories
// ---------------------------------------------------------------------------

enum class BasicCategory : std::uint8_t { Content, TalkContent, User, TalkUser, Wiki, Infra };

inline constexpr std::size_t kBasicCategoryCount = 6;
inline constexpr std::size_t kThemeCount = 23;

// Thematic categories of article pages, in their canonical (alphabetical) order.
enum class Theme : std::uint8_t {
  Agriculture,
  AppliedSciences,
  Arts,
  Belief,
  Business,
  Chronology,
  Culture,
  Education,
  Environment,
  Geography,
  Health,
  History,
  Humanities,
  Language,
  Law,
  Life,
  Mathematics,
  Nature,
  People,
  Politics,
  Science,
  Society,
  Technology,
};

std::string_view to_string(BasicCategory c) noexcept;
std::string_view to_string(Theme t) noexcept;
std::optional<BasicCategory> parse_basic_category(std::string_view name) noexcept;
std::optional<Theme> parse_theme(std::string_view name) noexcept;

constexpr std::array<BasicCategory, kBasicCategoryCount> all_basic_categories() {
  return {BasicCategory::Content, BasicCategory::TalkContent, BasicCategory::User,
          BasicCategory::TalkUser, BasicCategory::Wiki,       BasicCategory::Infra};
}

// Small bitset over the 23 themes.
class ThemeSet {
 public:
  constexpr ThemeSet() = default;
  constexpr explicit ThemeSet(std::uint32_t bits) : bits_(bits & kMask) {}

  constexpr void insert(Theme t) { bits_ |= bit(t); }
  constexpr bool contains(Theme t) const { return (bits_ & bit(t)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  int size() const;
  std::vector<Theme> members() const;

  constexpr ThemeSet& operator|=(ThemeSet other) {
    bits_ |= other.bits_;
    return *this;
  }
  friend constexpr bool operator==(ThemeSet, ThemeSet) = default;

 private:
  static constexpr std::uint32_t kMask = (1u << kThemeCount) - 1;
  static constexpr std::uint32_t bit(Theme t) { return 1u << static_cast<unsigned>(t); }
  std::uint32_t bits_ = 0;
};

// Namespace code -> basic category. Returns nullopt for codes outside the
// table; map_namespace throws UnmappedNamespace instead.
std::optional<BasicCategory> try_map_namespace(int namespace_code) noexcept;
BasicCategory map_namespace(int namespace_code);

// Every namespace code with a defined category, ascending.
std::vector<int> mapped_namespace_codes();

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

struct Event {
  std::string user_id;
  Instant timestamp{};
  std::optional<int> namespace_code;
  BasicCategory category = BasicCategory::Content;
  ThemeSet themes;

  friend bool operator==(const Event&, const Event&) = default;
};

// ISO-8601 UTC, second resolution: "YYYY-MM-DDTHH:MM:SS" with optional "Z".
std::optional<Instant> parse_iso8601(std::string_view text) noexcept;
std::string format_iso8601(Instant t);

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

// Consecutive calendar quarters starting at `origin` (which must be the
// first day of January, April, July or October). Frames are half-open:
// frame i covers [start(i), start(i + 1)).
class TimeGrid {
 public:
  TimeGrid();  // 2007-01-01, 26 frames (through 2013-07-01)
  TimeGrid(std::chrono::year_month_day origin, int frame_count);

  static TimeGrid from_string(std::string_view origin_iso_date, int frame_count);

  std::chrono::year_month_day origin() const { return origin_; }
  int frame_count() const { return frame_count_; }
  Instant start() const { return frame_start(0); }
  Instant end() const { return frame_start(frame_count_); }
  Instant frame_start(int frame) const;

  // 0-based frame index, or nullopt when outside [start, end).
  std::optional<int> frame_of(Instant t) const;

  // Quarter offset from the origin with floor semantics; negative before the
  // origin and unbounded above. Used for join frames.
  int quarter_offset(Instant t) const;

  std::string origin_string() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::chrono::year_month_day origin_;
  int frame_count_;
};

// ---------------------------------------------------------------------------
// Category schemes
// ---------------------------------------------------------------------------

enum class SchemeMode : std::uint8_t { Basic, Extended };

std::string_view to_string(SchemeMode m) noexcept;
std::optional<SchemeMode> parse_scheme_mode(std::string_view text) noexcept;

// Ordered count categories. Basic: the 6 namespace categories. Extended:
// the 6 basic categories followed by the 23 themes. Column order is fixed.
class CategoryScheme {
 public:
  explicit CategoryScheme(SchemeMode mode = SchemeMode::Basic) : mode_(mode) {}

  SchemeMode mode() const { return mode_; }
  std::size_t size() const {
    return mode_ == SchemeMode::Basic ? kBasicCategoryCount : kBasicCategoryCount + kThemeCount;
  }
  std::vector<std::string> names() const;
  std::string_view name(std::size_t index) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  static constexpr std::size_t index_of(BasicCategory c) { return static_cast<std::size_t>(c); }
  static constexpr std::size_t index_of(Theme t) {
    return kBasicCategoryCount + static_cast<std::size_t>(t);
  }

  friend bool operator==(const CategoryScheme&, const CategoryScheme&) = default;

 private:
  SchemeMode mode_;
};

// ---------------------------------------------------------------------------
// Traits
// ---------------------------------------------------------------------------

enum class Trait : std::uint8_t { Gender, Education, Religion };

std::string_view to_string(Trait t) noexcept;
std::optional<Trait> parse_trait(std::string_view text) noexcept;

// Declared class vocabulary of each trait (lower case).
const std::vector<std::string>& trait_vocabulary(Trait t);
// Normalises case; nullopt when the value is outside the vocabulary.
std::optional<std::string> normalize_class_value(Trait t, std::string_view value);

struct TraitLabel {
  std::string user_id;
  Trait trait = Trait::Gender;
  std::string class_value;

  friend bool operator==(const TraitLabel&, const TraitLabel&) = default;
};

// Per-user labels; at most one class value per trait.
using UserTraits = std::map<Trait, std::string>;

}  // namespace crumbs
