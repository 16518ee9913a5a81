#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace crumbs::testing {

namespace {

using json = nlohmann::ordered_json;

// Namespace codes the generator draws from; the last two have no category.
constexpr int kNamespaces[] = {0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 100, 101, 16, 118};

std::string two(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

std::string iso(Instant t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  std::ostringstream os;
  os << static_cast<int>(ymd.year()) << "-" << two(static_cast<int>(static_cast<unsigned>(ymd.month()))) << "-"
     << two(static_cast<int>(static_cast<unsigned>(ymd.day()))) << "T" << two(static_cast<int>(hms.hours().count()))
     << ":" << two(static_cast<int>(hms.minutes().count())) << ":" << two(static_cast<int>(hms.seconds().count()))
     << "Z";
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string DumpTruth::to_json() const {
  json j;
  j["pages"] = pages;
  j["revisions"] = revisions;
  j["events"] = events;
  j["anonymous"] = anonymous;
  j["unmapped"] = unmapped;
  j["out_of_range"] = out_of_range;
  j["per_category"] = per_category;
  json ns = json::object();
  for (const auto& [code, n] : per_namespace) ns[std::to_string(code)] = n;
  j["per_namespace"] = ns;
  j["named_users"] = named_users;
  return j.dump(2);
}

DumpTruth DumpTruth::from_json(const std::string& text) {
  const json j = json::parse(text);
  DumpTruth t;
  t.pages = j["pages"];
  t.revisions = j["revisions"];
  t.events = j["events"];
  t.anonymous = j["anonymous"];
  t.unmapped = j["unmapped"];
  t.out_of_range = j["out_of_range"];
  t.per_category = j["per_category"].get<std::array<std::uint64_t, kBasicCategoryCount>>();
  for (const auto& [code, n] : j["per_namespace"].items()) t.per_namespace[std::stoi(code)] = n;
  t.named_users = j["named_users"].get<std::set<std::string>>();
  return t;
}

DumpWriter::DumpWriter(std::uint64_t seed, const TimeGrid& grid) : rng_(seed), grid_(grid) {}

std::string DumpWriter::header() const {
  return "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.8/\" version=\"0.8\" xml:lang=\"en\">\n"
         "  <siteinfo>\n    <sitename>Fixture</sitename>\n    <case>first-letter</case>\n  </siteinfo>\n";
}

std::string DumpWriter::footer() const { return "</mediawiki>\n"; }

std::string DumpWriter::next_page() {
  ++page_;
  std::uniform_int_distribution<std::size_t> ns_pick(0, std::size(kNamespaces) - 1);
  std::uniform_int_distribution<int> rev_count(1, 12);
  std::uniform_int_distribution<int> user_pick(0, 39);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int ns = kNamespaces[ns_pick(rng_)];
  const auto category = try_map_namespace(ns);

  // In-range instants mostly; a few before the origin or after the end.
  const auto lo = grid_.start() - std::chrono::days(3 * 365);
  const auto hi = grid_.end() + std::chrono::days(365);
  std::uniform_int_distribution<std::int64_t> when(0, (hi - lo).count() - 1);

  std::ostringstream os;
  os << "  <page>\n    <title>" << escape("Page " + std::to_string(page_) + " & co") << "</title>\n    <ns>" << ns
     << "</ns>\n    <id>" << page_ << "</id>\n";
  ++truth_.pages;
  const int revisions = rev_count(rng_);
  for (int r = 0; r < revisions; ++r) {
    const Instant t = lo + std::chrono::seconds(when(rng_));
    const bool anonymous = unit(rng_) < 0.15;
    const std::string user = "Editor_" + std::to_string(user_pick(rng_));
    os << "    <revision>\n      <id>" << page_ * 100 + r << "</id>\n      <timestamp>" << iso(t)
       << "</timestamp>\n      <contributor>\n";
    if (anonymous) {
      os << "        <ip>10.0." << page_ % 250 << "." << r << "</ip>\n";
    } else {
      os << "        <username>" << user << "</username>\n        <id>" << user.size() << "</id>\n";
    }
    os << "      </contributor>\n      <comment>edit &lt;" << r << "&gt;</comment>\n      <text bytes=\"12\" />\n"
       << "    </revision>\n";

    ++truth_.revisions;
    if (anonymous) {
      ++truth_.anonymous;
      continue;
    }
    truth_.named_users.insert(user);
    if (!category) {
      ++truth_.unmapped;
      continue;
    }
    if (!grid_.frame_of(t)) {
      ++truth_.out_of_range;
      continue;
    }
    ++truth_.events;
    ++truth_.per_category[static_cast<std::size_t>(*category)];
    ++truth_.per_namespace[ns];
  }
  os << "  </page>\n";
  return os.str();
}

DumpFixture make_dump_fixture(std::uint64_t seed, int pages, const TimeGrid& grid) {
  DumpWriter w(seed, grid);
  DumpFixture f;
  f.xml = w.header();
  for (int p = 0; p < pages; ++p) f.xml += w.next_page();
  f.xml += w.footer();
  f.truth = w.truth();
  return f;
}

GeneratedDumpBuf::GeneratedDumpBuf(std::uint64_t seed, const TimeGrid& grid, std::uint64_t bytes)
    : writer_(seed, grid), target_(bytes) {}

GeneratedDumpBuf::int_type GeneratedDumpBuf::underflow() {
  if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
  if (!header_done_) {
    chunk_ = writer_.header();
    header_done_ = true;
  } else if (produced_ < target_) {
    chunk_.clear();
    while (chunk_.size() < (1u << 16) && produced_ + chunk_.size() < target_) chunk_ += writer_.next_page();
  } else if (!footer_done_) {
    chunk_ = writer_.footer();
    footer_done_ = true;
  } else {
    return traits_type::eof();
  }
  produced_ += chunk_.size();
  setg(chunk_.data(), chunk_.data(), chunk_.data() + chunk_.size());
  return traits_type::to_int_type(*gptr());
}

// ---------------------------------------------------------------------------

Event make_event(const std::string& user, const std::string& ts, BasicCategory category,
                 std::initializer_list<Theme> themes) {
  Event e;
  e.user_id = user;
  e.timestamp = *parse_iso8601(ts);
  e.category = category;
  for (Theme t : themes) e.themes.insert(t);
  return e;
}

FuzzCorpus fuzz_corpus(std::uint64_t seed, int users, const TimeGrid& grid) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int frames = grid.frame_count();
  std::uniform_int_distribution<int> join_pick(-3, frames - 1);
  std::uniform_int_distribution<int> cat_pick(0, static_cast<int>(kBasicCategoryCount) - 1);
  std::uniform_int_distribution<int> theme_pick(0, static_cast<int>(kThemeCount) - 1);
  std::uniform_int_distribution<int> burst(0, 6);
  FuzzCorpus c;
  for (int u = 0; u < users; ++u) {
    const std::string id = "user" + std::to_string(u);
    const int join = join_pick(rng);
    const Instant join_start = join >= 0 ? grid.frame_start(join) : grid.start() - std::chrono::days(92 * -join);
    const Instant first = join_start + std::chrono::hours(24 * static_cast<int>(unit(rng) * 60));
    c.first_edits[id] = first;
    const double activity = unit(rng);
    for (int f = std::max(join, 0); f < frames + 1; ++f) {
      if (unit(rng) > activity) continue;
      const int n = burst(rng);
      for (int k = 0; k < n; ++k) {
        const Instant start = f < frames ? grid.frame_start(f) : grid.end();
        Instant t = start + std::chrono::seconds(static_cast<std::int64_t>(unit(rng) * 80 * 86400));
        if (f == std::max(join, 0) && join >= 0 && t < first) t = first;
        Event e;
        e.user_id = id;
        e.timestamp = t;
        e.category = static_cast<BasicCategory>(cat_pick(rng));
        if (e.category == BasicCategory::Content) {
          const int themes = static_cast<int>(unit(rng) * 3.0);
          for (int h = 0; h < themes; ++h) e.themes.insert(static_cast<Theme>(theme_pick(rng)));
        }
        c.events.push_back(std::move(e));
      }
    }
  }
  std::shuffle(c.events.begin(), c.events.end(), rng);
  return c;
}

// ---------------------------------------------------------------------------

double joint_entropy_oracle(const std::vector<std::vector<int>>& variables) {
  if (variables.empty()) return 0.0;
  const std::size_t n = variables.front().size();
  std::map<std::vector<int>, std::size_t> table;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> key;
    for (const auto& v : variables) key.push_back(v[i]);
    ++table[key];
  }
  double h = 0.0;
  for (const auto& [key, count] : table) {
    const double p = static_cast<double>(count) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

double entropy_oracle(std::span<const int> y) { return joint_entropy_oracle({{y.begin(), y.end()}}); }

double conditional_entropy_oracle(std::span<const int> y, const std::vector<std::vector<int>>& given) {
  std::vector<std::vector<int>> all = given;
  all.emplace_back(y.begin(), y.end());
  return joint_entropy_oracle(all) - joint_entropy_oracle(given);
}

double mutual_information_oracle(std::span<const int> y, std::span<const int> x) {
  const std::size_t n = y.size();
  std::map<std::pair<int, int>, double> pxy;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / static_cast<double>(n);
    pxy[{x[i], y[i]}] += w;
    px[x[i]] += w;
    py[y[i]] += w;
  }
  double mi = 0.0;
  for (const auto& [key, p] : pxy) mi += p * std::log2(p / (px[key.first] * py[key.second]));
  return mi;
}

double conditional_mi_oracle(std::span<const int> y, std::span<const int> x,
                             const std::vector<std::vector<int>>& given) {
  std::vector<std::vector<int>> yz = given, xz = given, xyz = given;
  yz.emplace_back(y.begin(), y.end());
  xz.emplace_back(x.begin(), x.end());
  xyz.emplace_back(x.begin(), x.end());
  xyz.emplace_back(y.begin(), y.end());
  return joint_entropy_oracle(yz) + joint_entropy_oracle(xz) - joint_entropy_oracle(xyz) -
         joint_entropy_oracle(given);
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double sweep_epr(std::span<const double> scores, std::span<const int> labels, int thresholds) {
  const double hi = *std::max_element(scores.begin(), scores.end());
  const double lo = *std::min_element(scores.begin(), scores.end());
  double positives = 0.0;
  for (int l : labels) positives += l;
  std::vector<std::pair<double, double>> pr;
  for (int k = 0; k < thresholds; ++k) {
    const double theta = k == thresholds - 1 ? lo : hi - (hi - lo) * k / (thresholds - 1);
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= theta) {
        predicted += 1.0;
        tp += labels[i];
      }
    }
    if (tp == 0.0) continue;
    pr.emplace_back(tp / predicted, tp / positives);
  }
  for (std::size_t k = 0; k < pr.size(); ++k) {
    const double gap = pr[k].first - pr[k].second;
    if (gap == 0.0) return pr[k].first;
    if (k == 0) continue;
    const double prev = pr[k - 1].first - pr[k - 1].second;
    if ((prev > 0.0) != (gap > 0.0)) {
      return pr[k - 1].first + prev / (prev - gap) * (pr[k].first - pr[k - 1].first);
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < pr.size(); ++k) {
    if (std::abs(pr[k].first - pr[k].second) < std::abs(pr[best].first - pr[best].second)) best = k;
  }
  return pr[best].first;
}

}  // namespace crumbs::testing
