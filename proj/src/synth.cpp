#include "crumbs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include <json.hpp>

#include "crumbs/delimited.hpp"
#include "crumbs/digest.hpp"
#include "crumbs/error.hpp"
#include "crumbs/parallel.hpp"

namespace crumbs {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ConfigError, what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  require(n_users >= 1, "n_users must be positive");
  require(frames >= 1, "frames must be positive");
  (void)grid();
  require(!classes.empty(), "at least one class is required");
  double prior_sum = 0.0;
  for (const auto& c : classes) {
    require(normalize_class_value(trait, c.name).has_value(),
            "class '" + c.name + "' is not a " + std::string(to_string(trait)) + " class");
    require(finite_nonneg(c.prior), "priors must be nonnegative");
    prior_sum += c.prior;
    for (double r : c.rates) require(finite_nonneg(r), "rates must be nonnegative");
    require(c.theme_probs.empty() || c.theme_probs.size() == kThemeCount, "theme_probs needs 23 entries");
    for (double p : c.theme_probs) require(p >= 0.0 && p <= 1.0, "theme probabilities must lie in [0, 1]");
    require(finite_nonneg(c.exit_scale), "exit_scale must be nonnegative");
    require(std::isfinite(c.exit_activity_exponent), "exit_activity_exponent must be finite");
  }
  require(std::abs(prior_sum - 1.0) <= 1e-9, "class priors must sum to 1");
  require(finite_nonneg(signal), "signal must be nonnegative");
  require(finite_nonneg(newcomer_boost), "newcomer_boost must be nonnegative");
  require(arrival.size() == static_cast<std::size_t>(frames), "arrival needs one fraction per frame");
  for (double a : arrival) require(finite_nonneg(a), "arrival fractions must be nonnegative");
  require(std::abs(sum(arrival) - 1.0) <= 1e-9, "arrival fractions must sum to 1");
  require(exit_hazard.empty() || exit_hazard.size() == static_cast<std::size_t>(frames),
          "exit_hazard needs one value per frame");
  for (double h : exit_hazard) require(h >= 0.0 && h <= 1.0, "hazards must lie in [0, 1]");
  for (const auto& d : drift) {
    require(d.from >= 0 && d.from < frames, "drift start outside the grid");
    require(d.to < 0 || (d.to > d.from && d.to <= frames), "drift end outside the grid");
    require(finite_nonneg(d.multiplier), "drift multipliers must be nonnegative");
    require(d.class_name.empty() || std::any_of(classes.begin(), classes.end(),
                                                [&](const SynthClass& c) { return c.name == d.class_name; }),
            "drift names unknown class '" + d.class_name + "'");
  }
  require(finite_nonneg(dispersion), "dispersion must be nonnegative");
  require(label_fraction >= 0.0 && label_fraction <= 1.0, "label_fraction must lie in [0, 1]");
}

SynthConfig SynthConfig::with_frames(int n) const {
  if (n < 1) throw Error(ErrorKind::ConfigError, "frames must be positive");
  SynthConfig c = *this;
  c.frames = n;
  const auto size = static_cast<std::size_t>(n);
  c.arrival.resize(size, 0.0);
  const double total = sum(c.arrival);
  if (total <= 0.0) {
    c.arrival.assign(size, 0.0);
    c.arrival[0] = 1.0;
  } else if (std::abs(total - 1.0) > 1e-12) {
    for (double& a : c.arrival) a /= total;
  }
  if (!c.exit_hazard.empty()) c.exit_hazard.resize(size, c.exit_hazard.back());
  std::erase_if(c.drift, [&](const auto& d) { return d.from >= n; });
  for (auto& d : c.drift) {
    if (d.to > n) d.to = n;
  }
  return c;
}

std::string SynthConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["n_users"] = n_users;
  j["trait"] = std::string(to_string(trait));
  auto& cls = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    nlohmann::ordered_json o;
    o["name"] = c.name;
    o["prior"] = c.prior;
    nlohmann::ordered_json rates;
    for (auto b : all_basic_categories()) rates[std::string(to_string(b))] = c.rates[CategoryScheme::index_of(b)];
    o["rates"] = rates;
    if (!c.theme_probs.empty()) o["theme_probs"] = c.theme_probs;
    o["exit_scale"] = c.exit_scale;
    o["exit_activity_exponent"] = c.exit_activity_exponent;
    cls.push_back(o);
  }
  j["signal"] = signal;
  j["newcomer_boost"] = newcomer_boost;
  j["arrival"] = arrival;
  j["exit_hazard"] = exit_hazard;
  auto& dr = j["drift"] = nlohmann::ordered_json::array();
  for (const auto& d : drift) {
    dr.push_back({{"class", d.class_name},
                  {"category", std::string(to_string(d.category))},
                  {"from", d.from},
                  {"to", d.to},
                  {"multiplier", d.multiplier}});
  }
  j["dispersion"] = dispersion;
  j["label_fraction"] = label_fraction;
  j["grid_origin"] = grid_origin;
  j["frames"] = frames;
  j["seed"] = seed;
  return j.dump(2);
}

SynthConfig SynthConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("synth config is not valid JSON: ") + e.what());
  }
  SynthConfig c;
  try {
    c.name = j.value("name", c.name);
    c.n_users = j.value("n_users", c.n_users);
    if (j.contains("trait")) {
      const auto t = parse_trait(j["trait"].get<std::string>());
      require(t.has_value(), "unknown trait in synth config");
      c.trait = *t;
    }
    for (const auto& o : j.at("classes")) {
      SynthClass k;
      k.name = o.at("name").get<std::string>();
      k.prior = o.value("prior", 0.0);
      for (const auto& [key, value] : o.at("rates").items()) {
        const auto b = parse_basic_category(key);
        require(b.has_value(), "unknown category '" + key + "' in rates");
        k.rates[CategoryScheme::index_of(*b)] = value.get<double>();
      }
      if (o.contains("theme_probs")) k.theme_probs = o["theme_probs"].get<std::vector<double>>();
      k.exit_scale = o.value("exit_scale", 1.0);
      k.exit_activity_exponent = o.value("exit_activity_exponent", 0.0);
      c.classes.push_back(std::move(k));
    }
    c.signal = j.value("signal", c.signal);
    c.newcomer_boost = j.value("newcomer_boost", c.newcomer_boost);
    c.frames = j.value("frames", c.frames);
    c.grid_origin = j.value("grid_origin", c.grid_origin);
    if (j.contains("arrival")) {
      c.arrival = j["arrival"].get<std::vector<double>>();
    } else {
      c.arrival.assign(static_cast<std::size_t>(c.frames), 0.0);
      if (c.frames > 0) c.arrival[0] = 1.0;
    }
    c.exit_hazard = j.value("exit_hazard", std::vector<double>{});
    if (j.contains("drift")) {
      for (const auto& o : j["drift"]) {
        DriftRule d;
        d.class_name = o.value("class", std::string());
        const auto b = parse_basic_category(o.at("category").get<std::string>());
        require(b.has_value(), "unknown drift category");
        d.category = *b;
        d.from = o.value("from", 0);
        d.to = o.value("to", -1);
        d.multiplier = o.value("multiplier", 1.0);
        c.drift.push_back(std::move(d));
      }
    }
    c.dispersion = j.value("dispersion", c.dispersion);
    c.label_fraction = j.value("label_fraction", c.label_fraction);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string SynthConfig::hash() const { return digest_hex(to_json()); }

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

std::array<double, kBasicCategoryCount> effective_rates(const SynthConfig& config, std::size_t cls, int arrival,
                                                        int frame) {
  std::array<double, kBasicCategoryCount> mean_rates{};
  for (const auto& c : config.classes) {
    for (std::size_t k = 0; k < kBasicCategoryCount; ++k) mean_rates[k] += c.prior * c.rates[k];
  }
  const double s = config.signal * (1.0 + config.newcomer_boost * arrival);
  const auto& own = config.classes[cls];
  std::array<double, kBasicCategoryCount> out{};
  for (std::size_t k = 0; k < kBasicCategoryCount; ++k) {
    out[k] = s == 0.0 ? mean_rates[k] : std::max(0.0, mean_rates[k] + s * (own.rates[k] - mean_rates[k]));
  }
  for (const auto& d : config.drift) {
    const int to = d.to < 0 ? config.frames : d.to;
    if (frame < d.from || frame >= to) continue;
    if (!d.class_name.empty() && d.class_name != own.name) continue;
    out[CategoryScheme::index_of(d.category)] *= d.multiplier;
  }
  return out;
}

namespace {

std::vector<double> effective_theme_probs(const SynthConfig& config, std::size_t cls, int arrival) {
  const auto& own = config.classes[cls];
  if (own.theme_probs.empty()) return {};
  std::vector<double> mean_probs(kThemeCount, 0.0);
  for (const auto& c : config.classes) {
    for (std::size_t k = 0; k < kThemeCount && k < c.theme_probs.size(); ++k) mean_probs[k] += c.prior * c.theme_probs[k];
  }
  const double s = config.signal * (1.0 + config.newcomer_boost * arrival);
  std::vector<double> out(kThemeCount);
  for (std::size_t k = 0; k < kThemeCount; ++k) {
    out[k] = s == 0.0 ? mean_probs[k] : std::clamp(mean_probs[k] + s * (own.theme_probs[k] - mean_probs[k]), 0.0, 1.0);
  }
  return out;
}

std::size_t draw_index(std::mt19937_64& rng, const std::vector<double>& weights) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double target = u(rng) * sum(weights);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Rounding at the top end: the last nonzero weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

struct UserDraw {
  UserTruth truth;
  std::vector<Event> events;
};

}  // namespace

SynthOutput generate(const SynthConfig& config, unsigned threads) {
  config.validate();
  const TimeGrid grid = config.grid();
  const int width = std::max<int>(5, static_cast<int>(std::to_string(config.n_users - 1).size()));
  std::vector<double> priors;
  for (const auto& c : config.classes) priors.push_back(c.prior);

  std::vector<UserDraw> draws(static_cast<std::size_t>(config.n_users));
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(config.seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    UserDraw& d = draws[i];
    std::string id = std::to_string(i);
    d.truth.user_id = "u" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), width), '0') + id;
    const std::size_t cls = draw_index(rng, priors);
    d.truth.class_value = config.classes[cls].name;
    d.truth.arrival = static_cast<int>(draw_index(rng, config.arrival));
    if (config.dispersion > 0.0) {
      std::gamma_distribution<double> gamma(1.0 / config.dispersion, config.dispersion);
      d.truth.activity = gamma(rng);
    }
    const auto& own = config.classes[cls];
    const double exit_factor = own.exit_scale * std::pow(d.truth.activity, -own.exit_activity_exponent);
    for (int t = d.truth.arrival + 1; t < config.frames && !config.exit_hazard.empty(); ++t) {
      if (unit(rng) < std::min(1.0, config.exit_hazard[static_cast<std::size_t>(t)] * exit_factor)) {
        d.truth.exit = t;
        break;
      }
    }
    d.truth.labeled = unit(rng) < config.label_fraction;
    const auto themes = effective_theme_probs(config, cls, d.truth.arrival);

    const int last = d.truth.exit.value_or(config.frames);
    for (int t = d.truth.arrival; t < last; ++t) {
      const auto rates = effective_rates(config, cls, d.truth.arrival, t);
      std::array<std::uint64_t, kBasicCategoryCount> counts{};
      std::uint64_t total = 0;
      for (std::size_t k = 0; k < kBasicCategoryCount; ++k) {
        const double lambda = rates[k] * d.truth.activity;
        if (lambda > 0.0) {
          std::poisson_distribution<std::uint64_t> pois(lambda);
          counts[k] = pois(rng);
        }
        total += counts[k];
      }
      if (t == d.truth.arrival && total == 0) {
        // Arrival means at least one edit.
        std::vector<double> w(rates.begin(), rates.end());
        if (sum(w) <= 0.0) w[0] = 1.0;
        ++counts[draw_index(rng, w)];
      }
      const auto start = grid.frame_start(t);
      const auto span = (grid.frame_start(t + 1) - start).count();
      std::uniform_int_distribution<std::int64_t> offset(0, span - 1);
      for (auto b : all_basic_categories()) {
        const std::size_t k = CategoryScheme::index_of(b);
        for (std::uint64_t e = 0; e < counts[k]; ++e) {
          Event ev;
          ev.user_id = d.truth.user_id;
          ev.timestamp = start + std::chrono::seconds(offset(rng));
          ev.category = b;
          if (b == BasicCategory::Content && !themes.empty()) {
            for (std::size_t th = 0; th < kThemeCount; ++th) {
              if (unit(rng) < themes[th]) ev.themes.insert(static_cast<Theme>(th));
            }
          }
          d.events.push_back(std::move(ev));
        }
      }
    }
    std::sort(d.events.begin(), d.events.end(), [](const Event& a, const Event& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      if (a.category != b.category) return a.category < b.category;
      return a.themes.bits() < b.themes.bits();
    });
    d.truth.events = d.events.size();
  });

  SynthOutput out;
  std::map<std::pair<std::size_t, int>, bool> combos;
  for (auto& d : draws) {
    if (d.truth.labeled) out.labels[d.truth.user_id][config.trait] = d.truth.class_value;
    out.first_edits[d.truth.user_id] = d.events.front().timestamp;
    for (std::size_t c = 0; c < config.classes.size(); ++c) {
      if (config.classes[c].name == d.truth.class_value) combos[{c, d.truth.arrival}] = true;
    }
    std::move(d.events.begin(), d.events.end(), std::back_inserter(out.events));
    out.truth.users.push_back(std::move(d.truth));
  }
  for (const auto& [key, unused] : combos) {
    (void)unused;
    for (int t = key.second; t < config.frames; ++t) {
      out.truth.rates.push_back({config.classes[key.first].name, key.second, t,
                                 effective_rates(config, key.first, key.second, t)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference configurations
// ---------------------------------------------------------------------------

namespace {

using Rates = std::array<double, kBasicCategoryCount>;

std::vector<double> themes_with(std::initializer_list<std::pair<Theme, double>> bumps) {
  std::vector<double> p(kThemeCount, 0.06);
  for (auto [t, v] : bumps) p[static_cast<std::size_t>(t)] = v;
  return p;
}

SynthConfig gender_base(const std::string& name) {
  SynthConfig c;
  c.name = name;
  c.n_users = 2000;
  c.trait = Trait::Gender;
  c.frames = 8;
  c.classes = {
      {"male", 0.6, Rates{3.0, 0.5, 0.5, 0.3, 0.4, 0.2},
       themes_with({{Theme::Technology, 0.25}, {Theme::Science, 0.18}, {Theme::Politics, 0.12}})},
      {"female", 0.4, Rates{2.6, 0.5, 0.8, 0.45, 0.4, 0.2},
       themes_with({{Theme::Arts, 0.22}, {Theme::People, 0.18}, {Theme::Culture, 0.14}})},
  };
  c.signal = 0.5;
  c.dispersion = 0.6;
  c.arrival.assign(8, 0.0);
  c.arrival[0] = 0.6;
  for (int t = 1; t < 8; ++t) c.arrival[static_cast<std::size_t>(t)] = 0.4 / 7.0;
  c.exit_hazard.assign(8, 0.03);
  c.seed = 20130501;
  return c;
}

}  // namespace

std::vector<SynthConfig> reference_configs() {
  std::vector<SynthConfig> out;

  SynthConfig planted = gender_base("planted_signal");
  planted.signal = 0.8;
  out.push_back(planted);

  SynthConfig null = gender_base("null");
  null.classes[1].rates = null.classes[0].rates;
  null.classes[1].theme_probs = null.classes[0].theme_probs;
  null.signal = 0.0;
  out.push_back(null);

  SynthConfig newcomer = gender_base("newcomer_signal");
  newcomer.signal = 0.3;
  newcomer.newcomer_boost = 1.0;
  newcomer.arrival.assign(8, 0.0);
  newcomer.arrival[0] = 0.3;
  for (int t = 1; t < 8; ++t) newcomer.arrival[static_cast<std::size_t>(t)] = 0.7 / 7.0;
  out.push_back(newcomer);

  // Low-activity women leave at the cutoff; the women who stay edit ever
  // more CONTENT afterwards.
  SynthConfig exit = gender_base("exit_amplify");
  exit.signal = 0.8;
  exit.arrival = {0.7, 0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0};
  exit.exit_hazard = {0.0, 0.0, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0};
  exit.classes[1].exit_scale = 0.5;
  exit.classes[1].exit_activity_exponent = 2.0;
  const double ramp[] = {1.25, 1.5, 1.75, 2.0};
  for (int k = 0; k < 4; ++k) exit.drift.push_back({"female", BasicCategory::Content, 4 + k, 5 + k, ramp[k]});
  out.push_back(exit);
  return out;
}

SynthConfig reference_config(std::string_view name) {
  for (auto& c : reference_configs()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorKind::ConfigError, "no reference config named '" + std::string(name) + "'");
}

void write_truth(std::ostream& out, const SynthTruth& truth) {
  DelimitedWriter w(out);
  w.row({"user_id", "class", "arrival_frame", "exit_frame", "labeled", "activity", "events"});
  for (const auto& u : truth.users) {
    w.row({u.user_id, u.class_value, std::to_string(u.arrival + 1), u.exit ? std::to_string(*u.exit + 1) : "",
           u.labeled ? "1" : "0", format_double(u.activity), std::to_string(u.events)});
  }
}

void write_rates(std::ostream& out, const SynthTruth& truth) {
  DelimitedWriter w(out);
  std::vector<std::string> header{"class", "arrival_frame", "frame"};
  for (auto b : all_basic_categories()) header.emplace_back(to_string(b));
  w.row(header);
  for (const auto& r : truth.rates) {
    std::vector<std::string> row{r.class_value, std::to_string(r.arrival + 1), std::to_string(r.frame + 1)};
    for (double v : r.rates) row.push_back(format_double(v));
    w.row(row);
  }
}

}  // namespace crumbs
