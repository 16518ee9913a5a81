#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "crumbs/classify.hpp"
#include "crumbs/cohort.hpp"
#include "crumbs/delimited.hpp"
#include "crumbs/digest.hpp"
#include "crumbs/error.hpp"
#include "crumbs/featurize.hpp"
#include "crumbs/infodynamics.hpp"
#include "crumbs/ingest.hpp"
#include "crumbs/profile.hpp"
#include "crumbs/svg.hpp"
#include "crumbs/synth.hpp"
#include "json.hpp"

#ifndef CRUMBS_VERSION
#define CRUMBS_VERSION "0.0.0"
#endif

namespace crumbs::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return in;
}

std::string manifest_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    if (auto v = parse_int(epoch)) return format_iso8601(Instant{std::chrono::seconds{*v}});
  }
  return format_iso8601(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

// Collects outputs of one command and writes its manifest last.
class Run {
 public:
  Run(std::string command, const Common& common) : command_(std::move(command)), dir_(common.out), seed_(common.seed) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir_.string() + "': " + ec.message());
  }

  json params = json::object();
  std::string config_hash;
  std::string manifest_name;  // default: <command>.manifest.json

  void seed(std::uint64_t s) { seed_ = s; }

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    inputs_.push_back({{"role", role}, {"path", path}, {"digest", digest_file(path)}});
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream os;
    fill(os);
    const std::string bytes = os.str();
    const fs::path path = dir_ / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    f << bytes;
    if (!f) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
    outputs_.push_back({{"file", name}, {"digest", digest_hex(bytes)}, {"bytes", bytes.size()}});
  }

  void finish() {
    json m;
    m["command"] = command_;
    m["toolkit_version"] = CRUMBS_VERSION;
    m["config_hash"] = config_hash.empty() ? digest_hex(params.dump()) : config_hash;
    m["seed"] = seed_;
    m["parameters"] = params;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["timestamp"] = manifest_timestamp();
    const std::string text = m.dump(2) + "\n";
    std::ofstream f(dir_ / (manifest_name.empty() ? command_ + ".manifest.json" : manifest_name), std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot write manifest in '" + dir_.string() + "'");
    f << text;
    std::cout << command_ << ": wrote " << outputs_.size() << " file(s) to " << dir_.string() << "\n";
  }

 private:
  std::string command_;
  fs::path dir_;
  std::uint64_t seed_;
  json inputs_ = json::array();
  json outputs_ = json::array();
};

TimeGrid grid_of(const Common& c) { return TimeGrid::from_string(c.grid_origin, c.grid_frames); }

bool grid_given(const Common& c) { return c.origin_opt->count() > 0 || c.frames_opt->count() > 0; }

TimeGrid grid_or(const Common& c, const TimeGrid& fallback) {
  if (!grid_given(c)) return fallback;
  const std::string origin = c.origin_opt->count() ? c.grid_origin : fallback.origin_string();
  const int frames = c.frames_opt->count() ? c.grid_frames : fallback.frame_count();
  return TimeGrid::from_string(origin, frames);
}

SchemeMode scheme_of(const Common& c) {
  auto m = parse_scheme_mode(c.scheme);
  if (!m) throw Error(ErrorKind::ConfigError, "unknown scheme '" + c.scheme + "'");
  return *m;
}

Trait trait_of(const std::string& s) {
  auto t = parse_trait(s);
  if (!t) throw Error(ErrorKind::ConfigError, "unknown trait '" + s + "'");
  return *t;
}

std::string class_of(Trait trait, const std::string& s) {
  auto v = normalize_class_value(trait, s);
  if (!v) {
    throw Error(ErrorKind::UnknownClass, "'" + s + "' is not a class of " + std::string(to_string(trait)));
  }
  return *v;
}

enum class FileKind { EventCache, FeatureCache, Text };

FileKind sniff(const std::string& path) {
  std::ifstream in = open_input(path);
  char buf[7] = {};
  in.read(buf, 7);
  const std::string head(buf, static_cast<std::size_t>(in.gcount()));
  if (head == "CRMBEVT") return FileKind::EventCache;
  if (head == "CRMBFEA") return FileKind::FeatureCache;
  return FileKind::Text;
}

struct LoadedEvents {
  TimeGrid grid;
  std::vector<Event> events;
};

LoadedEvents load_events(const std::string& path, const Common& common) {
  switch (sniff(path)) {
    case FileKind::EventCache: {
      std::ifstream in = open_input(path);
      EventCache cache = read_event_cache(in);
      return {grid_or(common, cache.grid), std::move(cache.events)};
    }
    case FileKind::FeatureCache:
      throw Error(ErrorKind::SchemaError, "'" + path + "' is a feature cache; events are needed here");
    case FileKind::Text: break;
  }
  std::ifstream in = open_input(path);
  return {grid_of(common), read_event_log(in).events};
}

// Activity table from a feature cache, an event cache or an event log.
ActivityTable load_table(const std::string& path, const std::string& first_edits_path, const Common& common,
                         Run& run) {
  run.input("events", path);
  run.input("first_edits", first_edits_path);
  if (sniff(path) == FileKind::FeatureCache) {
    std::ifstream in = open_input(path);
    FeatureCache cache = read_feature_cache(in);
    if (common.scheme_opt->count() && cache.table.scheme().mode() != scheme_of(common)) {
      throw Error(ErrorKind::ConfigError, "feature cache was built with the " +
                                              std::string(to_string(cache.table.scheme().mode())) + " scheme");
    }
    if (grid_given(common) && !(grid_or(common, cache.table.grid()) == cache.table.grid())) {
      throw Error(ErrorKind::ConfigError, "feature cache was built on a different grid");
    }
    return std::move(cache.table);
  }
  LoadedEvents loaded = load_events(path, common);
  std::optional<FirstEditTable> first;
  if (!first_edits_path.empty()) {
    std::ifstream in = open_input(first_edits_path);
    first = read_first_edits(in);
  }
  return ActivityTable::build(loaded.events, loaded.grid, CategoryScheme(scheme_of(common)),
                              first ? &*first : nullptr);
}

LabelTable load_labels(const std::string& path, Run& run) {
  run.input("labels", path);
  std::ifstream in = open_input(path);
  return read_trait_labels(in);
}

void record_grid(Run& run, const ActivityTable& table) {
  run.params["grid_origin"] = table.grid().origin_string();
  run.params["grid_frames"] = table.grid().frame_count();
  run.params["scheme"] = std::string(to_string(table.scheme().mode()));
}

struct TrainFlags {
  int repeats = 10;
  int folds = 5;
  int grid_size = 30;
  double train_fraction = 2.0 / 3.0;
  std::string penalty = "l1";
  std::string rule = "best-mean";

  void add(CLI::App* app) {
    app->add_option("--repeats", repeats, "Random train/test splits per frame")->check(CLI::PositiveNumber);
    app->add_option("--folds", folds, "Cross-validation folds for lambda")->check(CLI::Range(2, 100));
    app->add_option("--lambda-grid", grid_size, "Number of lambda values tried")->check(CLI::PositiveNumber);
    app->add_option("--train-fraction", train_fraction, "Share of each class used for training")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--penalty", penalty)->check(CLI::IsMember({"l1", "l2"}));
    app->add_option("--rule", rule, "Lambda selection rule")->check(CLI::IsMember({"best-mean", "one-se"}));
  }

  TrainSpec spec(const Common& common) const {
    TrainSpec s;
    s.n_repeats = repeats;
    s.cv_folds = folds;
    s.grid_size = grid_size;
    s.train_fraction = train_fraction;
    s.penalty = penalty == "l2" ? Penalty::L2 : Penalty::L1;
    s.rule = rule == "one-se" ? LambdaRule::OneStandardError : LambdaRule::BestMean;
    s.seed = common.seed;
    s.threads = common.threads;
    s.validate();
    return s;
  }

  void record(Run& run, const TrainSpec& s) const {
    run.params["repeats"] = repeats;
    run.params["folds"] = folds;
    run.params["lambda_grid"] = grid_size;
    run.params["train_fraction"] = format_double(train_fraction);
    run.params["penalty"] = penalty;
    run.params["rule"] = rule;
    run.params["train_spec_hash"] = s.hash();
  }
};

struct InfoFlags {
  int bins = 3;
  std::string strategy = "equal_frequency";
  bool no_zero_bin = false;
  bool no_missing_symbol = false;
  std::string estimator = "plugin";
  int window = 0;

  void add(CLI::App* app) {
    app->add_option("--bins", bins, "Quantization levels per feature")->check(CLI::Range(1, 64));
    app->add_option("--strategy", strategy)->check(CLI::IsMember({"equal_frequency", "equal_width"}));
    app->add_flag("--no-zero-bin", no_zero_bin, "Do not give exact zeros a bin of their own");
    app->add_flag("--no-missing-symbol", no_missing_symbol, "Treat not-yet-joined frames as zero counts");
    app->add_option("--estimator", estimator)->check(CLI::IsMember({"plugin", "miller-madow"}));
    app->add_option("--window", window, "History length conditioned on (0: full history)")
        ->check(CLI::NonNegativeNumber);
  }

  FeatureDiscretization discretization() const {
    FeatureDiscretization d;
    d.quantizer.bins = bins;
    d.quantizer.strategy = parse_bin_strategy(strategy);
    d.quantizer.zero_bin = !no_zero_bin;
    d.encode_missing = !no_missing_symbol;
    return d;
  }

  TransferOptions transfer() const {
    TransferOptions t;
    t.estimator = estimator == "miller-madow" ? Estimator::MillerMadow : Estimator::PlugIn;
    t.window = window;
    return t;
  }

  void record(Run& run) const {
    run.params["bins"] = bins;
    run.params["strategy"] = strategy;
    run.params["zero_bin"] = !no_zero_bin;
    run.params["missing_symbol"] = !no_missing_symbol;
    run.params["estimator"] = estimator;
    run.params["window"] = window;
  }
};

std::string text_of(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

// --- report helpers ---------------------------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
  std::size_t need(const std::string& name) const {
    auto c = col(name);
    if (!c) throw Error(ErrorKind::SchemaError, "column '" + name + "' not in input");
    return *c;
  }
  bool has(const std::string& name) const { return col(name).has_value(); }
};

Csv read_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  DelimitedReader reader(in);
  Csv csv;
  csv.header = reader.header();
  std::vector<std::string> fields;
  while (reader.next(fields)) csv.rows.push_back(fields);
  return csv;
}

double number(const std::string& s) { return parse_double(s).value_or(std::nan("")); }

struct ChartPlan {
  std::string kind;  // line or bar
  std::string x;
  std::vector<std::string> y;
  std::vector<std::string> group;
};

ChartPlan auto_plan(const Csv& csv) {
  if (csv.has("transfer_bits")) return {"line", "frame", {"transfer_bits"}, {"feature"}};
  if (csv.has("residual_entropy_bits")) return {"bar", "feature", {"residual_entropy_bits"}, {}};
  if (csv.has("auc_ne")) return {"line", "frame", {"auc_ne", "auc_fp"}, {}};
  if (csv.has("mean_auc")) return {"line", "frame", {"mean_auc", "mean_epr"}, {}};
  if (csv.has("weight") && csv.has("present")) return {"line", "frame", {"weight"}, {"feature"}};
  if (csv.has("active") && csv.has("new")) return {"line", "frame", {"active", "new"}, {}};
  if (csv.has("mean_share") && csv.has("frame")) return {"line", "frame", {"mean_share"}, {"class", "category"}};
  if (csv.has("mean_share")) return {"bar", "category", {"mean_share"}, {"class"}};
  throw Error(ErrorKind::ConfigError, "unrecognised table; pass --x and --y");
}

std::string render(const Csv& csv, const ChartPlan& plan, const std::string& title) {
  std::vector<std::size_t> group_cols;
  for (const auto& g : plan.group) group_cols.push_back(csv.need(g));
  auto group_key = [&](const std::vector<std::string>& row) {
    std::string key;
    for (auto c : group_cols) key += (key.empty() ? "" : "/") + row.at(c);
    return key;
  };
  const std::size_t xc = csv.need(plan.x);
  std::vector<std::size_t> ycs;
  for (const auto& y : plan.y) ycs.push_back(csv.need(y));

  if (plan.kind == "bar") {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& row : csv.rows) {
      const std::string key = group_key(row);
      labels.push_back(key.empty() ? row.at(xc) : key + "/" + row.at(xc));
      values.push_back(number(row.at(ycs.front())));
    }
    return svg::bar_chart(title, labels, values);
  }

  std::vector<svg::Series> series;
  std::map<std::string, std::size_t> index;
  for (const auto& row : csv.rows) {
    const std::string key = group_key(row);
    for (std::size_t k = 0; k < ycs.size(); ++k) {
      std::string name = key;
      if (ycs.size() > 1 || name.empty()) name += (name.empty() ? "" : "/") + plan.y[k];
      auto [it, fresh] = index.emplace(name, series.size());
      if (fresh) series.push_back({name, {}, {}});
      series[it->second].x.push_back(number(row.at(xc)));
      series[it->second].y.push_back(number(row.at(ycs[k])));
    }
  }
  return svg::line_chart(title, plan.x, plan.y.size() == 1 ? plan.y.front() : "value", series);
}

}  // namespace

// ---------------------------------------------------------------------------

Command add_ingest(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("ingest", "Read a wiki dump or an event log into an event cache");
  struct Opts {
    std::string dump, events, themes, exclude, first_edits;
    bool lenient = false;
  };
  auto o = std::make_shared<Opts>();
  auto* dump = app->add_option("--dump", o->dump, "MediaWiki stub-meta-history XML");
  auto* log = app->add_option("--events", o->events, "Delimited event log");
  dump->excludes(log);
  app->add_option("--themes", o->themes, "page_id,theme map (dump input)");
  app->add_option("--exclude", o->exclude, "User ids to drop, e.g. bots");
  app->add_option("--first-edits", o->first_edits, "First-edit side table to pass through (event log input)")
      ;
  app->add_flag("--lenient", o->lenient, "Skip bad event-log rows instead of failing");

  return {app, [o, &common] {
            if (o->dump.empty() && o->events.empty()) {
              throw Error(ErrorKind::ConfigError, "one of --dump or --events is required");
            }
            Run run("ingest", common);
            const TimeGrid grid = grid_of(common);
            run.params["grid_origin"] = grid.origin_string();
            run.params["grid_frames"] = grid.frame_count();
            std::optional<PageThemeMap> themes;
            std::optional<std::set<std::string>> excluded;
            if (!o->themes.empty()) {
              run.input("themes", o->themes);
              std::ifstream in = open_input(o->themes);
              themes = read_page_theme_map(in);
            }
            if (!o->exclude.empty()) {
              run.input("exclude", o->exclude);
              std::ifstream in = open_input(o->exclude);
              excluded = read_user_list(in);
            }

            std::vector<Event> events;
            IngestReport report;
            FirstEditTable first;
            std::vector<RowError> row_errors;
            if (!o->dump.empty()) {
              run.input("dump", o->dump);
              std::ifstream in = open_input(o->dump);
              WikiDumpOptions opts;
              opts.themes = themes ? &*themes : nullptr;
              opts.excluded = excluded ? &*excluded : nullptr;
              WikiDumpEvents r = read_wiki_dump(in, grid, opts);
              events = std::move(r.events);
              report = r.result.report;
              first = std::move(r.result.first_edits);
            } else {
              run.input("events", o->events);
              run.params["lenient"] = o->lenient;
              std::ifstream in = open_input(o->events);
              EventLogResult r = read_event_log(in, !o->lenient);
              row_errors = std::move(r.row_errors);
              std::set<std::string> users;
              std::vector<Event> kept;
              report.revisions_scanned = r.events.size() + row_errors.size();
              report.parse_errors = row_errors.size();
              for (Event& e : r.events) {
                users.insert(e.user_id);
                if (excluded && excluded->count(e.user_id)) {
                  ++report.skipped_excluded;
                  continue;
                }
                auto [it, fresh] = first.emplace(e.user_id, e.timestamp);
                if (!fresh && e.timestamp < it->second) it->second = e.timestamp;
                if (!grid.frame_of(e.timestamp)) {
                  ++report.skipped_out_of_range;
                  continue;
                }
                kept.push_back(std::move(e));
              }
              report.users_seen = users.size();
              report.events_emitted = kept.size();
              report.bytes_read = fs::file_size(o->events);
              events = std::move(kept);
              if (!o->first_edits.empty()) {
                run.input("first_edits", o->first_edits);
                std::ifstream fin = open_input(o->first_edits);
                first = read_first_edits(fin);
              }
            }

            run.write("events.bin", [&](std::ostream& out) { write_event_cache(out, grid, events); });
            run.write("ingest_report.json", [&](std::ostream& out) { out << report.to_json() << "\n"; });
            run.write("first_edits.csv", [&](std::ostream& out) { write_first_edits(out, first); });
            if (!row_errors.empty()) {
              run.write("row_errors.csv", [&](std::ostream& out) {
                DelimitedWriter w(out);
                w.row({"line", "message"});
                for (const auto& e : row_errors) w.row({std::to_string(e.line()), e.what()});
              });
            }
            run.finish();
          }};
}

Command add_profile(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("profile", "Population dynamics and class-conditional category shares");
  struct Opts {
    std::string events, first_edits, labels, trait = "gender";
    bool pooled = false, svg = false;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--events", o->events, "Event cache, event log or feature cache")
      ->required()
      ;
  app->add_option("--first-edits", o->first_edits);
  app->add_option("--labels", o->labels, "user_id,trait,class");
  app->add_option("--trait", o->trait);
  app->add_flag("--pooled", o->pooled, "Pool revisions over each class instead of averaging user shares");
  app->add_flag("--svg", o->svg, "Also draw SVG charts");

  return {app, [o, &common] {
            Run run("profile", common);
            const ActivityTable table = load_table(o->events, o->first_edits, common, run);
            record_grid(run, table);
            run.params["pooled"] = o->pooled;
            run.params["svg"] = o->svg;
            const auto dyn = population_dynamics(table);
            run.write("population.csv", [&](std::ostream& out) { write_population_dynamics(out, dyn, table.scheme()); });
            if (o->svg) {
              svg::Series active{"active", {}, {}}, fresh{"new", {}, {}};
              for (const auto& r : dyn) {
                active.x.push_back(r.frame);
                active.y.push_back(static_cast<double>(r.active));
                fresh.x.push_back(r.frame);
                fresh.y.push_back(static_cast<double>(r.new_users));
              }
              run.write("population.svg", [&](std::ostream& out) {
                out << svg::line_chart("Users per frame", "frame", "users", {active, fresh});
              });
            }
            if (!o->labels.empty()) {
              const Trait trait = trait_of(o->trait);
              run.params["trait"] = std::string(to_string(trait));
              const LabelTable labels = load_labels(o->labels, run);
              const ShareOptions opts{o->pooled};
              const auto shares = class_feature_shares(table, labels, trait, opts);
              run.write("class_shares.csv", [&](std::ostream& out) { write_class_shares(out, shares); });
              run.write("class_temporal.csv", [&](std::ostream& out) {
                write_class_temporal_means(out, class_temporal_means(table, labels, trait, opts));
              });
              if (o->svg) {
                std::vector<std::string> names;
                std::vector<double> values;
                for (const auto& s : shares) {
                  names.push_back(s.class_value + "/" + s.category);
                  values.push_back(s.mean_share);
                }
                run.write("class_shares.svg", [&](std::ostream& out) {
                  out << svg::bar_chart("Mean category share by class", names, values);
                });
              }
            }
            run.finish();
          }};
}

Command add_featurize(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("featurize", "Build the per-user frame x category feature cache");
  struct Opts {
    std::string events, first_edits;
    bool cumulative = false;
    std::vector<int> export_horizons;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--events", o->events, "Event cache or event log")->required();
  app->add_option("--first-edits", o->first_edits, "user_id,first_edit_timestamp");
  app->add_flag("--cumulative", o->cumulative, "Running totals instead of per-frame counts");
  app->add_option("--export-horizon", o->export_horizons, "Also write the feature matrix at these horizons")
      ->check(CLI::PositiveNumber);

  return {app, [o, &common] {
            Run run("featurize", common);
            if (sniff(o->events) == FileKind::FeatureCache) {
              throw Error(ErrorKind::SchemaError, "'" + o->events + "' is already a feature cache");
            }
            const ActivityTable table = load_table(o->events, o->first_edits, common, run);
            record_grid(run, table);
            const FeatureOptions fo{o->cumulative};
            run.params["cumulative"] = o->cumulative;
            run.params["export_horizons"] = o->export_horizons;
            run.write("features.bin", [&](std::ostream& out) { write_feature_cache(out, table, fo); });
            for (int h : o->export_horizons) {
              if (h > table.grid().frame_count()) {
                throw Error(ErrorKind::ConfigError, "horizon " + std::to_string(h) + " is beyond the grid");
              }
              const TemporalDataset ds = build_temporal_dataset(table, h, nullptr, fo);
              run.write("features_h" + std::to_string(h) + ".csv",
                        [&](std::ostream& out) { write_feature_matrix(out, ds); });
            }
            run.finish();
          }};
}

Command add_train_eval(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("train-eval", "Per-frame trait prediction with repeated hold-out evaluation");
  struct Opts {
    std::string features, first_edits, labels, trait = "gender", target;
    bool models = false;
    std::vector<std::string> coefficients;
    TrainFlags train;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--features", o->features, "Feature cache, event cache or event log")
      ->required()
      ;
  app->add_option("--first-edits", o->first_edits);
  app->add_option("--labels", o->labels)->required();
  app->add_option("--trait", o->trait);
  app->add_option("--class", o->target, "Positive class (one vs all)")->required();
  app->add_flag("--models", o->models, "Dump one model per frame, trained on every labeled user");
  app->add_option("--coefficients", o->coefficients, "Categories or columns whose weights to trace over frames");
  o->train.add(app);

  return {app, [o, &common] {
            Run run("train-eval", common);
            const ActivityTable table = load_table(o->features, o->first_edits, common, run);
            record_grid(run, table);
            const LabelTable labels = load_labels(o->labels, run);
            const Trait trait = trait_of(o->trait);
            const std::string target = class_of(trait, o->target);
            const TrainSpec spec = o->train.spec(common);
            run.params["trait"] = std::string(to_string(trait));
            run.params["class"] = target;
            o->train.record(run, spec);
            run.config_hash = spec.hash();

            const DatasetSeries ds = build_temporal_dataset_series(table, &labels, trait);
            const EvalSeries series = repeated_eval(ds.datasets, trait, target, spec);
            run.write("eval_series.csv", [&](std::ostream& out) { write_eval_series(out, series); });
            run.write("eval_repeats.csv", [&](std::ostream& out) {
              DelimitedWriter w(out);
              w.row({"frame", "repeat", "auc", "epr", "lambda"});
              for (const auto& f : series.frames) {
                for (std::size_t r = 0; r < f.aucs.size(); ++r) {
                  w.row({std::to_string(f.horizon), std::to_string(r + 1), format_double(f.aucs[r]),
                         format_double(f.eprs[r]), format_double(f.lambdas[r])});
                }
              }
            });
            std::vector<std::string> warnings = ds.warnings;
            warnings.insert(warnings.end(), series.warnings.begin(), series.warnings.end());
            if (!warnings.empty()) run.write("warnings.txt", [&](std::ostream& out) { out << text_of(warnings); });

            if (o->models || !o->coefficients.empty()) {
              const auto models = fit_frame_models(ds.datasets, trait, target, spec);
              std::vector<int> horizons;
              for (const auto& d : ds.datasets) horizons.push_back(d.horizon);
              if (o->models) {
                for (std::size_t k = 0; k < models.size(); ++k) {
                  if (!models[k]) continue;
                  const ModelMetadata meta{std::string(to_string(trait)), target, horizons[k], spec.seed, spec.hash()};
                  run.write("models/model_h" + std::to_string(horizons[k]) + ".txt",
                            [&](std::ostream& out) { write_model(out, *models[k], meta); });
                }
              }
              if (!o->coefficients.empty()) {
                run.params["coefficients"] = o->coefficients;
                const CoefficientTable ct = coefficient_trajectories(models, horizons, o->coefficients);
                run.write("coefficients.csv", [&](std::ostream& out) { write_coefficient_table(out, ct); });
              }
            }
            run.finish();
          }};
}

Command add_infodyn(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("infodyn", "Information transfer per frame and feature ranking");
  struct Opts {
    std::string features, first_edits, labels, trait = "gender", target;
    int horizon = 0;
    std::vector<std::string> categories;
    InfoFlags info;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--features", o->features, "Feature cache, event cache or event log")
      ->required()
      ;
  app->add_option("--first-edits", o->first_edits);
  app->add_option("--labels", o->labels)->required();
  app->add_option("--trait", o->trait);
  app->add_option("--class", o->target, "Binarize the trait against this class (default: every class)");
  app->add_option("--horizon", o->horizon, "Last frame analysed (default: the whole grid)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--categories", o->categories, "Categories to analyse (default: every scheme category)");
  o->info.add(app);

  return {app, [o, &common] {
            Run run("infodyn", common);
            const ActivityTable table = load_table(o->features, o->first_edits, common, run);
            record_grid(run, table);
            const LabelTable labels = load_labels(o->labels, run);
            const Trait trait = trait_of(o->trait);
            const int horizon = o->horizon == 0 ? table.grid().frame_count() : o->horizon;
            if (horizon > table.grid().frame_count()) {
              throw Error(ErrorKind::ConfigError, "horizon " + std::to_string(horizon) + " is beyond the grid");
            }
            run.params["trait"] = std::string(to_string(trait));
            run.params["horizon"] = horizon;
            o->info.record(run);

            const TemporalDataset ds = build_temporal_dataset(table, horizon, &labels);
            const auto rows = ds.labeled_rows(trait);
            if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "no labeled user at horizon " + std::to_string(horizon));
            std::vector<int> y;
            if (!o->target.empty()) {
              const std::string target = class_of(trait, o->target);
              run.params["class"] = target;
              y = binary_targets(ds, rows, trait, target);
            } else {
              const auto& vocab = trait_vocabulary(trait);
              for (auto r : rows) {
                const auto& v = ds.labels[r].at(trait);
                y.push_back(static_cast<int>(std::find(vocab.begin(), vocab.end(), v) - vocab.begin()));
              }
            }
            std::vector<std::string> cats = o->categories.empty() ? table.scheme().names() : o->categories;
            run.params["categories"] = cats;
            const auto disc = o->info.discretization();
            const auto topt = o->info.transfer();

            std::vector<TransferSeries> series(cats.size());
            std::vector<std::string> warnings;
            for (std::size_t i = 0; i < cats.size(); ++i) {
              series[i] = feature_transfer_series(ds, rows, y, cats[i], disc, topt);
              if (series[i].degenerate) warnings.push_back("DegenerateFeature: " + cats[i] + " is constant");
            }
            const auto ranking = rank_features_by_residual_entropy(ds, rows, y, cats, disc, topt, common.threads);
            run.write("transfer_series.csv", [&](std::ostream& out) { write_transfer_series(out, series); });
            run.write("feature_ranking.csv", [&](std::ostream& out) { write_feature_ranking(out, ranking); });
            if (!warnings.empty()) run.write("warnings.txt", [&](std::ostream& out) { out << text_of(warnings); });
            run.finish();
          }};
}

Command add_cohort_eval(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("cohort-eval", "New Entry vs Fixed Population, and the exited cohort");
  struct Opts {
    std::string features, first_edits, labels, trait = "gender", target, mode = "all";
    int cutoff_frame = 5;
    std::vector<std::string> coefficients;
    TrainFlags train;
    InfoFlags info;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--features", o->features, "Feature cache, event cache or event log")
      ->required()
      ;
  app->add_option("--first-edits", o->first_edits);
  app->add_option("--labels", o->labels)->required();
  app->add_option("--trait", o->trait);
  app->add_option("--class", o->target, "Positive class (one vs all)")->required();
  app->add_option("--mode", o->mode)->check(CLI::IsMember({"all", "ne-fp", "exited"}));
  app->add_option("--cutoff-frame", o->cutoff_frame, "First frame (1-based) of the exited period");
  app->add_option("--coefficients", o->coefficients,
                  "Categories or columns traced for the exited models (default: every category)");
  o->train.add(app);
  o->info.add(app);

  return {app, [o, &common] {
            Run run("cohort-eval", common);
            const ActivityTable table = load_table(o->features, o->first_edits, common, run);
            record_grid(run, table);
            const LabelTable labels = load_labels(o->labels, run);
            const Trait trait = trait_of(o->trait);
            const std::string target = class_of(trait, o->target);
            const TrainSpec spec = o->train.spec(common);
            run.params["trait"] = std::string(to_string(trait));
            run.params["class"] = target;
            run.params["mode"] = o->mode;
            o->train.record(run, spec);

            std::vector<std::pair<std::string, UserSet>> cohorts;
            cohorts.emplace_back("new_entry", select_cohort(table, {CohortKind::NewEntry, 0}));
            cohorts.emplace_back("fixed_population", select_cohort(table, {CohortKind::FixedPopulation, 0}));

            if (o->mode != "exited") {
              const NeFpComparison cmp = compare_ne_fp(table, labels, trait, target, spec);
              run.write("ne_fp.csv", [&](std::ostream& out) { write_ne_fp(out, cmp); });
              run.write("ne_eval.csv", [&](std::ostream& out) { write_eval_series(out, cmp.new_entry); });
              run.write("fp_eval.csv", [&](std::ostream& out) { write_eval_series(out, cmp.fixed_population); });
            }
            if (o->mode != "ne-fp") {
              const int cutoff = o->cutoff_frame - 1;
              run.params["cutoff_frame"] = o->cutoff_frame;
              o->info.record(run);
              ExitedOptions eo;
              eo.discretization = o->info.discretization();
              eo.transfer = o->info.transfer();
              const ExitedResult res = exited_eval(table, labels, trait, target, cutoff, spec, eo);
              cohorts.emplace_back("exited", res.exited);
              run.write("exited_eval.csv", [&](std::ostream& out) { write_eval_series(out, res.series); });
              run.write("exited_transfer.csv", [&](std::ostream& out) { write_transfer_series(out, res.transfer); });
              const std::vector<std::string> names =
                  o->coefficients.empty() ? table.scheme().names() : o->coefficients;
              run.params["coefficients"] = names;
              const CoefficientTable ct = coefficient_trajectories(res.models, res.horizons, names);
              run.write("exited_coefficients.csv", [&](std::ostream& out) { write_coefficient_table(out, ct); });
              std::vector<std::string> notes = res.notes;
              notes.insert(notes.end(), res.series.warnings.begin(), res.series.warnings.end());
              run.write("exited_notes.txt", [&](std::ostream& out) { out << text_of(notes); });
            }
            run.write("cohorts.csv", [&](std::ostream& out) { write_cohort_membership(out, cohorts); });
            run.finish();
          }};
}

Command add_synth(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("synth", "Generate a synthetic corpus with planted signal");
  struct Opts {
    std::string config;
    int users = 0;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--config", o->config,
                  "planted_signal, null, newcomer_signal, exit_amplify, or a JSON config file")
      ->required();
  app->add_option("--users", o->users, "Override the number of users")->check(CLI::PositiveNumber);

  return {app, [o, &common] {
            Run run("synth", common);
            SynthConfig config;
            if (fs::is_regular_file(o->config)) {
              run.input("config", o->config);
              std::ifstream in = open_input(o->config);
              std::stringstream ss;
              ss << in.rdbuf();
              config = SynthConfig::from_json(ss.str());
            } else {
              config = reference_config(o->config);
            }
            if (common.seed_opt->count()) config.seed = common.seed;
            if (o->users > 0) config.n_users = o->users;
            if (common.origin_opt->count()) config.grid_origin = common.grid_origin;
            if (common.frames_opt->count()) config = config.with_frames(common.grid_frames);
            config.validate();
            run.seed(config.seed);
            run.config_hash = config.hash();
            run.params["config"] = config.name;

            const SynthOutput outp = generate(config, common.threads);
            run.write("events.csv", [&](std::ostream& out) { write_event_log(out, outp.events); });
            run.write("labels.csv", [&](std::ostream& out) { write_trait_labels(out, outp.labels); });
            run.write("first_edits.csv", [&](std::ostream& out) { write_first_edits(out, outp.first_edits); });
            run.write("truth.csv", [&](std::ostream& out) { write_truth(out, outp.truth); });
            run.write("rates.csv", [&](std::ostream& out) { write_rates(out, outp.truth); });
            run.write("config.json", [&](std::ostream& out) { out << config.to_json() << "\n"; });
            run.finish();
          }};
}

Command add_report(CLI::App& root, Common& common) {
  auto* app = root.add_subcommand("report", "Draw an SVG chart from any CSV the toolkit writes");
  struct Opts {
    std::string input, kind = "auto", x, title, name;
    std::vector<std::string> y, group;
  };
  auto o = std::make_shared<Opts>();
  app->add_option("--input", o->input)->required();
  app->add_option("--kind", o->kind)->check(CLI::IsMember({"auto", "line", "bar"}));
  app->add_option("--x", o->x, "Column on the x axis (bar: label column)");
  app->add_option("--y", o->y, "Value columns");
  app->add_option("--group", o->group, "Columns whose values split the rows into series");
  app->add_option("--title", o->title);
  app->add_option("--name", o->name, "Output file stem (default: input stem)");

  return {app, [o, &common] {
            Run run("report", common);
            run.input("table", o->input);
            const Csv csv = read_csv(o->input);
            ChartPlan plan;
            if (!o->x.empty() && !o->y.empty()) {
              plan = {o->kind == "bar" ? "bar" : "line", o->x, o->y, o->group};
            } else {
              plan = auto_plan(csv);
              if (o->kind != "auto") plan.kind = o->kind;
              if (!o->group.empty()) plan.group = o->group;
            }
            const std::string stem = o->name.empty() ? fs::path(o->input).stem().string() : o->name;
            run.manifest_name = stem + ".report.manifest.json";
            run.params["kind"] = plan.kind;
            run.params["x"] = plan.x;
            run.params["y"] = plan.y;
            run.params["group"] = plan.group;
            const std::string title = o->title.empty() ? stem : o->title;
            const std::string chart = render(csv, plan, title);
            run.write(stem + ".svg", [&](std::ostream& out) { out << chart; });
            run.finish();
          }};
}

}  // namespace crumbs::cli
