#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "crumbs/error.hpp"
#include "json.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kDegenerate = 3 };

int exit_code_of(crumbs::ErrorKind kind) {
  using crumbs::ErrorKind;
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownClass:
    case ErrorKind::UnknownFeature:
      return kUsage;
    case ErrorKind::DegeneratePrior:
    case ErrorKind::DegenerateFeature:
    case ErrorKind::EmptyCohort:
    case ErrorKind::EmptyDataset:
      return kDegenerate;
    default:
      return kInput;
  }
}

int fail(bool as_json, std::string_view kind, const std::string& message, int code) {
  if (as_json) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "crumbs: " << message << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crumbs: trait disclosure from accumulating activity traces"};
  app.require_subcommand(1);
  crumbs::cli::Common common;
  app.add_option("--out", common.out, "Output directory");
  common.seed_opt = app.add_option("--seed", common.seed, "Root seed for every random stream");
  app.add_option("--threads", common.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  common.origin_opt = app.add_option("--grid-origin", common.grid_origin, "First day of the first quarter");
  common.frames_opt = app.add_option("--grid-frames", common.grid_frames, "Number of quarterly frames");
  common.scheme_opt =
      app.add_option("--scheme", common.scheme, "Category scheme")->check(CLI::IsMember({"basic", "extended"}));
  app.add_flag("--error-json", common.error_json, "Report failures as one JSON line on stderr");
  app.set_config("--config-file", "", "TOML/INI file with default flag values (flags win)");

  std::vector<crumbs::cli::Command> commands{
      crumbs::cli::add_ingest(app, common),   crumbs::cli::add_profile(app, common),
      crumbs::cli::add_featurize(app, common), crumbs::cli::add_train_eval(app, common),
      crumbs::cli::add_infodyn(app, common),  crumbs::cli::add_cohort_eval(app, common),
      crumbs::cli::add_synth(app, common),    crumbs::cli::add_report(app, common),
  };
  for (auto& c : commands) c.app->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    bool as_json = common.error_json;
    for (int i = 1; i < argc; ++i) as_json = as_json || std::string(argv[i]) == "--error-json";
    return fail(as_json, "UsageError", e.what(), kUsage);
  }

  try {
    for (auto& c : commands) {
      if (app.got_subcommand(c.app)) c.run();
    }
  } catch (const crumbs::Error& e) {
    return fail(common.error_json, crumbs::to_string(e.kind()), e.what(), exit_code_of(e.kind()));
  } catch (const std::exception& e) {
    return fail(common.error_json, "IoError", e.what(), kInput);
  }
  return kOk;
}
