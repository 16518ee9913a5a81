#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace crumbs::cli {

// Flags shared by every subcommand.
struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string grid_origin = "2007-01-01";
  int grid_frames = 26;
  std::string scheme = "basic";
  bool error_json = false;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* origin_opt = nullptr;
  CLI::Option* frames_opt = nullptr;
  CLI::Option* scheme_opt = nullptr;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

Command add_ingest(CLI::App& root, Common& common);
Command add_profile(CLI::App& root, Common& common);
Command add_featurize(CLI::App& root, Common& common);
Command add_train_eval(CLI::App& root, Common& common);
Command add_infodyn(CLI::App& root, Common& common);
Command add_cohort_eval(CLI::App& root, Common& common);
Command add_synth(CLI::App& root, Common& common);
Command add_report(CLI::App& root, Common& common);

}  // namespace crumbs::cli
