#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crumbs/digest.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

const fs::path& work() {
  static const fs::path dir = [] {
    fs::path d = fs::path(CRUMBS_CLI_WORK);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const std::string& args) {
  const fs::path err = work() / "stderr.txt";
  const std::string cmd = "cd '" + work().string() + "' && '" CRUMBS_CLI "' " + args + " > /dev/null 2> '" +
                          err.string() + "'";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(err)};
}

// Small corpus shared by the cases below.
void ensure_corpus() {
  static bool done = false;
  if (done) return;
  REQUIRE(cli("--grid-frames 4 --seed 1 --out corpus synth --config planted_signal --users 120").code == 0);
  std::ofstream(work() / "ghost.csv") << "user_id,trait,class\nghost,gender,female\n";
  std::ofstream(work() / "bad.csv") << "a,b\n1,2\n";
  done = true;
}

nlohmann::json error_json(const Result& r) { return nlohmann::json::parse(r.err); }

}  // namespace

TEST_CASE("success writes outputs and a manifest that describes them") {
  ensure_corpus();
  const auto m = nlohmann::json::parse(slurp(work() / "corpus" / "synth.manifest.json"));
  CHECK(m["command"] == "synth");
  CHECK(m["seed"] == 1);
  REQUIRE(m["outputs"].size() == 6);
  for (const auto& o : m["outputs"]) {
    const fs::path p = work() / "corpus" / o["file"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(o["bytes"].get<std::uintmax_t>() == fs::file_size(p));
    CHECK(o["digest"] == crumbs::digest_file(p));
  }
}

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  const auto r = cli("--error-json synth --config null --no-such-flag");
  CHECK(r.code == 1);
  CHECK(error_json(r)["error"] == "UsageError");
  CHECK(cli("--error-json synth --config nope").code == 1);
  CHECK(cli("--threads 0 synth --config null").code == 1);
}

TEST_CASE("unknown class is a usage error") {
  ensure_corpus();
  const auto r = cli("--grid-frames 4 --error-json --out x train-eval --features corpus/events.csv "
                        "--labels corpus/labels.csv --class martian");
  CHECK(r.code == 1);
  CHECK(error_json(r)["error"] == "UnknownClass");
  CHECK(error_json(r)["exit_code"] == 1);
}

TEST_CASE("input and schema errors exit 2") {
  ensure_corpus();
  auto r = cli("--error-json --out x featurize --events missing.csv");
  CHECK(r.code == 2);
  CHECK(error_json(r)["error"] == "IoError");
  r = cli("--error-json --out x featurize --events bad.csv");
  CHECK(r.code == 2);
  CHECK(error_json(r)["error"] == "SchemaError");
  r = cli("--out x featurize --events bad.csv");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("crumbs: ", 0) == 0);
}

TEST_CASE("degenerate data exits 3") {
  ensure_corpus();
  auto r = cli("--grid-frames 4 --error-json --out x profile --events corpus/events.csv --labels ghost.csv");
  CHECK(r.code == 3);
  CHECK(error_json(r)["error"] == "DegeneratePrior");
  r = cli("--grid-frames 4 --error-json --out x infodyn --features corpus/events.csv --labels ghost.csv "
             "--class female");
  CHECK(r.code == 3);
  CHECK(error_json(r)["error"] == "EmptyDataset");
}

TEST_CASE("outputs do not depend on the thread count") {
  ensure_corpus();
  for (const char* t : {"1", "3"}) {
    const std::string out = std::string("thr") + t;
    REQUIRE(cli(std::string("--grid-frames 4 --seed 5 --threads ") + t + " --out " + out +
                   " train-eval --features corpus/events.csv --first-edits corpus/first_edits.csv "
                   "--labels corpus/labels.csv --class female --repeats 3 --lambda-grid 6")
                .code == 0);
    REQUIRE(cli(std::string("--grid-frames 4 --seed 9 --threads ") + t + " --out syn" + t +
                   " synth --config exit_amplify --users 80")
                .code == 0);
  }
  CHECK(slurp(work() / "thr1" / "eval_series.csv") == slurp(work() / "thr3" / "eval_series.csv"));
  CHECK(slurp(work() / "thr1" / "eval_repeats.csv") == slurp(work() / "thr3" / "eval_repeats.csv"));
  CHECK(slurp(work() / "syn1" / "events.csv") == slurp(work() / "syn3" / "events.csv"));
}

TEST_CASE("grid override reshapes a reference config") {
  const auto r = cli("--grid-frames 3 --out short synth --config newcomer_signal --users 30");
  REQUIRE(r.code == 0);
  const auto c = nlohmann::json::parse(slurp(work() / "short" / "config.json"));
  CHECK(c["frames"] == 3);
  CHECK(c["arrival"].size() == 3);
}
