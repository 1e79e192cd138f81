#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <stdlib.h>
#include <unistd.h>

#include <json.hpp>

#include "doctest.h"
#include "pitsim/cli.hpp"
#include "pitsim/errors.hpp"
#include "pitsim/scenario.hpp"

using namespace pitsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("pitsim_test_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal pit-run scenario") {
  auto s = parse_scenario("command = pit-run\nlambda = 1\ngamma = pointmass(1)\nhorizon = 1e4\nseed = 42\n");
  CHECK_NOTHROW(s.validate());
  CHECK(s.command == Command::PitRun);
  CHECK(s.horizon == 1e4);
  CHECK(s.seed == 42);
}

TEST_CASE("errors name the key") {
  CHECK(error_of("command = pit-run\nlambda = -1\n").rfind("lambda", 0) == 0);
  CHECK(error_of("command = speed\nlambda = 0\n").rfind("lambda", 0) == 0);
  CHECK(error_of("lamda = 1\n").rfind("lamda: unknown key", 0) == 0);
  CHECK(error_of("seed = 1.5\n").rfind("seed", 0) == 0);
  CHECK(error_of("gamma = gauss(1)\n").rfind("gamma", 0) == 0);
  CHECK(error_of("horizon 3\n").rfind("line 1", 0) == 0);
  CHECK(error_of("command = couple\nimmigration.times = 1,2\nimmigration.increments = 1\n")
            .rfind("immigration.increments", 0) == 0);
}

TEST_CASE("replay configuration file") {
  const auto s = load_scenario(PITSIM_SOURCE_DIR "/configs/six_mutation_replay.cfg");
  CHECK_NOTHROW(s.validate());
  CHECK(s.command == Command::PitReplay);
  const auto im = s.immigration();
  REQUIRE(im.size() == 6);
  const double times[] = {1.2, 1.4, 1.6, 2.5, 2.9, 3.2};
  const double slopes[] = {0.2, 0.0, 1.0, 2.0, 0.0, 1.6};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(im[i].time == times[i]);
    CHECK(im[i].slope == slopes[i]);
  }
}

TEST_CASE("scenario round trip and hash") {
  Scenario s;
  s.command = Command::Fclt;
  s.lambda = 0.1 + 0.2;
  s.gamma = IncrementDistribution::mixture({0.25, 0.75}, {IncrementDistribution::point_mass(1.0 / 3.0),
                                                          IncrementDistribution::pareto(1.0, 0.5)});
  s.start = {{0.1, 1.5}, {1.0, 0.0}};
  s.immigration_times = {1.0 / 7.0, 2.0};
  s.immigration_increments = {0.5, 1e-17};
  s.immigration_contender = {true, false};
  s.fclt_v = std::sqrt(2.0);
  s.seed = 18446744073709551615ULL;
  s.out = "somewhere";
  const Scenario back = parse_scenario(s.to_text());
  CHECK(back == s);
  CHECK(back.hash() == s.hash());

  Scenario moved = s;
  moved.out = "elsewhere";
  moved.threads = 7;
  CHECK(moved.hash() == s.hash());
  moved.seed = 3;
  CHECK(moved.hash() != s.hash());
  CHECK(s.hash().size() == 16);
}

TEST_CASE("flags override the configuration file") {
  TempDir tmp("flags");
  CHECK(run_cli({"--config", PITSIM_SOURCE_DIR "/configs/six_mutation_replay.cfg", "--horizon", "3",
                 "--out", tmp.path.string()}) == kExitOk);
  CHECK(summary(tmp.path)["scenario"]["horizon"] == "3");
  CHECK(run_cli({"pit-run", "--lambda", "-1", "--out", tmp.path.string()}) == kExitConfig);
  CHECK(run_cli({"no-such-command"}) == kExitConfig);
  CHECK(run_cli({"pit-run", "--set", "bogus"}) == kExitConfig);
}

TEST_CASE("pit-replay artifacts") {
  TempDir tmp("replay");
  REQUIRE(run_cli({"--config", PITSIM_SOURCE_DIR "/configs/six_mutation_replay.cfg", "--out", tmp.path.string()}) ==
          kExitOk);
  const auto sum = summary(tmp.path);
  const std::string hash = sum["scenario_hash"];
  CHECK(sum["invariants_ok"] == true);
  CHECK(sum["results"]["final_fitness"].get<double>() == doctest::Approx(2.6));
  CHECK(sum["results"]["parents"] == nlohmann::json::array({0, 0, 0, 0, 3, 3}));
  CHECK(sum["build_tag"].is_string());
  CHECK(sum["wall_time_seconds"].is_number());

  const auto events = slurp(tmp.path / "events.csv");
  CHECK(events.rfind("# scenario " + hash + "\n", 0) == 0);
  std::istringstream lines(slurp(tmp.path / "trajectories.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto row = nlohmann::json::parse(line);
    CHECK(row["scenario_hash"] == hash);
    ++n;
  }
  CHECK(n == 7);
}

TEST_CASE("reruns are byte identical") {
  for (const char* cmd : {"pit-run", "moran-run", "gw"}) {
    CAPTURE(cmd);
    TempDir a(std::string(cmd) + "_a"), b(std::string(cmd) + "_b");
    const std::vector<std::string> common{cmd, "--seed", "7", "--replicates", "3", "--horizon", "20", "--N", "500",
                                          "--threads", "2"};
    auto args_a = common, args_b = common;
    args_a.insert(args_a.end(), {"--out", a.path.string()});
    args_b.insert(args_b.end(), {"--out", b.path.string(), "--set", "threads=1"});
    REQUIRE(run_cli(args_a) == kExitOk);
    REQUIRE(run_cli(args_b) == kExitOk);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a.path)) {
      const auto name = entry.path().filename();
      if (name == "summary.json") continue;
      CHECK(slurp(entry.path()) == slurp(b.path / name));
      ++compared;
    }
    CHECK(compared >= 1);
  }
}

TEST_CASE("speed and heuristics summaries") {
  TempDir tmp("speed");
  REQUIRE(run_cli({"speed", "--lambda", "1", "--gamma", "pointmass(1)", "--cycles", "100000", "--seed", "42",
                   "--out", tmp.path.string()}) == kExitOk);
  const auto v = summary(tmp.path)["results"]["v_hat"].get<double>();
  CHECK(std::abs(v - 1.0 / 3.0) < 0.01 / 3.0);

  TempDir h("heur");
  REQUIRE(run_cli({"heuristics", "--lambda", "1", "--gamma", "pointmass(1)", "--out", h.path.string()}) == kExitOk);
  const auto res = summary(h.path)["results"];
  // λ* = λ c/(1+c) = 1/2; v_GL = λ* c and v_rGL = λ* c exp(-λ*/c).
  CHECK(res["v_GL"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res["v_rGL"].get<double>() == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("output directory from the environment") {
  Scenario s;
  ::setenv("PITSIM_OUT_DIR", "/tmp/from_env", 1);
  CHECK(output_directory(s) == fs::path("/tmp/from_env"));
  s.out = "given";
  CHECK(output_directory(s) == fs::path("given"));
  ::unsetenv("PITSIM_OUT_DIR");
  s.out.clear();
  CHECK(output_directory(s) == fs::path("pitsim_out"));
}
