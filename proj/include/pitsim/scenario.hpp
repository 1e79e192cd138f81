#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pitsim/increments.hpp"
#include "pitsim/pit.hpp"

namespace pitsim {

enum class Command { PitRun, PitReplay, MoranRun, Couple, Speed, Heuristics, Gw, Fclt };

std::string_view command_name(Command c);
Command parse_command(std::string_view name);

/// Everything a run depends on. Configuration files use one `key = value`
/// per line; `#` starts a comment. Lists are comma separated; start entries
/// are written `height:slope`.
///
///   command, lambda, gamma, input (limit | contenders), N, horizon,
///   replicates, seed, grid_step, out, cycles, threads, f0, start,
///   immigration.times, immigration.increments, immigration.contender,
///   gw.b, gw.d, gw.z, gw.cap, fclt.n, fclt.times, fclt.v, fclt.sigma2
///
/// With input = contenders, lambda and gamma are taken as λ* and γ*.
struct Scenario {
  Command command = Command::PitRun;
  double lambda = 1.0;
  IncrementDistribution gamma = IncrementDistribution::point_mass(1.0);
  std::string input = "limit";
  std::int64_t population = 10000;
  double horizon = 100.0;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  double grid_step = 0.01;
  std::string out;
  std::size_t cycles = 10000;
  unsigned threads = 0;
  double f0 = 0.0;
  std::vector<StartEntry> start{{1.0, 0.0}};
  std::vector<double> immigration_times;
  std::vector<double> immigration_increments;
  std::vector<bool> immigration_contender;
  double gw_birth = 2.0;
  double gw_death = 1.0;
  std::int64_t gw_initial = 1;
  std::int64_t gw_cap = 10'000'000;
  double fclt_n = 1000.0;
  std::vector<double> fclt_times{1.0, 2.0};
  std::optional<double> fclt_v;
  std::optional<double> fclt_sigma2;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  /// Canonical text form; parse_scenario(to_text()) reproduces the scenario.
  std::string to_text() const;
  /// FNV-1a of the canonical text without `out` and `threads`, in hex.
  std::string hash() const;

  /// Sets one key; ConfigError naming the key on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Checks the constraints of the selected command.
  void validate() const;

  /// Immigration configuration for pit-replay and the coupled schedule.
  std::vector<ImmigrationEntry> immigration() const;
};

/// Parses configuration text; keys not set keep their defaults.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

}  // namespace pitsim
