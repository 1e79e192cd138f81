#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pitsim/scenario.hpp"

namespace pitsim {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitInvariant = 3 };

/// Output directory: `out` from the scenario, else $PITSIM_OUT_DIR, else ./pitsim_out.
std::filesystem::path output_directory(const Scenario& scenario);

/// Runs a validated scenario and writes its artifacts into `dir`. Returns
/// kExitInvariant if a post-run invariant check failed.
int run_scenario(const Scenario& scenario, const std::filesystem::path& dir);

/// Entry point of the `pitsim` executable.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

std::string build_tag();

}  // namespace pitsim
