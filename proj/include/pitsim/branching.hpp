#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pitsim/rng.hpp"

namespace pitsim {

/// Continuous-time binary Galton–Watson process: each individual splits at
/// rate b and dies at rate d.
struct GwParams {
  double birth = 1.0;
  double death = 0.0;
  std::int64_t initial = 1;
};

/// 1 - (d/b)^z; DomainError unless b > d >= 0.
double gw_survival_formula(double b, double d, std::int64_t z);

struct GwOptions {
  double horizon = 1e300;
  std::int64_t cap = 10'000'000;
  /// First hitting times of these levels are recorded (inf if never hit).
  std::vector<std::int64_t> levels;
  /// Z is read off at these (sorted) times.
  std::vector<double> observe;
};

struct GwPath {
  enum class Outcome { Extinct, Escaped, Horizon };
  Outcome outcome = Outcome::Horizon;
  double end_time = 0.0;          // T_0 when extinct
  std::int64_t max_level = 0;
  std::int64_t final_value = 0;
  std::vector<double> level_hits;
  std::vector<std::int64_t> observed;  // -1 past the end of the path

  bool survived() const { return outcome != Outcome::Extinct; }
};

/// Exact Gillespie path; stops at extinction, once Z >= cap, or at the horizon.
GwPath gw_run(const GwParams& params, const GwOptions& options, Rng& rng);

/// Gambler's ruin: for b <= d the bound z/g on reaching g before 0 from z;
/// for b > d the probability (d/b)^(g-z) of ever falling from g to z.
double gamblers_ruin(std::int64_t z, std::int64_t g, double b, double d);

/// Embedded jump chain of the process started at `start`: true if it visits
/// `target` before `stop` (stop on the far side of start from target, or
/// 0 when target > start).
bool gw_walk_hits(std::int64_t start, std::int64_t target, std::int64_t stop, double b, double d,
                  Rng& rng);

/// CSV: b,d,z,replicate,outcome,value (T_0 if extinct, Z at the end otherwise).
std::string gw_summary_csv(const GwParams& params, const std::vector<GwPath>& paths);

}  // namespace pitsim
