#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pitsim/genealogy.hpp"
#include "pitsim/increments.hpp"
#include "pitsim/rng.hpp"

namespace pitsim {

using TypeId = std::int64_t;

/// Multitype Moran model with selection and mutation.
///
/// Types are numbered in order of appearance: the initial types get ids
/// 0..k-1, mutants continue from k. Initial types other than 0 record
/// parent -1 in the genealogy.
struct MoranState {
  std::int64_t population = 0;
  double log_n = 0.0;
  std::vector<std::int64_t> counts;   // by type id, extinct types keep count 0
  std::vector<double> fitness;        // by type id
  std::vector<TypeId> parents;        // by type id
  std::vector<TypeId> live;           // ids with positive count, ascending
  std::size_t initial_types = 0;
  std::uint64_t mutation_count = 0;
  std::uint64_t resampling_count = 0;
  double raw_clock = 0.0;

  double rescaled_clock() const { return raw_clock / log_n; }
  std::size_t type_count() const { return counts.size(); }
  /// log(1 + X_i) / log N, capped at 1.
  double log_frequency(TypeId id) const;
  /// Mutant genealogy: parents of ids initial_types.. in order. For a single
  /// initial type this is the tree on {0, 1, ...}.
  Genealogy genealogy() const;
};

MoranState moran_init(std::int64_t population, std::vector<std::int64_t> counts,
                      std::vector<double> fitness);

/// (1/N) Σ X_i M_i.
double mean_fitness(const MoranState& state);

struct MoranEvent {
  enum class Kind { Resampling, Mutation, Stalled };
  Kind kind = Kind::Stalled;
  double raw_time = 0.0;
  TypeId grows = 0;   // resampling: type gaining an individual; mutation: new type
  TypeId shrinks = 0; // type losing an individual
};

/// Resampling and mutation rates per generation in the current state.
/// mutation_rate is λ/log N.
struct MoranRates {
  double resampling = 0.0;
  double mutation = 0.0;
};
MoranRates moran_rates(const MoranState& state, double lambda);

/// One jump of the chain with Poisson mutation at rate λ/log N per
/// generation and mutant increments drawn from gamma.
MoranEvent moran_step(MoranState& state, double lambda, const IncrementDistribution& gamma, Rng& rng);

/// Spawns a new type from a uniformly chosen individual.
TypeId moran_mutate(MoranState& state, double increment, Rng& rng);

struct ScheduledMutation {
  double time = 0.0;       // rescaled
  double increment = 0.0;
};

struct MoranRunOptions {
  double horizon = 1.0;          // rescaled
  double grid_step = 0.01;       // rescaled
  /// Poisson mode: rate λ on the rescaled clock. Ignored when a schedule is given.
  double lambda = 0.0;
  std::optional<IncrementDistribution> gamma;
  /// Coupled mode: mutations exactly at these rescaled times.
  std::optional<std::vector<ScheduledMutation>> schedule;
  bool stop_when_monomorphic = false;
  bool record_trace = true;
};

struct TraceSample {
  double time = 0.0;  // rescaled
  std::vector<std::pair<TypeId, std::int64_t>> counts;  // live types
  double mean_fitness = 0.0;
};

struct ContenderIndicator {
  TypeId type = 0;
  double birth = 0.0;        // rescaled
  double evaluated_at = 0.0; // birth + 1/sqrt(log N)
  std::int64_t count = 0;
  bool evaluated = false;    // false if the run ended first
  bool contender = false;    // count >= log N
};

struct MoranRun {
  std::vector<TraceSample> trace;
  std::vector<ContenderIndicator> indicators;
  MoranState final_state;
  bool monomorphic = false;
};

/// Runs from `state` to the rescaled horizon. The trace holds the grid
/// samples plus a sample right after each mutation and at each indicator
/// evaluation, sorted by time.
MoranRun moran_run(MoranState state, const MoranRunOptions& options, Rng& rng);

/// Rescaled delay 1/sqrt(log N) after which B^N is read off.
double contender_delay(std::int64_t population);

/// Count of `type` in a trace sample (0 if absent).
std::int64_t sample_count(const TraceSample& s, TypeId type);

/// CSV rows: time,type_id,count,H,mean_fitness.
std::string trace_csv(const MoranRun& run, std::int64_t population);

}  // namespace pitsim
