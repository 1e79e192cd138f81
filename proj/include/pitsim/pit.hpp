#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pitsim/genealogy.hpp"
#include "pitsim/increments.hpp"

namespace pitsim {

using TrajectoryId = std::int64_t;

/// Comparison tolerance for simultaneous event times.
inline constexpr double kTimeEpsilon = 1e-12;
/// Post-kink slopes at or below this count as nonpositive.
inline constexpr double kSlopeEpsilon = 1e-12;

/// Initial (height, slope) of a trajectory present at time 0.
/// Must lie in {0}x[0,inf) ∪ (0,1)xR ∪ {1}x(-inf,0].
struct StartEntry {
  double height = 0.0;
  double slope = 0.0;
  friend bool operator==(const StartEntry&, const StartEntry&) = default;
};

/// Trajectory born at `time` at height 0 with slope `slope`.
/// `increment` is the fitness increment over the parent (A_i); it differs
/// from `slope` only for non-contenders, whose slope is 0.
struct ImmigrationEntry {
  double time = 0.0;
  double slope = 0.0;
  double increment = 0.0;

  static ImmigrationEntry with_slope(double time, double slope) { return {time, slope, slope}; }
  static ImmigrationEntry from_input(const InputEvent& ev) {
    return {ev.time, ev.effective_slope(), ev.increment};
  }
};

class ImmigrationSource {
 public:
  virtual ~ImmigrationSource() = default;
  /// Next entry, or nullopt when the configuration is exhausted.
  virtual std::optional<ImmigrationEntry> next() = 0;
};

class FixedImmigration final : public ImmigrationSource {
 public:
  explicit FixedImmigration(std::vector<ImmigrationEntry> entries);
  std::optional<ImmigrationEntry> next() override;

 private:
  std::vector<ImmigrationEntry> entries_;
  std::size_t pos_ = 0;
};

/// Unbounded Poissonian input Ψ.
class PoissonImmigration final : public ImmigrationSource {
 public:
  explicit PoissonImmigration(InputStream stream) : stream_(std::move(stream)) {}
  std::optional<ImmigrationEntry> next() override {
    return ImmigrationEntry::from_input(stream_.next());
  }

 private:
  InputStream stream_;
};

enum class TrajectoryStatus { Latent, Active, Resident, Extinct };

/// Linear piece of a path: height(t) = start_height + slope * (t - start_time).
struct Segment {
  double start_time = 0.0;
  double start_height = 0.0;
  double slope = 0.0;
};

struct Trajectory {
  TrajectoryId id = 0;
  double birth_time = 0.0;
  std::optional<TrajectoryId> parent;
  double initial_slope = 0.0;
  double increment = 0.0;
  double fitness = 0.0;
  std::vector<Segment> segments;
  TrajectoryStatus status = TrajectoryStatus::Latent;
  double extinction_time = std::numeric_limits<double>::infinity();

  /// Height at time t (0 before birth).
  double height_at(double t) const;
  /// Right slope at time t.
  double slope_at(double t) const;
};

enum class EventKind { Immigration, ResidentChange, Extinction };

struct EventRecord {
  EventKind kind = EventKind::Immigration;
  double time = 0.0;
  TrajectoryId trajectory_id = 0;
  /// Initial slope for immigrations, v* for resident changes, 0 for extinctions.
  double value = 0.0;
  TrajectoryId resident_id = 0;
  double fitness = 0.0;
  /// Resident changes only: largest post-kink slope among the other
  /// trajectories of positive height (-inf if there are none).
  double max_other_slope = -std::numeric_limits<double>::infinity();
  TrajectoryId previous_resident = 0;

  bool solitary() const {
    return kind == EventKind::ResidentChange && max_other_slope <= kSlopeEpsilon;
  }
};

struct NextEvent {
  enum class Kind { Immigration, HitOne, HitZero, Stalled };
  Kind kind = Kind::Stalled;
  double time = std::numeric_limits<double>::infinity();
  TrajectoryId id = 0;
};

struct PitOptions {
  /// Keep every segment; otherwise only the current one is retained.
  bool record_paths = true;
  /// Check conservation and single-resident invariants after every event.
  bool check_invariants = true;
};

/// Event-driven system of interacting piecewise-linear trajectories.
///
/// Start entries get ids 0 (the (1,0) entry) and -1, -2, ... in the order
/// given; immigrants get ids 1, 2, ... in arrival order. The resident is the
/// unique trajectory at (height, slope) = (1, 0).
///
/// Simultaneous events (within kTimeEpsilon) are processed as one group:
/// extinctions, then a single resident change, then immigrations.
class PitSystem {
 public:
  PitSystem(std::vector<StartEntry> start, std::unique_ptr<ImmigrationSource> immigration,
            double f0 = 0.0, PitOptions options = {});

  /// PIT(λ, γ) started from a single resident.
  static PitSystem poisson(double lambda, const IncrementDistribution& gamma, Rng rng,
                           PitOptions options = {});
  /// Contender-only input at rate λ* with law γ*.
  static PitSystem contenders(const ContenderLaw& law, Rng rng, PitOptions options = {});
  /// Deterministic replay with a finite immigration configuration.
  static PitSystem replay(std::vector<StartEntry> start, std::vector<ImmigrationEntry> immigration,
                          double f0 = 0.0, PitOptions options = {});

  PitSystem(PitSystem&&) noexcept = default;
  PitSystem& operator=(PitSystem&&) noexcept = default;

  NextEvent next_event() const;

  /// Processes the next group of simultaneous events; returns false if stalled.
  bool step();

  /// Processes every event with time <= until, then sets the clock to until.
  /// The returned span views the records appended by this call.
  std::span<const EventRecord> advance(double until);

  /// Runs until `count` solitary resident changes have been logged in total.
  void advance_until_solitary(std::size_t count);

  /// Kinking rule for the trajectories in `hitters` (all at height 1 now).
  void apply_resident_change(std::span<const TrajectoryId> hitters);

  double clock() const { return clock_; }
  double f0() const { return f0_; }
  TrajectoryId resident_id() const { return resident_; }
  double resident_fitness() const { return fitness_; }
  double sum_of_kinks() const { return kink_sum_; }
  std::size_t solitary_count() const { return solitary_count_; }
  bool starts_in_bottleneck() const { return bottleneck_start_; }

  const std::vector<EventRecord>& log() const { return log_; }
  const Trajectory& trajectory(TrajectoryId id) const;
  bool has_trajectory(TrajectoryId id) const;
  std::span<const Trajectory> trajectories() const { return trajectories_; }
  TrajectoryId min_id() const { return -static_cast<TrajectoryId>(start_count_) + 1; }
  TrajectoryId max_id() const { return min_id() + static_cast<TrajectoryId>(trajectories_.size()) - 1; }

  Genealogy genealogy() const;

 private:
  Trajectory& mutable_trajectory(TrajectoryId id);
  double height_now(const Trajectory& tr) const;
  void reanchor(Trajectory& tr, double t, double height, double slope);
  void pull_immigration();
  void immigrate(const ImmigrationEntry& entry);
  void check_invariants() const;

  std::vector<Trajectory> trajectories_;
  std::vector<TrajectoryId> active_;  // positive height or positive slope, sorted by id
  std::unique_ptr<ImmigrationSource> source_;
  std::optional<ImmigrationEntry> pending_;
  std::vector<EventRecord> log_;
  PitOptions options_;
  std::size_t start_count_ = 0;
  TrajectoryId next_id_ = 1;
  TrajectoryId resident_ = 0;
  double clock_ = 0.0;
  double f0_ = 0.0;
  double fitness_ = 0.0;
  double kink_sum_ = 0.0;
  double last_immigration_ = -std::numeric_limits<double>::infinity();
  std::size_t solitary_count_ = 0;
  bool bottleneck_start_ = false;
};

/// Right-continuous step function of the resident fitness: (0, f0) then
/// (R_j, F(R_j)) for every resident change.
std::vector<std::pair<double, double>> resident_fitness_path(const PitSystem& system);

/// Value of a right-continuous step function at t.
double step_value(std::span<const std::pair<double, double>> steps, double t);

/// Segments of trajectory `id`; throws std::out_of_range for unknown ids.
std::vector<Segment> trajectory_path(const PitSystem& system, TrajectoryId id);

/// Largest violation of V_i(t') - V_i(t) = F(t) - F(t') over random pairs of
/// logged event times inside each trajectory's lifetime.
double slope_coupling_violation(const PitSystem& system, Rng& rng, std::size_t pairs_per_trajectory);

/// Largest excess of F(t) - f0 over the cumulative contender increments,
/// evaluated after every logged event (<= 0 when the bound holds).
double fitness_bound_excess(const PitSystem& system);

}  // namespace pitsim
