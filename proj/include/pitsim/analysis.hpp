#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pitsim/increments.hpp"
#include "pitsim/moran.hpp"
#include "pitsim/pit.hpp"

namespace pitsim {

// ---------------------------------------------------------------- renewals

struct RenewalRecord {
  double length = 0.0;
  double reward = 0.0;
};

struct Renewals {
  std::vector<double> times;    // L_1, L_2, ...
  std::vector<double> fitness;  // F(L_n)
  std::vector<RenewalRecord> records;
};

/// Solitary resident changes of a run. With `from_origin` the first record
/// is (L_1 - 0, F(L_1) - f0), which is valid when the run starts from a
/// single resident. Time after the last L_n is an incomplete cycle and is
/// not recorded.
Renewals detect_renewals(std::span<const EventRecord> log, double f0 = 0.0, bool from_origin = true);

struct SpeedEstimate {
  double v_hat = 0.0;
  double std_error = 0.0;
  std::size_t n_cycles = 0;
  double sigma2_hat = 0.0;
};

/// v = Σ reward / Σ length, σ² = mean((reward - v length)²) / mean(length),
/// stderr = σ / sqrt(Σ length). Needs at least two records.
SpeedEstimate speed_estimate(std::span<const RenewalRecord> records);

/// λc²/(1+c+λ).
double point_mass_speed(double lambda, double c);

/// Runs a fresh PIT until `cycles` solitary resident changes have occurred.
Renewals simulate_renewals(PitSystem system, std::size_t cycles);

// ------------------------------------------------------------------- FCLT

struct FcltReport {
  double n = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> samples;  // samples[k][r]: run r at times[k]
  std::vector<double> variance;
  std::vector<double> mean;
  /// Correlation between consecutive grid times.
  std::vector<double> lag_correlation;
  std::size_t runs = 0;
  bool low_n = false;
};

/// Threshold below which fclt_diagnostic flags its result.
inline constexpr double kFcltLowN = 100.0;
/// Minimum ensemble size accepted by fclt_diagnostic.
inline constexpr std::size_t kFcltMinRuns = 500;

/// Samples (F(nt) - v n t) / (σ sqrt(n)) over `runs` independent PIT(λ, γ)
/// runs, with replicate r driven by Rng::stream(seed, r).
FcltReport fclt_diagnostic(double lambda, const IncrementDistribution& gamma, double n,
                           std::span<const double> times, std::size_t runs, double v, double sigma2,
                           std::uint64_t seed, unsigned threads = 0);

// -------------------------------------------------------------- heuristics

double pi_gl(const ContenderLaw& law, double a);
double pi_rgl(const ContenderLaw& law, double a);
/// λ* ∫ a π(a) γ*(da); closed form for point masses, quadrature otherwise.
double glh_speed(const ContenderLaw& law);
double rglh_speed(const ContenderLaw& law);
double glh_speed(double lambda, const IncrementDistribution& gamma);
double rglh_speed(double lambda, const IncrementDistribution& gamma);

// --------------------------------------------------------------- fixation

struct FixationFlags {
  bool contender = false;
  bool resident = false;   // R
  bool solitary = false;   // SR
  bool ancestral = false;  // UA so far
  bool final = false;      // born before the last solitary change
};

struct FixationReport {
  /// flags[i - 1] for mutation i >= 1.
  std::vector<FixationFlags> flags;

  const FixationFlags& at(TrajectoryId id) const { return flags.at(static_cast<std::size_t>(id - 1)); }
  std::vector<TrajectoryId> ids(bool FixationFlags::*flag) const;
  /// SR ⊆ UA ⊆ R.
  bool lattice_holds() const;
};

FixationReport classify_fixation(std::span<const EventRecord> log, const Genealogy& genealogy);
FixationReport classify_fixation(const PitSystem& system);

// --------------------------------------------------- refined GL misprediction

struct ThreeContenders {
  double t1, t2, t3;
  double a, b, c;
};

/// Indices (0-based) retained by the refined rule: i is kept if no later
/// contender born in (T_i, T_i + 1/A_i) is fitter and no earlier j with
/// T_j < T_i < T_j + 1/A_j has A_j >= A_i.
std::vector<bool> rglh_retained(std::span<const double> times, std::span<const double> increments);

/// Final resident fitness of the replay of three contenders.
double three_contender_final_fitness(const ThreeContenders& s);

/// True if a < b, the replay ends at fitness a + c and the refined rule
/// retains only the middle mutation.
bool is_rglh_misprediction(const ThreeContenders& s);

/// Frozen instance of a three-contender configuration where the refined
/// rule retains only the middle mutation but the realised fitness is a + c.
ThreeContenders rglh_misprediction_fixture();

// -------------------------------------------------------------- distances

/// Heights per trajectory id on a common time grid.
struct HeightTrace {
  std::vector<double> grid;
  std::map<TrajectoryId, std::vector<double>> heights;
};

HeightTrace pit_height_trace(const PitSystem& system, std::span<const double> grid);
/// Log-frequencies from the trace samples; each grid time uses the last
/// sample at or before it.
HeightTrace moran_height_trace(const MoranRun& run, std::span<const double> grid);

/// Max over grid points and shared ids of |H_a - H_b|. ConfigError when
/// the grids differ.
double sup_distance(const HeightTrace& a, const HeightTrace& b);

using StepFunction = std::vector<std::pair<double, double>>;

/// Hausdorff distance between the completed graphs of two right-continuous
/// step functions on [start, end], with vertical segments filling the jumps.
/// Evaluated on points spaced at most `resolution` apart.
double graph_distance(const StepFunction& a, const StepFunction& b, double end,
                      double resolution = 1e-3);

StepFunction moran_mean_fitness_path(const MoranRun& run);

/// Moran run with mutations at the scheduled times, the PIT replay whose
/// contender flags are the observed B^N, and the distances between them.
struct CoupledRun {
  MoranRun moran;
  PitSystem pit;
  std::vector<double> grid;
  double sup_distance = 0.0;
  /// Graph distance between the PIT resident fitness and the Moran mean fitness.
  double fitness_distance = 0.0;
};

/// `schedule` gives times and increments A_i; slopes are ignored.
CoupledRun couple_run(std::int64_t population, std::span<const ImmigrationEntry> schedule,
                      double horizon, double grid_step, Rng& rng);

// ------------------------------------------------------------------ probes

struct InfiniteMeanProbe {
  std::vector<double> horizons;
  std::vector<double> medians;  // of F(t)/t
  std::optional<std::string> warning;
};

InfiniteMeanProbe infinite_mean_probe(double lambda, const IncrementDistribution& gamma,
                                      std::span<const double> horizons, std::size_t replicates,
                                      std::uint64_t seed, unsigned threads = 0);

struct HighMutationRow {
  double lambda = 0.0;
  std::vector<double> values;   // F_λ(t) per replicate
  double fraction_within = 0.0;
  double median_error = 0.0;
};

struct HighMutationProbe {
  double limit = 0.0;  // b(⌈bt⌉ - 1)
  double tolerance = 0.0;
  std::vector<HighMutationRow> rows;
};

/// b(⌈bt⌉ - 1).
double high_mutation_limit(double b_sup, double t);

HighMutationProbe high_mutation_probe(const IncrementDistribution& gamma, double t,
                                      std::span<const double> lambdas, std::size_t replicates,
                                      double tolerance, std::uint64_t seed, unsigned threads = 0);

// ---------------------------------------------------------------- helpers

double median(std::vector<double> values);

/// Runs fn(i) for i in [0, n) on a pool of threads; results are stored by
/// index, so the output does not depend on scheduling.
template <class Fn>
auto run_replicates(std::size_t n, Fn fn, unsigned threads = 0) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace pitsim
