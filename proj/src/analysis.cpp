#include "pitsim/analysis.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PitOptions lean() { return {.record_paths = false, .check_invariants = false}; }

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

Renewals detect_renewals(std::span<const EventRecord> log, double f0, bool from_origin) {
  Renewals out;
  bool have_prev = from_origin;
  double prev_t = 0.0, prev_f = f0;
  for (const auto& rec : log) {
    if (!rec.solitary()) continue;
    if (have_prev) out.records.push_back({rec.time - prev_t, rec.fitness - prev_f});
    out.times.push_back(rec.time);
    out.fitness.push_back(rec.fitness);
    prev_t = rec.time;
    prev_f = rec.fitness;
    have_prev = true;
  }
  return out;
}

SpeedEstimate speed_estimate(std::span<const RenewalRecord> records) {
  if (records.size() < 2) throw ConfigError("speed estimate needs at least two renewal records");
  double len = 0.0, rew = 0.0;
  for (const auto& r : records) {
    len += r.length;
    rew += r.reward;
  }
  SpeedEstimate est;
  est.n_cycles = records.size();
  est.v_hat = rew / len;
  double ss = 0.0;
  for (const auto& r : records) {
    const double d = r.reward - est.v_hat * r.length;
    ss += d * d;
  }
  const auto n = static_cast<double>(records.size());
  est.sigma2_hat = (ss / n) / (len / n);
  est.std_error = std::sqrt(est.sigma2_hat / len);
  return est;
}

double point_mass_speed(double lambda, double c) { return lambda * c * c / (1.0 + c + lambda); }

Renewals simulate_renewals(PitSystem system, std::size_t cycles) {
  system.advance_until_solitary(cycles);
  return detect_renewals(system.log(), system.f0(), system.starts_in_bottleneck());
}

FcltReport fclt_diagnostic(double lambda, const IncrementDistribution& gamma, double n,
                           std::span<const double> times, std::size_t runs, double v, double sigma2,
                           std::uint64_t seed, unsigned threads) {
  if (runs < kFcltMinRuns) {
    throw ConfigError("fclt diagnostic needs at least " + std::to_string(kFcltMinRuns) + " runs, got " +
                      std::to_string(runs));
  }
  if (!(n > 0.0)) throw ConfigError("scale n must be positive");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) || !(times.front() > 0.0))
    throw ConfigError("fclt times must be positive and sorted");
  if (!gamma.has_finite_second_moment())
    throw ConfigError("fclt diagnostic needs an increment law with finite second moment");

  const double scale = std::sqrt(sigma2 * n);
  auto per_run = run_replicates(
      runs,
      [&](std::size_t r) {
        auto sys = PitSystem::poisson(lambda, gamma, Rng::stream(seed, r), lean());
        std::vector<double> z;
        for (double t : times) {
          sys.advance(n * t);
          z.push_back((sys.resident_fitness() - v * n * t) / scale);
        }
        return z;
      },
      threads);

  FcltReport rep;
  rep.n = n;
  rep.runs = runs;
  rep.low_n = n < kFcltLowN;
  rep.times.assign(times.begin(), times.end());
  rep.samples.assign(times.size(), std::vector<double>(runs));
  for (std::size_t r = 0; r < runs; ++r)
    for (std::size_t k = 0; k < times.size(); ++k) rep.samples[k][r] = per_run[r][k];
  const auto m = static_cast<double>(runs);
  for (const auto& col : rep.samples) {
    const double mu = std::accumulate(col.begin(), col.end(), 0.0) / m;
    double ss = 0.0;
    for (double x : col) ss += (x - mu) * (x - mu);
    rep.mean.push_back(mu);
    rep.variance.push_back(ss / (m - 1.0));
  }
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    double cov = 0.0;
    for (std::size_t r = 0; r < runs; ++r)
      cov += (rep.samples[k][r] - rep.mean[k]) * (rep.samples[k + 1][r] - rep.mean[k + 1]);
    cov /= (m - 1.0);
    rep.lag_correlation.push_back(cov / std::sqrt(rep.variance[k] * rep.variance[k + 1]));
  }
  return rep;
}

double pi_gl(const ContenderLaw& law, double a) {
  if (!(a > 0.0)) throw DomainError("pi_gl needs a > 0");
  return std::exp(-(law.rate() / a) * law.tail({a, false}));
}

double pi_rgl(const ContenderLaw& law, double a) {
  const double past = law.integrate([](double b) { return 1.0 / b; }, {a, true});
  return pi_gl(law, a) * std::exp(-law.rate() * past);
}

namespace {

double heuristic_speed(const ContenderLaw& law, bool refined) {
  if (law.base().kind() == IncrementDistribution::Kind::PointMass) {
    const double c = law.base().params().front();
    return law.rate() * c * (refined ? std::exp(-law.rate() / c) : 1.0);
  }
  auto integrand = [&](double a) { return a * (refined ? pi_rgl(law, a) : pi_gl(law, a)); };
  return law.rate() * law.integrate(integrand, {}, 1e-6);
}

}  // namespace

double glh_speed(const ContenderLaw& law) { return heuristic_speed(law, false); }
double rglh_speed(const ContenderLaw& law) { return heuristic_speed(law, true); }
double glh_speed(double lambda, const IncrementDistribution& gamma) {
  return glh_speed(contender_params(lambda, gamma));
}
double rglh_speed(double lambda, const IncrementDistribution& gamma) {
  return rglh_speed(contender_params(lambda, gamma));
}

std::vector<TrajectoryId> FixationReport::ids(bool FixationFlags::*flag) const {
  std::vector<TrajectoryId> out;
  for (std::size_t k = 0; k < flags.size(); ++k)
    if (flags[k].*flag) out.push_back(static_cast<TrajectoryId>(k + 1));
  return out;
}

bool FixationReport::lattice_holds() const {
  return std::all_of(flags.begin(), flags.end(), [](const FixationFlags& f) {
    return (!f.solitary || f.ancestral) && (!f.ancestral || f.resident);
  });
}

FixationReport classify_fixation(std::span<const EventRecord> log, const Genealogy& genealogy) {
  FixationReport rep;
  rep.flags.resize(genealogy.size());
  auto slot = [&](TrajectoryId id) -> FixationFlags* {
    if (id < 1 || static_cast<std::size_t>(id) > rep.flags.size()) return nullptr;
    return &rep.flags[static_cast<std::size_t>(id - 1)];
  };
  std::vector<double> birth(rep.flags.size(), kInf);
  double last_solitary = -kInf;
  for (const auto& rec : log) {
    auto* f = slot(rec.trajectory_id);
    if (rec.kind == EventKind::Immigration && f) {
      f->contender = rec.value > 0.0;
      birth[static_cast<std::size_t>(rec.trajectory_id - 1)] = rec.time;
    } else if (rec.kind == EventKind::ResidentChange) {
      if (f) f->resident = true;
      if (rec.solitary()) {
        last_solitary = rec.time;
        if (f) f->solitary = true;
      }
    }
  }
  for (std::size_t k = 0; k < rep.flags.size(); ++k) {
    if (!rep.flags[k].solitary) continue;
    for (TrajectoryId id : genealogy.lineage(static_cast<TrajectoryId>(k + 1)))
      if (auto* f = slot(id)) f->ancestral = true;
  }
  for (std::size_t k = 0; k < rep.flags.size(); ++k) rep.flags[k].final = birth[k] < last_solitary;
  return rep;
}

FixationReport classify_fixation(const PitSystem& system) {
  return classify_fixation(system.log(), system.genealogy());
}

std::vector<bool> rglh_retained(std::span<const double> times, std::span<const double> inc) {
  if (times.size() != inc.size()) throw ConfigError("times and increments differ in length");
  const std::size_t n = times.size();
  std::vector<bool> keep(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j > i && times[i] < times[j] && times[j] < times[i] + 1.0 / inc[i] && inc[j] > inc[i])
        keep[i] = false;
      if (j < i && times[j] < times[i] && times[i] < times[j] + 1.0 / inc[j] && inc[j] >= inc[i])
        keep[i] = false;
    }
  }
  return keep;
}

double three_contender_final_fitness(const ThreeContenders& s) {
  auto sys = PitSystem::replay({{1.0, 0.0}}, {ImmigrationEntry::with_slope(s.t1, s.a),
                                              ImmigrationEntry::with_slope(s.t2, s.b),
                                              ImmigrationEntry::with_slope(s.t3, s.c)});
  while (sys.step()) {
  }
  return sys.resident_fitness();
}

bool is_rglh_misprediction(const ThreeContenders& s) {
  if (!(s.a < s.b)) return false;
  const double times[] = {s.t1, s.t2, s.t3};
  const double inc[] = {s.a, s.b, s.c};
  const auto keep = rglh_retained(times, inc);
  if (keep != std::vector<bool>{false, true, false}) return false;
  return std::abs(three_contender_final_fitness(s) - (s.a + s.c)) <= 1e-9 &&
         std::abs(s.a + s.c - s.b) > 1e-9;
}

ThreeContenders rglh_misprediction_fixture() { return {1.0, 1.8, 2.35, 1.0, 1.5, 0.8}; }

HeightTrace pit_height_trace(const PitSystem& system, std::span<const double> grid) {
  HeightTrace out;
  out.grid.assign(grid.begin(), grid.end());
  for (const auto& tr : system.trajectories()) {
    auto& col = out.heights[tr.id];
    col.reserve(grid.size());
    for (double t : grid) col.push_back(tr.height_at(t));
  }
  return out;
}

HeightTrace moran_height_trace(const MoranRun& run, std::span<const double> grid) {
  HeightTrace out;
  out.grid.assign(grid.begin(), grid.end());
  const auto& st = run.final_state;
  for (std::size_t id = 0; id < st.type_count(); ++id)
    out.heights[static_cast<TrajectoryId>(id)].assign(grid.size(), 0.0);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (pos + 1 < run.trace.size() && run.trace[pos + 1].time <= grid[k] + kTimeEpsilon) ++pos;
    if (run.trace.empty() || run.trace[pos].time > grid[k] + kTimeEpsilon) continue;
    for (const auto& [id, n] : run.trace[pos].counts)
      out.heights[id][k] = std::min(1.0, std::log1p(static_cast<double>(n)) / st.log_n);
  }
  return out;
}

double sup_distance(const HeightTrace& a, const HeightTrace& b) {
  if (a.grid.size() != b.grid.size()) throw ConfigError("traces are sampled on different grids");
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    if (std::abs(a.grid[k] - b.grid[k]) > 1e-9) throw ConfigError("traces are sampled on different grids");
  double worst = 0.0;
  for (const auto& [id, ha] : a.heights) {
    auto it = b.heights.find(id);
    if (it == b.heights.end()) continue;
    for (std::size_t k = 0; k < ha.size(); ++k) worst = std::max(worst, std::abs(ha[k] - it->second[k]));
  }
  return worst;
}

namespace {

struct Seg {
  double x0, y0, x1, y1;
};

std::vector<Seg> completed_graph(const StepFunction& f, double end) {
  if (f.empty()) throw ConfigError("empty step function");
  std::vector<Seg> out;
  double x = f.front().first, y = f.front().second;
  for (std::size_t k = 1; k < f.size() && f[k].first <= end; ++k) {
    out.push_back({x, y, f[k].first, y});
    out.push_back({f[k].first, y, f[k].first, f[k].second});
    x = f[k].first;
    y = f[k].second;
  }
  out.push_back({x, y, std::max(x, end), y});
  return out;
}

double point_segment(double px, double py, const Seg& s) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double u = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return std::hypot(px - (s.x0 + u * dx), py - (s.y0 + u * dy));
}

double directed(const std::vector<Seg>& from, const std::vector<Seg>& to, double resolution) {
  double worst = 0.0;
  for (const auto& s : from) {
    const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
    const auto pieces = static_cast<std::size_t>(std::ceil(len / resolution));
    for (std::size_t k = 0; k <= pieces; ++k) {
      const double u = pieces ? static_cast<double>(k) / static_cast<double>(pieces) : 0.0;
      const double px = s.x0 + u * (s.x1 - s.x0), py = s.y0 + u * (s.y1 - s.y0);
      double best = kInf;
      for (const auto& t : to) best = std::min(best, point_segment(px, py, t));
      worst = std::max(worst, best);
    }
  }
  return worst;
}

}  // namespace

double graph_distance(const StepFunction& a, const StepFunction& b, double end, double resolution) {
  if (!(resolution > 0.0)) throw ConfigError("resolution must be positive");
  const auto ga = completed_graph(a, end);
  const auto gb = completed_graph(b, end);
  return std::max(directed(ga, gb, resolution), directed(gb, ga, resolution));
}

StepFunction moran_mean_fitness_path(const MoranRun& run) {
  StepFunction out;
  for (const auto& s : run.trace) {
    if (!out.empty() && out.back().second == s.mean_fitness) continue;
    if (!out.empty() && out.back().first == s.time) {
      out.back().second = s.mean_fitness;
    } else {
      out.emplace_back(s.time, s.mean_fitness);
    }
  }
  return out;
}

CoupledRun couple_run(std::int64_t population, std::span<const ImmigrationEntry> schedule,
                      double horizon, double grid_step, Rng& rng) {
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
  MoranRunOptions opts;
  opts.horizon = horizon;
  opts.grid_step = grid_step;
  opts.schedule.emplace();
  for (const auto& e : schedule) opts.schedule->push_back({e.time, e.increment});
  MoranRun moran = moran_run(moran_init(population, {population}, {0.0}), opts, rng);

  std::vector<ImmigrationEntry> flagged;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const bool b = i < moran.indicators.size() && moran.indicators[i].contender;
    flagged.push_back({schedule[i].time, b ? schedule[i].increment : 0.0, schedule[i].increment});
  }
  PitSystem pit = PitSystem::replay({{1.0, 0.0}}, std::move(flagged));
  pit.advance(horizon);

  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::floor(horizon / grid_step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) * grid_step);
  const double sup = sup_distance(moran_height_trace(moran, grid), pit_height_trace(pit, grid));
  const double fit = graph_distance(resident_fitness_path(pit), moran_mean_fitness_path(moran), horizon);
  return {std::move(moran), std::move(pit), std::move(grid), sup, fit};
}

InfiniteMeanProbe infinite_mean_probe(double lambda, const IncrementDistribution& gamma,
                                      std::span<const double> horizons, std::size_t replicates,
                                      std::uint64_t seed, unsigned threads) {
  if (replicates == 0) throw ConfigError("replicates must be positive");
  if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()) || !(horizons.front() > 0.0))
    throw ConfigError("horizons must be positive and sorted");
  InfiniteMeanProbe out;
  out.horizons.assign(horizons.begin(), horizons.end());
  if (gamma.has_finite_mean())
    out.warning = "increment law " + gamma.to_string() + " has a finite mean; F(t)/t stays bounded";
  auto ratios = run_replicates(
      replicates,
      [&](std::size_t r) {
        auto sys = PitSystem::poisson(lambda, gamma, Rng::stream(seed, r), lean());
        std::vector<double> v;
        for (double h : horizons) {
          sys.advance(h);
          v.push_back(sys.resident_fitness() / h);
        }
        return v;
      },
      threads);
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    std::vector<double> col;
    for (const auto& r : ratios) col.push_back(r[k]);
    out.medians.push_back(median(std::move(col)));
  }
  return out;
}

double high_mutation_limit(double b_sup, double t) { return b_sup * (std::ceil(b_sup * t) - 1.0); }

HighMutationProbe high_mutation_probe(const IncrementDistribution& gamma, double t,
                                      std::span<const double> lambdas, std::size_t replicates,
                                      double tolerance, std::uint64_t seed, unsigned threads) {
  if (!gamma.has_bounded_support())
    throw ConfigError("high mutation probe needs an increment law with bounded support");
  if (!(t > 0.0)) throw ConfigError("time must be positive");
  if (replicates == 0) throw ConfigError("replicates must be positive");
  HighMutationProbe out;
  out.limit = high_mutation_limit(gamma.support_sup(), t);
  out.tolerance = tolerance;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    HighMutationRow row;
    row.lambda = lambdas[k];
    const std::uint64_t sub = splitmix64(seed) + k;
    row.values = run_replicates(
        replicates,
        [&](std::size_t r) {
          auto sys = PitSystem::poisson(row.lambda, gamma, Rng::stream(sub, r), lean());
          sys.advance(t);
          return sys.resident_fitness();
        },
        threads);
    std::vector<double> err;
    std::size_t within = 0;
    for (double v : row.values) {
      err.push_back(std::abs(v - out.limit));
      within += err.back() <= tolerance;
    }
    row.fraction_within = static_cast<double>(within) / static_cast<double>(replicates);
    row.median_error = median(std::move(err));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace pitsim
