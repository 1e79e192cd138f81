#include "pitsim/moran.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void remove_live(MoranState& s, TypeId id) {
  auto it = std::lower_bound(s.live.begin(), s.live.end(), id);
  if (it != s.live.end() && *it == id) s.live.erase(it);
}

double pair_weight(const MoranState& s, TypeId j, TypeId l) {
  const double gain = std::max(0.0, s.fitness[j] - s.fitness[l]);
  return static_cast<double>(s.counts[j]) * static_cast<double>(s.counts[l]) * (1.0 + gain);
}

double resampling_total(const MoranState& s) {
  double total = 0.0;
  for (TypeId j : s.live)
    for (TypeId l : s.live)
      if (j != l) total += pair_weight(s, j, l);
  return total / static_cast<double>(s.population);
}

// Picks (j, l) with probability proportional to the pair rate and moves one
// individual from l to j.
std::pair<TypeId, TypeId> resample(MoranState& s, double total, Rng& rng) {
  double u = rng.uniform() * total * static_cast<double>(s.population);
  TypeId gj = s.live.front(), gl = s.live.back();
  bool picked = false;
  for (TypeId j : s.live) {
    for (TypeId l : s.live) {
      if (j == l) continue;
      gj = j;
      gl = l;
      u -= pair_weight(s, j, l);
      if (u < 0.0) {
        picked = true;
        break;
      }
    }
    if (picked) break;
  }
  ++s.counts[gj];
  if (--s.counts[gl] == 0) remove_live(s, gl);
  ++s.resampling_count;
  return {gj, gl};
}

TraceSample snapshot(const MoranState& s, double time) {
  TraceSample out;
  out.time = time;
  out.counts.reserve(s.live.size());
  for (TypeId id : s.live) out.counts.emplace_back(id, s.counts[id]);
  out.mean_fitness = mean_fitness(s);
  return out;
}

}  // namespace

double MoranState::log_frequency(TypeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= counts.size()) return 0.0;
  return std::min(1.0, std::log1p(static_cast<double>(counts[id])) / log_n);
}

Genealogy MoranState::genealogy() const {
  return Genealogy(std::vector<TypeId>(parents.begin() + 1, parents.end()));
}

MoranState moran_init(std::int64_t population, std::vector<std::int64_t> counts,
                      std::vector<double> fitness) {
  if (population < 2) throw ConfigError("population size must be at least 2");
  if (counts.empty()) throw ConfigError("at least one initial type is required");
  if (counts.size() != fitness.size()) throw ConfigError("counts and fitness differ in length");
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] < 0) throw ConfigError("negative count for type " + std::to_string(k));
    if (!std::isfinite(fitness[k])) throw ConfigError("non-finite fitness for type " + std::to_string(k));
    sum += counts[k];
  }
  if (sum != population) {
    throw ConfigError("counts sum to " + std::to_string(sum) + ", expected " + std::to_string(population));
  }
  MoranState s;
  s.population = population;
  s.log_n = std::log(static_cast<double>(population));
  s.counts = std::move(counts);
  s.fitness = std::move(fitness);
  s.parents.assign(s.counts.size(), -1);
  s.initial_types = s.counts.size();
  for (std::size_t k = 0; k < s.counts.size(); ++k)
    if (s.counts[k] > 0) s.live.push_back(static_cast<TypeId>(k));
  return s;
}

double mean_fitness(const MoranState& s) {
  double acc = 0.0;
  for (TypeId id : s.live) acc += static_cast<double>(s.counts[id]) * s.fitness[id];
  return acc / static_cast<double>(s.population);
}

MoranRates moran_rates(const MoranState& s, double lambda) {
  return {resampling_total(s), lambda / s.log_n};
}

TypeId moran_mutate(MoranState& s, double increment, Rng& rng) {
  auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.population)));
  TypeId parent = s.live.back();
  for (TypeId id : s.live) {
    if (u < s.counts[id]) {
      parent = id;
      break;
    }
    u -= s.counts[id];
  }
  const auto child = static_cast<TypeId>(s.counts.size());
  s.counts.push_back(1);
  s.fitness.push_back(s.fitness[parent] + increment);
  s.parents.push_back(parent);
  if (--s.counts[parent] == 0) remove_live(s, parent);
  s.live.push_back(child);
  ++s.mutation_count;
  return child;
}

MoranEvent moran_step(MoranState& s, double lambda, const IncrementDistribution& gamma, Rng& rng) {
  const auto rates = moran_rates(s, lambda);
  const double total = rates.resampling + rates.mutation;
  MoranEvent ev;
  if (!(total > 0.0)) {
    ev.raw_time = s.raw_clock;
    return ev;
  }
  s.raw_clock += rng.exponential(total);
  ev.raw_time = s.raw_clock;
  if (rng.uniform() * total < rates.mutation) {
    const double a = gamma.sample(rng);
    ev.kind = MoranEvent::Kind::Mutation;
    ev.grows = moran_mutate(s, a, rng);
    ev.shrinks = s.parents[ev.grows];
  } else {
    ev.kind = MoranEvent::Kind::Resampling;
    std::tie(ev.grows, ev.shrinks) = resample(s, rates.resampling, rng);
  }
  return ev;
}

double contender_delay(std::int64_t population) {
  return 1.0 / std::sqrt(std::log(static_cast<double>(population)));
}

MoranRun moran_run(MoranState state, const MoranRunOptions& opt, Rng& rng) {
  if (!(opt.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(opt.grid_step > 0.0)) throw ConfigError("grid_step must be positive");
  const bool coupled = opt.schedule.has_value();
  if (!coupled && opt.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!coupled && opt.lambda > 0.0 && !opt.gamma) throw ConfigError("Poisson mutation needs gamma");
  if (coupled) {
    const auto& sch = *opt.schedule;
    for (std::size_t k = 0; k < sch.size(); ++k) {
      if (!(sch[k].time > 0.0) || (k > 0 && !(sch[k].time > sch[k - 1].time)))
        throw ConfigError("mutation schedule times must be positive and increasing");
      if (!(sch[k].increment >= 0.0)) throw ConfigError("mutation increments must be nonnegative");
    }
  }

  MoranRun run;
  run.final_state = std::move(state);
  MoranState& s = run.final_state;
  const double L = s.log_n;
  const double horizon_raw = opt.horizon * L;
  const double delay_raw = contender_delay(s.population) * L;

  std::size_t sched_pos = 0;
  auto next_mutation = [&]() -> double {
    if (coupled) return sched_pos < opt.schedule->size() ? (*opt.schedule)[sched_pos].time * L : kInf;
    return opt.lambda > 0.0 ? s.raw_clock + rng.exponential(opt.lambda / L) : kInf;
  };
  double t_mut = next_mutation();

  std::size_t grid_k = 0;
  auto grid_raw = [&]() { return static_cast<double>(grid_k) * opt.grid_step * L; };
  const auto grid_points = static_cast<std::size_t>(std::floor(opt.horizon / opt.grid_step + 1e-9)) + 1;

  std::vector<std::size_t> pending;  // indices into run.indicators
  std::size_t pending_pos = 0;

  for (;;) {
    const double rate = resampling_total(s);
    const double t_jump = rate > 0.0 ? s.raw_clock + rng.exponential(rate) : kInf;
    const double t_event = std::min(t_jump, t_mut);
    const double until = std::min(t_event, horizon_raw);

    for (;;) {
      const double tg = grid_k < grid_points ? grid_raw() : kInf;
      const double ti = pending_pos < pending.size()
                            ? run.indicators[pending[pending_pos]].evaluated_at * L
                            : kInf;
      if (std::min(tg, ti) > until) break;
      if (ti <= tg) {
        auto& ind = run.indicators[pending[pending_pos++]];
        ind.count = s.counts[ind.type];
        ind.evaluated = true;
        ind.contender = static_cast<double>(ind.count) >= L;
        if (opt.record_trace) run.trace.push_back(snapshot(s, ind.evaluated_at));
      } else {
        if (opt.record_trace) run.trace.push_back(snapshot(s, static_cast<double>(grid_k) * opt.grid_step));
        ++grid_k;
      }
    }
    if (t_event > horizon_raw) {
      s.raw_clock = horizon_raw;
      break;
    }
    s.raw_clock = t_event;
    if (t_mut <= t_jump) {
      double increment = 0.0;
      if (coupled) {
        increment = (*opt.schedule)[sched_pos++].increment;
      } else {
        increment = opt.gamma->sample(rng);
      }
      const TypeId child = moran_mutate(s, increment, rng);
      const double birth = s.raw_clock / L;
      ContenderIndicator ind;
      ind.type = child;
      ind.birth = birth;
      ind.evaluated_at = (s.raw_clock + delay_raw) / L;
      run.indicators.push_back(ind);
      pending.push_back(run.indicators.size() - 1);
      if (opt.record_trace) run.trace.push_back(snapshot(s, birth));
      t_mut = next_mutation();
    } else {
      resample(s, rate, rng);
    }
    if (opt.stop_when_monomorphic && s.live.size() == 1 && t_mut == kInf) {
      run.monomorphic = true;
      break;
    }
  }
  if (s.live.size() == 1) run.monomorphic = true;
  return run;
}

std::int64_t sample_count(const TraceSample& s, TypeId type) {
  for (const auto& [id, n] : s.counts)
    if (id == type) return n;
  return 0;
}

std::string trace_csv(const MoranRun& run, std::int64_t population) {
  const double L = std::log(static_cast<double>(population));
  std::string out = "time,type_id,count,H,mean_fitness\n";
  char buf[160];
  for (const auto& smp : run.trace) {
    for (const auto& [id, n] : smp.counts) {
      const double h = std::min(1.0, std::log1p(static_cast<double>(n)) / L);
      std::snprintf(buf, sizeof buf, "%.17g,%lld,%lld,%.17g,%.17g\n", smp.time,
                    static_cast<long long>(id), static_cast<long long>(n), h, smp.mean_fitness);
      out += buf;
    }
  }
  return out;
}

}  // namespace pitsim
