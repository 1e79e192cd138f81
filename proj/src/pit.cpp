#include "pitsim/pit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_state_space(const StartEntry& e) {
  if (!std::isfinite(e.height) || !std::isfinite(e.slope)) return false;
  if (e.height == 0.0) return e.slope >= 0.0;
  if (e.height == 1.0) return e.slope <= 0.0;
  return e.height > 0.0 && e.height < 1.0;
}

double clamp01(double h) { return std::clamp(h, 0.0, 1.0); }

double anchor_height(const Segment& s, double t) {
  return clamp01(s.start_height + s.slope * (t - s.start_time));
}

std::size_t segment_index(const std::vector<Segment>& segs, double t) {
  auto it = std::upper_bound(segs.begin(), segs.end(), t,
                             [](double x, const Segment& s) { return x < s.start_time; });
  return it == segs.begin() ? 0 : static_cast<std::size_t>(it - segs.begin()) - 1;
}

}  // namespace

double Trajectory::height_at(double t) const {
  if (t < birth_time || segments.empty()) return 0.0;
  return anchor_height(segments[segment_index(segments, t)], t);
}

double Trajectory::slope_at(double t) const {
  if (t < birth_time || segments.empty()) return 0.0;
  return segments[segment_index(segments, t)].slope;
}

FixedImmigration::FixedImmigration(std::vector<ImmigrationEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (!(e.time > 0.0) || !std::isfinite(e.time)) {
      throw ConfigError("immigration time #" + std::to_string(k + 1) + " must be positive");
    }
    if (k > 0 && !(e.time > entries_[k - 1].time)) {
      throw ConfigError("immigration times must be strictly increasing (entry #" +
                        std::to_string(k + 1) + ")");
    }
    if (!(e.slope >= 0.0) || !(e.increment >= 0.0)) {
      throw ConfigError("immigration slopes and increments must be nonnegative (entry #" +
                        std::to_string(k + 1) + ")");
    }
  }
}

std::optional<ImmigrationEntry> FixedImmigration::next() {
  if (pos_ >= entries_.size()) return std::nullopt;
  return entries_[pos_++];
}

PitSystem::PitSystem(std::vector<StartEntry> start, std::unique_ptr<ImmigrationSource> immigration,
                     double f0, PitOptions options)
    : source_(std::move(immigration)), options_(options), start_count_(start.size()), f0_(f0),
      fitness_(f0) {
  if (start.empty()) throw ConfigError("start configuration is empty");
  std::size_t residents = 0;
  for (std::size_t a = 0; a < start.size(); ++a) {
    if (!in_state_space(start[a])) {
      throw ConfigError("start entry #" + std::to_string(a + 1) + " is outside the state space");
    }
    if (start[a] == StartEntry{1.0, 0.0}) ++residents;
    for (std::size_t b = 0; b < a; ++b) {
      if (start[a] == start[b]) {
        throw ConfigError("start entries #" + std::to_string(b + 1) + " and #" +
                          std::to_string(a + 1) + " coincide");
      }
    }
  }
  if (residents != 1) throw ConfigError("start configuration needs exactly one (1,0) entry");

  const auto k = static_cast<TrajectoryId>(start.size());
  trajectories_.resize(start.size());
  TrajectoryId next_negative = -1;
  for (const auto& e : start) {
    const bool is_resident = e == StartEntry{1.0, 0.0};
    const TrajectoryId id = is_resident ? 0 : next_negative--;
    auto& tr = trajectories_[static_cast<std::size_t>(id + k - 1)];
    tr.id = id;
    tr.birth_time = 0.0;
    tr.initial_slope = e.slope;
    tr.increment = e.slope;
    tr.fitness = e.slope + f0;
    tr.segments.push_back({0.0, e.height, e.slope});
    if (is_resident) {
      tr.status = TrajectoryStatus::Resident;
    } else if (e.height > 0.0 || e.slope > 0.0) {
      tr.status = TrajectoryStatus::Active;
    } else {
      tr.status = TrajectoryStatus::Latent;
    }
  }
  for (const auto& tr : trajectories_) {
    if (tr.status == TrajectoryStatus::Active || tr.status == TrajectoryStatus::Resident) {
      active_.push_back(tr.id);
    }
  }
  bottleneck_start_ = start.size() == 1;
  if (!source_) source_ = std::make_unique<FixedImmigration>(std::vector<ImmigrationEntry>{});
  pull_immigration();
}

PitSystem PitSystem::poisson(double lambda, const IncrementDistribution& gamma, Rng rng,
                             PitOptions options) {
  return PitSystem({{1.0, 0.0}},
                   std::make_unique<PoissonImmigration>(InputStream(lambda, gamma, std::move(rng))),
                   0.0, options);
}

PitSystem PitSystem::contenders(const ContenderLaw& law, Rng rng, PitOptions options) {
  return PitSystem({{1.0, 0.0}}, std::make_unique<PoissonImmigration>(InputStream(law, std::move(rng))),
                   0.0, options);
}

PitSystem PitSystem::replay(std::vector<StartEntry> start, std::vector<ImmigrationEntry> immigration,
                            double f0, PitOptions options) {
  return PitSystem(std::move(start), std::make_unique<FixedImmigration>(std::move(immigration)), f0,
                   options);
}

bool PitSystem::has_trajectory(TrajectoryId id) const { return id >= min_id() && id <= max_id(); }

const Trajectory& PitSystem::trajectory(TrajectoryId id) const {
  if (!has_trajectory(id)) throw std::out_of_range("unknown trajectory id " + std::to_string(id));
  return trajectories_[static_cast<std::size_t>(id - min_id())];
}

Trajectory& PitSystem::mutable_trajectory(TrajectoryId id) {
  return trajectories_[static_cast<std::size_t>(id - min_id())];
}

double PitSystem::height_now(const Trajectory& tr) const {
  return anchor_height(tr.segments.back(), clock_);
}

void PitSystem::reanchor(Trajectory& tr, double t, double height, double slope) {
  const Segment seg{t, height, slope};
  if (!options_.record_paths || tr.segments.back().start_time == t) {
    tr.segments.back() = seg;
  } else {
    tr.segments.push_back(seg);
  }
}

void PitSystem::pull_immigration() {
  pending_ = source_->next();
  if (!pending_) return;
  if (!(pending_->time > last_immigration_) || !(pending_->time > 0.0)) {
    throw ConfigError("immigration times must be positive and strictly increasing");
  }
  if (!(pending_->slope >= 0.0)) throw ConfigError("immigration slope must be nonnegative");
  last_immigration_ = pending_->time;
}

NextEvent PitSystem::next_event() const {
  NextEvent best;
  auto rank = [](NextEvent::Kind k) {
    switch (k) {
      case NextEvent::Kind::HitZero: return 0;
      case NextEvent::Kind::HitOne: return 1;
      case NextEvent::Kind::Immigration: return 2;
      default: return 3;
    }
  };
  auto consider = [&](NextEvent cand, double slope) {
    cand.time = std::max(cand.time, clock_);
    if (best.kind == NextEvent::Kind::Stalled || cand.time < best.time - kTimeEpsilon) {
      best = cand;
      return;
    }
    if (cand.time > best.time + kTimeEpsilon) return;
    if (rank(cand.kind) < rank(best.kind)) {
      best = cand;
    } else if (cand.kind == NextEvent::Kind::HitOne && best.kind == NextEvent::Kind::HitOne) {
      const double best_slope = trajectory(best.id).segments.back().slope;
      if (slope > best_slope || (slope == best_slope && cand.id < best.id)) best = cand;
    }
  };
  for (TrajectoryId id : active_) {
    const auto& seg = trajectory(id).segments.back();
    if (seg.slope > 0.0 && seg.start_height < 1.0) {
      consider({NextEvent::Kind::HitOne, seg.start_time + (1.0 - seg.start_height) / seg.slope, id},
               seg.slope);
    } else if (seg.slope < 0.0 && seg.start_height > 0.0) {
      consider({NextEvent::Kind::HitZero, seg.start_time + seg.start_height / -seg.slope, id},
               seg.slope);
    }
  }
  if (pending_) consider({NextEvent::Kind::Immigration, pending_->time, 0}, 0.0);
  return best;
}

bool PitSystem::step() {
  const NextEvent ev = next_event();
  if (ev.kind == NextEvent::Kind::Stalled) return false;
  const double t = ev.time;
  const double cutoff = t + kTimeEpsilon;
  clock_ = t;

  bool any_extinct = false;
  std::vector<TrajectoryId> hitters;
  for (TrajectoryId id : active_) {
    auto& tr = mutable_trajectory(id);
    const auto& seg = tr.segments.back();
    if (seg.slope < 0.0 && seg.start_height > 0.0 &&
        seg.start_time + seg.start_height / -seg.slope <= cutoff) {
      reanchor(tr, t, 0.0, 0.0);
      tr.status = TrajectoryStatus::Extinct;
      tr.extinction_time = t;
      any_extinct = true;
      EventRecord rec;
      rec.kind = EventKind::Extinction;
      rec.time = t;
      rec.trajectory_id = id;
      rec.resident_id = resident_;
      rec.fitness = fitness_;
      rec.previous_resident = resident_;
      log_.push_back(rec);
    } else if (seg.slope > 0.0 && seg.start_height < 1.0 &&
               seg.start_time + (1.0 - seg.start_height) / seg.slope <= cutoff) {
      hitters.push_back(id);
    }
  }
  if (any_extinct) {
    std::erase_if(active_, [this](TrajectoryId id) {
      return trajectory(id).status == TrajectoryStatus::Extinct;
    });
  }
  if (!hitters.empty()) apply_resident_change(hitters);
  while (pending_ && pending_->time <= cutoff) {
    immigrate(*pending_);
    pull_immigration();
  }
  if (options_.check_invariants) check_invariants();
  return true;
}

void PitSystem::apply_resident_change(std::span<const TrajectoryId> hitters) {
  if (hitters.empty()) throw InvariantError("resident change requested without a hitting trajectory");
  const double t = clock_;

  TrajectoryId winner = hitters.front();
  double vstar = trajectory(winner).segments.back().slope;
  for (TrajectoryId id : hitters) {
    const double v = trajectory(id).segments.back().slope;
    if (v > vstar || (v == vstar && id < winner)) {
      vstar = v;
      winner = id;
    }
  }
  if (!(vstar > 0.0)) throw InvariantError("resident change with nonpositive slope");

  double max_other = -kInf;
  for (TrajectoryId id : active_) {
    auto& tr = mutable_trajectory(id);
    const bool hit = std::find(hitters.begin(), hitters.end(), id) != hitters.end();
    const double h = hit ? 1.0 : height_now(tr);
    if (!(h > 0.0)) continue;
    const double slope = id == winner ? 0.0 : tr.segments.back().slope - vstar;
    reanchor(tr, t, h, slope);
    if (id != winner) max_other = std::max(max_other, slope);
  }

  const TrajectoryId previous = resident_;
  mutable_trajectory(previous).status = TrajectoryStatus::Active;
  mutable_trajectory(winner).status = TrajectoryStatus::Resident;
  resident_ = winner;
  kink_sum_ += vstar;
  fitness_ = trajectory(winner).fitness;

  EventRecord rec;
  rec.kind = EventKind::ResidentChange;
  rec.time = t;
  rec.trajectory_id = winner;
  rec.value = vstar;
  rec.resident_id = winner;
  rec.fitness = fitness_;
  rec.max_other_slope = max_other;
  rec.previous_resident = previous;
  if (rec.solitary()) ++solitary_count_;
  log_.push_back(rec);
}

void PitSystem::immigrate(const ImmigrationEntry& entry) {
  Trajectory tr;
  tr.id = next_id_++;
  tr.birth_time = entry.time;
  tr.parent = resident_;
  tr.initial_slope = entry.slope;
  tr.increment = entry.increment;
  tr.fitness = trajectory(resident_).fitness + entry.increment;
  tr.segments.push_back({entry.time, 0.0, entry.slope});
  tr.status = entry.slope > 0.0 ? TrajectoryStatus::Active : TrajectoryStatus::Latent;
  if (tr.status == TrajectoryStatus::Active) active_.push_back(tr.id);

  EventRecord rec;
  rec.kind = EventKind::Immigration;
  rec.time = entry.time;
  rec.trajectory_id = tr.id;
  rec.value = entry.slope;
  rec.resident_id = resident_;
  rec.fitness = fitness_;
  rec.previous_resident = resident_;
  log_.push_back(rec);
  trajectories_.push_back(std::move(tr));
}

std::span<const EventRecord> PitSystem::advance(double until) {
  if (until < clock_) throw ConfigError("advance target precedes the current clock");
  const std::size_t before = log_.size();
  for (;;) {
    const NextEvent ev = next_event();
    if (ev.kind == NextEvent::Kind::Stalled || ev.time > until) break;
    step();
  }
  clock_ = std::max(clock_, until);
  return std::span<const EventRecord>(log_).subspan(before);
}

void PitSystem::advance_until_solitary(std::size_t count) {
  while (solitary_count_ < count) {
    if (!step()) throw InvariantError("system stalled before reaching the requested renewal count");
  }
}

void PitSystem::check_invariants() const {
  const double expected = f0_ + kink_sum_;
  if (std::abs(fitness_ - expected) > 1e-9 * std::max(1.0, std::abs(fitness_))) {
    throw InvariantError("resident fitness " + std::to_string(fitness_) +
                         " differs from f0 + sum of kinks " + std::to_string(expected));
  }
  std::size_t at_top = 0;
  for (TrajectoryId id : active_) {
    const auto& tr = trajectory(id);
    const auto& seg = tr.segments.back();
    if (height_now(tr) == 1.0 && seg.slope == 0.0) {
      ++at_top;
      if (id != resident_) throw InvariantError("non-resident trajectory at (1,0)");
    }
  }
  if (at_top != 1) throw InvariantError("expected exactly one trajectory at (1,0)");
}

Genealogy PitSystem::genealogy() const {
  std::vector<TrajectoryId> parents;
  for (TrajectoryId id = 1; id <= max_id(); ++id) parents.push_back(*trajectory(id).parent);
  return Genealogy(std::move(parents));
}

std::vector<std::pair<double, double>> resident_fitness_path(const PitSystem& system) {
  std::vector<std::pair<double, double>> steps{{0.0, system.f0()}};
  for (const auto& rec : system.log()) {
    if (rec.kind == EventKind::ResidentChange) steps.emplace_back(rec.time, rec.fitness);
  }
  return steps;
}

double step_value(std::span<const std::pair<double, double>> steps, double t) {
  if (steps.empty()) return 0.0;
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](double x, const auto& s) { return x < s.first; });
  return it == steps.begin() ? steps.front().second : std::prev(it)->second;
}

std::vector<Segment> trajectory_path(const PitSystem& system, TrajectoryId id) {
  return system.trajectory(id).segments;
}

double slope_coupling_violation(const PitSystem& system, Rng& rng, std::size_t pairs_per_trajectory) {
  std::vector<double> times{0.0};
  for (const auto& rec : system.log()) {
    if (rec.time != times.back()) times.push_back(rec.time);
  }
  const auto fitness = resident_fitness_path(system);
  double worst = 0.0;
  for (const auto& tr : system.trajectories()) {
    if (tr.status == TrajectoryStatus::Latent) continue;
    const double end = std::min(tr.extinction_time, system.clock());
    auto lo = std::lower_bound(times.begin(), times.end(), tr.birth_time);
    auto hi = std::lower_bound(times.begin(), times.end(), end);
    const auto n = static_cast<std::uint64_t>(hi - lo);
    if (n < 2) continue;
    for (std::size_t p = 0; p < pairs_per_trajectory; ++p) {
      double t1 = lo[static_cast<std::ptrdiff_t>(rng.below(n))];
      double t2 = lo[static_cast<std::ptrdiff_t>(rng.below(n))];
      if (t1 > t2) std::swap(t1, t2);
      if (t1 == t2 || !(tr.height_at(t2) > 0.0)) continue;
      const double dv = tr.slope_at(t2) - tr.slope_at(t1);
      const double df = step_value(fitness, t1) - step_value(fitness, t2);
      worst = std::max(worst, std::abs(dv - df));
    }
  }
  return worst;
}

double fitness_bound_excess(const PitSystem& system) {
  double cumulative = 0.0;
  double worst = -kInf;
  for (const auto& rec : system.log()) {
    if (rec.kind == EventKind::Immigration) cumulative += rec.value;
    worst = std::max(worst, (rec.fitness - system.f0()) - cumulative);
  }
  return worst;
}

}  // namespace pitsim
