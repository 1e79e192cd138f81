#include "pitsim/branching.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pitsim/errors.hpp"

namespace pitsim {

double gw_survival_formula(double b, double d, std::int64_t z) {
  if (!(d >= 0.0) || !(b > d)) throw DomainError("survival formula needs b > d >= 0");
  if (z < 1) throw DomainError("initial population must be positive");
  return 1.0 - std::pow(d / b, static_cast<double>(z));
}

GwPath gw_run(const GwParams& p, const GwOptions& opt, Rng& rng) {
  if (p.birth < 0.0 || p.death < 0.0) throw ConfigError("rates must be nonnegative");
  if (p.initial < 1) throw ConfigError("initial population must be positive");
  if (opt.cap < 1) throw ConfigError("cap must be positive");
  constexpr double inf = std::numeric_limits<double>::infinity();

  GwPath path;
  path.level_hits.assign(opt.levels.size(), inf);
  path.observed.assign(opt.observe.size(), -1);
  std::int64_t z = p.initial;
  double t = 0.0;
  std::size_t obs = 0;
  path.max_level = z;
  auto mark_levels = [&]() {
    for (std::size_t k = 0; k < opt.levels.size(); ++k)
      if (z >= opt.levels[k] && path.level_hits[k] == inf) path.level_hits[k] = t;
  };
  mark_levels();

  const double total = p.birth + p.death;
  for (;;) {
    if (z >= opt.cap) {
      path.outcome = GwPath::Outcome::Escaped;
      break;
    }
    const double next = total > 0.0 ? t + rng.exponential(total * static_cast<double>(z)) : inf;
    while (obs < opt.observe.size() && opt.observe[obs] < std::min(next, opt.horizon))
      path.observed[obs++] = z;
    if (next > opt.horizon) {
      t = opt.horizon;
      path.outcome = GwPath::Outcome::Horizon;
      break;
    }
    t = next;
    if (rng.uniform() * total < p.birth) {
      ++z;
      path.max_level = std::max(path.max_level, z);
      mark_levels();
    } else if (--z == 0) {
      path.outcome = GwPath::Outcome::Extinct;
      while (obs < opt.observe.size()) path.observed[obs++] = 0;
      break;
    }
  }
  path.end_time = t;
  path.final_value = z;
  return path;
}

double gamblers_ruin(std::int64_t z, std::int64_t g, double b, double d) {
  if (!(z > 0 && z < g)) throw ConfigError("gambler's ruin needs 0 < z < g");
  if (b < 0.0 || d < 0.0 || b + d <= 0.0) throw ConfigError("rates must be nonnegative, not both 0");
  if (b <= d) return static_cast<double>(z) / static_cast<double>(g);
  return std::pow(d / b, static_cast<double>(g - z));
}

bool gw_walk_hits(std::int64_t start, std::int64_t target, std::int64_t stop, double b, double d,
                  Rng& rng) {
  const double up = b / (b + d);
  std::int64_t x = start;
  while (x != target && x != stop && x != 0) x += rng.uniform() < up ? 1 : -1;
  return x == target;
}

std::string gw_summary_csv(const GwParams& p, const std::vector<GwPath>& paths) {
  std::string out = "b,d,z,replicate,outcome,value\n";
  char buf[200];
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto& path = paths[k];
    const char* outcome = path.outcome == GwPath::Outcome::Extinct   ? "extinct"
                          : path.outcome == GwPath::Outcome::Escaped ? "escaped"
                                                                     : "horizon";
    if (path.outcome == GwPath::Outcome::Extinct) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%lld,%zu,%s,%.17g\n", p.birth, p.death,
                    static_cast<long long>(p.initial), k, outcome, path.end_time);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%lld,%zu,%s,%lld\n", p.birth, p.death,
                    static_cast<long long>(p.initial), k, outcome,
                    static_cast<long long>(path.final_value));
    }
    out += buf;
  }
  return out;
}

}  // namespace pitsim
