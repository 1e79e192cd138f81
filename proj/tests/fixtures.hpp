#pragma once

#include <vector>

#include "pitsim/pit.hpp"

namespace fixtures {

// Six mutations, four of them contenders. The two non-contenders carry an
// arbitrary increment of 0.5; it only enters their own (unused) fitness.
inline std::vector<pitsim::ImmigrationEntry> six_mutation_inputs() {
  const double times[] = {1.2, 1.4, 1.6, 2.5, 2.9, 3.2};
  const double incr[] = {0.2, 0.5, 1.0, 2.0, 0.5, 1.6};
  const bool contender[] = {true, false, true, true, false, true};
  std::vector<pitsim::ImmigrationEntry> out;
  for (int i = 0; i < 6; ++i) out.push_back({times[i], contender[i] ? incr[i] : 0.0, incr[i]});
  return out;
}

inline pitsim::PitSystem six_mutation_system(pitsim::PitOptions opts = {}) {
  return pitsim::PitSystem::replay({{1.0, 0.0}}, six_mutation_inputs(), 0.0, opts);
}

inline std::vector<pitsim::StartEntry> four_trajectory_start() {
  return {{0.1, 1.5}, {0.3, 1.0}, {0.8, 0.8}, {1.0, 0.0}};
}

}  // namespace fixtures
