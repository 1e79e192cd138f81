#include <cmath>

#include "doctest.h"
#include "pitsim/branching.hpp"
#include "pitsim/errors.hpp"
#include "pitsim/increments.hpp"

using namespace pitsim;

TEST_CASE("survival formula") {
  CHECK(gw_survival_formula(2, 1, 1) == 0.5);
  CHECK(gw_survival_formula(2, 0, 3) == 1.0);
  for (double a : {0.1, 1.0, 4.0}) CHECK(gw_survival_formula(1 + a, 1, 1) == doctest::Approx(survival_prob(a)));
  CHECK_THROWS_AS(gw_survival_formula(1, 1, 1), DomainError);
  CHECK_THROWS_AS(gw_survival_formula(1, 2, 1), DomainError);
}

TEST_CASE("simulated survival") {
  const int n = 100000;
  int survived = 0;
  GwOptions opt;
  opt.cap = 200;
  Rng rng(12);
  for (int k = 0; k < n; ++k) survived += gw_run({2, 1, 1}, opt, rng).survived();
  CHECK(std::abs(survived / double(n) - 0.5) <= 0.005);
}

TEST_CASE("pure death") {
  // T_0 is the maximum of five unit exponentials: mean H_5, variance sum 1/k^2.
  const int n = 20000;
  double sum = 0.0;
  bool all_extinct = true;
  Rng rng(2);
  for (int k = 0; k < n; ++k) {
    auto p = gw_run({0, 1, 5}, {}, rng);
    all_extinct = all_extinct && p.outcome == GwPath::Outcome::Extinct && p.max_level == 5;
    sum += p.end_time;
  }
  CHECK(all_extinct);
  const double mean = 1 + 1 / 2.0 + 1 / 3.0 + 1 / 4.0 + 1 / 5.0;
  const double var = 1 + 1 / 4.0 + 1 / 9.0 + 1 / 16.0 + 1 / 25.0;
  CHECK(std::abs(sum / n - mean) <= 3 * std::sqrt(var / n));
}

TEST_CASE("observation and level times") {
  GwOptions opt;
  opt.horizon = 3.0;
  opt.levels = {1, 50};
  opt.observe = {0.0, 1.0, 2.0};
  Rng rng(9);
  auto p = gw_run({1, 0, 1}, opt, rng);
  CHECK(p.outcome == GwPath::Outcome::Horizon);
  CHECK(p.level_hits[0] == 0.0);
  CHECK(p.observed[0] == 1);
  CHECK(p.observed[1] <= p.observed[2]);
  CHECK(p.end_time == 3.0);
  CHECK(gw_summary_csv({1, 0, 1}, {p}).find("horizon") != std::string::npos);
}

TEST_CASE("gambler's ruin") {
  CHECK(gamblers_ruin(1, 10, 1, 1) == doctest::Approx(0.1));
  CHECK(gamblers_ruin(10, 20, 2, 1) == doctest::Approx(std::pow(2.0, -10)));
  CHECK(gamblers_ruin(19, 20, 3, 1) == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(gamblers_ruin(5, 5, 1, 1), ConfigError);
  CHECK_THROWS_AS(gamblers_ruin(0, 5, 1, 1), ConfigError);

  Rng rng(31);
  const int n = 100000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += gw_walk_hits(1, 10, 0, 1, 1, rng);
  const double p = hits / double(n);
  CHECK(p <= 0.1 + 3 * std::sqrt(0.1 * 0.9 / n));

  const int m = 200000;
  int falls = 0;
  for (int k = 0; k < m; ++k) falls += gw_walk_hits(20, 10, 200, 2, 1, rng);
  const double q = std::pow(2.0, -10);
  CHECK(std::abs(falls / double(m) - q) <= 3 * std::sqrt(q * (1 - q) / m));
}
