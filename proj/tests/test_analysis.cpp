#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "pitsim/analysis.hpp"
#include "pitsim/errors.hpp"

using namespace pitsim;

namespace {

template <class F>
double simpson(F f, double lo, double hi, int n = 4000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("renewals of the six-mutation replay") {
  auto s = fixtures::six_mutation_system();
  s.advance(5.0);
  auto ren = detect_renewals(s.log());
  REQUIRE(ren.times.size() == 1);
  CHECK(ren.times[0] == doctest::Approx(3.4 + 0.68 / 0.6).epsilon(1e-12));
  REQUIRE(ren.records.size() == 1);
  CHECK(ren.records[0].reward == doctest::Approx(2.6));
  CHECK(detect_renewals(s.log(), 0.0, false).records.empty());
}

TEST_CASE("speed estimator arithmetic") {
  std::vector<RenewalRecord> recs{{1.0, 1.0}, {3.0, 1.0}};
  auto est = speed_estimate(recs);
  CHECK(est.v_hat == 0.5);
  CHECK(est.sigma2_hat == doctest::Approx(0.125));
  CHECK(est.std_error == doctest::Approx(std::sqrt(0.125 / 4.0)));
  CHECK(est.n_cycles == 2);
  CHECK_THROWS_AS(speed_estimate(std::span(recs).first(1)), ConfigError);
  CHECK(point_mass_speed(2, 2) == doctest::Approx(1.6));
}

TEST_CASE("point mass runs: every resident change is solitary") {
  auto sys = PitSystem::poisson(1.0, IncrementDistribution::point_mass(1.0), Rng::stream(1, 0));
  sys.advance(2000.0);
  std::size_t changes = 0;
  for (const auto& r : sys.log()) changes += r.kind == EventKind::ResidentChange;
  CHECK(changes > 100);
  CHECK(sys.solitary_count() == changes);
  auto rep = classify_fixation(sys);
  CHECK(rep.lattice_holds());
  CHECK(rep.ids(&FixationFlags::resident) == rep.ids(&FixationFlags::solitary));
}

TEST_CASE("speed and variance at moderate scale") {
  auto ren = simulate_renewals(
      PitSystem::poisson(1.0, IncrementDistribution::point_mass(1.0), Rng::stream(2, 0),
                         {.record_paths = false, .check_invariants = false}),
      20000);
  auto est = speed_estimate(ren.records);
  CHECK(std::abs(est.v_hat - 1.0 / 3.0) <= 3 * est.std_error);
  CHECK(est.sigma2_hat == doctest::Approx(4.0 / 27.0).epsilon(0.1));
  // prefix against the whole run
  auto head = speed_estimate(std::span(ren.records).first(5000));
  CHECK(std::abs(head.v_hat - est.v_hat) <= 3 * std::hypot(head.std_error, est.std_error));
}

TEST_CASE("renewals are stable under extending the horizon") {
  auto a = PitSystem::poisson(2.0, IncrementDistribution::exponential(1.0), Rng::stream(4, 0));
  auto b = PitSystem::poisson(2.0, IncrementDistribution::exponential(1.0), Rng::stream(4, 0));
  a.advance(300.0);
  b.advance(600.0);
  auto ra = detect_renewals(a.log()), rb = detect_renewals(b.log());
  REQUIRE(rb.times.size() >= ra.times.size());
  CHECK(std::equal(ra.times.begin(), ra.times.end(), rb.times.begin()));
}

TEST_CASE("heuristics for a point mass") {
  CHECK(glh_speed(1.0, IncrementDistribution::point_mass(1)) == doctest::Approx(0.5));
  CHECK(rglh_speed(1.0, IncrementDistribution::point_mass(1)) == doctest::Approx(0.5 * std::exp(-0.5)));
  auto law = contender_params(1.0, IncrementDistribution::point_mass(1));
  CHECK(pi_gl(law, 1.0) == 1.0);
  CHECK(pi_rgl(law, 1.0) == doctest::Approx(std::exp(-0.5)));
  CHECK_THROWS_AS(pi_gl(law, 0.0), DomainError);
}

TEST_CASE("large mutation rate: true speed tends to c^2, GL diverges") {
  for (double c : {0.5, 1.0, 2.0}) {
    CHECK(point_mass_speed(1e8, c) == doctest::Approx(c * c).epsilon(1e-6));
    CHECK(glh_speed(1e8, IncrementDistribution::point_mass(c)) ==
          doctest::Approx(1e8 * c * c / (1 + c)));
    CHECK(glh_speed(1e4, IncrementDistribution::point_mass(c)) < glh_speed(1e8, IncrementDistribution::point_mass(c)));
  }
}

TEST_CASE("heuristic quadrature against an independent nested rule") {
  for (double rate : {0.5, 2.0}) {
    const double m = 1.0 / rate;
    auto law = ContenderLaw::direct(rate, IncrementDistribution::exponential(m));
    auto dens = [m](double a) { return std::exp(-a / m) / m; };
    auto pgl = [&](double a) { return std::exp(-(rate / a) * std::exp(-a / m)); };
    auto past = [&](double a) { return simpson([&](double b) { return dens(b) / b; }, a, a + 40 * m, 2000); };
    const double hi = 40 * m;
    const double lo = 1e-9;
    const double v_gl = rate * simpson([&](double a) { return a * pgl(a) * dens(a); }, lo, hi);
    const double v_rgl = rate * simpson([&](double a) { return a * pgl(a) * std::exp(-rate * past(a)) * dens(a); },
                                        lo, hi, 400);
    CHECK(glh_speed(law) == doctest::Approx(v_gl).epsilon(1e-5));
    CHECK(rglh_speed(law) == doctest::Approx(v_rgl).epsilon(1e-3));
    for (double a : {0.1, 0.5, 1.0, 3.0}) {
      CHECK(pi_gl(law, a) == doctest::Approx(pgl(a)).epsilon(1e-8));
      CHECK(pi_rgl(law, a) <= pi_gl(law, a));
      CHECK(pi_gl(law, a) <= 1.0);
    }
  }
  for (const char* text : {"uniform(1,2)", "exponential(1)", "mixture(0.5*pointmass(1)+0.5*uniform(0.5,3))"}) {
    auto g = IncrementDistribution::parse(text);
    CHECK(rglh_speed(1.0, g) <= glh_speed(1.0, g));
  }
}

TEST_CASE("fixation classes of the six-mutation replay") {
  auto s = fixtures::six_mutation_system();
  s.advance(5.0);
  auto rep = classify_fixation(s);
  REQUIRE(rep.flags.size() == 6);
  CHECK(rep.at(3).ancestral);
  CHECK(rep.at(3).resident);
  CHECK_FALSE(rep.at(3).solitary);
  CHECK(rep.at(4).resident);
  CHECK_FALSE(rep.at(4).ancestral);
  CHECK(rep.at(6).solitary);
  CHECK(rep.at(6).ancestral);
  CHECK(rep.at(1).contender);
  CHECK_FALSE(rep.at(1).resident);
  CHECK_FALSE(rep.at(2).contender);
  CHECK(rep.lattice_holds());

  auto quiet = PitSystem::replay({{1.0, 0.0}}, {ImmigrationEntry::with_slope(1.0, 0.1)});
  quiet.advance(2.0);
  auto q = classify_fixation(quiet);
  CHECK(q.at(1).contender);
  CHECK_FALSE(q.at(1).resident);
  CHECK_FALSE(q.at(1).ancestral);
}

TEST_CASE("refined heuristic misprediction") {
  // Brute-force grid search with the replay as oracle.
  std::vector<ThreeContenders> hits;
  for (double t2 : {1.2, 1.4, 1.6, 1.8})
    for (double t3 = 2.05; t3 < 2.6; t3 += 0.05)
      for (double b : {1.25, 1.5, 2.0})
        for (double c : {0.5, 0.8, 1.0}) {
          ThreeContenders s{1.0, t2, t3, 1.0, b, c};
          if (is_rglh_misprediction(s)) hits.push_back(s);
        }
  CHECK_FALSE(hits.empty());
  const auto fx = rglh_misprediction_fixture();
  CHECK(fx.a < fx.b);
  CHECK(three_contender_final_fitness(fx) == doctest::Approx(fx.a + fx.c));
  const double times[] = {fx.t1, fx.t2, fx.t3};
  const double inc[] = {fx.a, fx.b, fx.c};
  CHECK(rglh_retained(times, inc) == std::vector<bool>{false, true, false});
  CHECK(is_rglh_misprediction(fx));
}

TEST_CASE("trace distances") {
  auto s = fixtures::six_mutation_system();
  s.advance(5.0);
  std::vector<double> grid;
  for (int k = 0; k <= 500; ++k) grid.push_back(k * 0.01);
  auto a = pit_height_trace(s, grid);
  CHECK(sup_distance(a, a) == 0.0);
  auto shorter = pit_height_trace(s, std::span(grid).first(100));
  CHECK_THROWS_AS(sup_distance(a, shorter), ConfigError);

  auto f = resident_fitness_path(s);
  StepFunction fa(f.begin(), f.end());
  CHECK(graph_distance(fa, fa, 5.0) < 1e-9);
  StepFunction fine;
  for (int k = 0; k <= 5000; ++k) {
    const double t = k * 0.001;
    const double v = step_value(f, t);
    if (fine.empty() || fine.back().second != v) fine.emplace_back(t, v);
  }
  // jump times land on the grid up to rounding, so the completed graphs agree
  CHECK(graph_distance(fa, fine, 5.0) <= 1e-3 + 1e-9);

  StepFunction x{{0.0, 0.0}, {1.0, 1.0}}, y{{0.0, 0.0}, {1.05, 1.0}};
  CHECK(graph_distance(x, y, 3.0, 1e-4) <= 0.05 + 1e-9);
}

TEST_CASE("probes") {
  const double hs[] = {10.0, 20.0};
  auto p = infinite_mean_probe(1.0, IncrementDistribution::point_mass(1), hs, 1, 3);
  CHECK(p.warning.has_value());
  CHECK(p.medians.size() == 2);
  auto q = infinite_mean_probe(1.0, IncrementDistribution::pareto(1, 0.5), hs, 3, 3);
  CHECK_FALSE(q.warning.has_value());

  const double lams[] = {10.0};
  CHECK_THROWS_AS(high_mutation_probe(IncrementDistribution::exponential(1), 1.0, lams, 5, 0.25, 1),
                  ConfigError);
  CHECK(high_mutation_limit(2.0, 1.6) == 6.0);
  CHECK(high_mutation_limit(2.0, 1.0) == 2.0);
  auto h = high_mutation_probe(IncrementDistribution::uniform(1, 2), 1.0, lams, 20, 0.25, 1);
  CHECK(h.rows.size() == 1);
  CHECK(h.rows[0].values.size() == 20);
}

TEST_CASE("replicate farm is order independent") {
  auto fn = [](std::size_t i) {
    Rng r = Rng::stream(77, i);
    return r.next_u64();
  };
  CHECK(run_replicates(50, fn, 1) == run_replicates(50, fn, 4));
}

TEST_CASE("fclt plumbing") {
  const double ts[] = {1.0};
  CHECK_THROWS_AS(fclt_diagnostic(1.0, IncrementDistribution::point_mass(1), 10, ts, 100, 1.0 / 3, 4.0 / 27, 1),
                  ConfigError);
  auto rep = fclt_diagnostic(1.0, IncrementDistribution::point_mass(1), 5, ts, 500, 1.0 / 3, 4.0 / 27, 1);
  CHECK(rep.low_n);
  CHECK(rep.variance.size() == 1);
}
