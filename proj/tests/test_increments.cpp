#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pitsim/errors.hpp"
#include "pitsim/increments.hpp"

using namespace pitsim;

namespace {

// Composite Simpson rule, used as an independent oracle for smooth integrands.
template <class F>
double simpson(F f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("survival probability") {
  CHECK(survival_prob(1.0) == 0.5);
  CHECK(survival_prob(3.0) == 0.75);
  CHECK(survival_prob(1e-12) < 1e-11);
  CHECK_THROWS_AS(survival_prob(0.0), DomainError);
  CHECK_THROWS_AS(survival_prob(-1.0), DomainError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(IncrementDistribution::point_mass(0.0), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::uniform(2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::uniform(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::exponential(-1.0), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::pareto(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::mixture({0.5, 0.4}, {IncrementDistribution::point_mass(1),
                                                             IncrementDistribution::point_mass(2)}),
                  ConfigError);
  CHECK_NOTHROW(IncrementDistribution::mixture(
      {0.3, 0.7}, {IncrementDistribution::point_mass(1), IncrementDistribution::uniform(1, 2)}));
}

TEST_CASE("moments and support") {
  CHECK_FALSE(IncrementDistribution::pareto(1.0, 0.5).has_finite_mean());
  CHECK_FALSE(IncrementDistribution::pareto(1.0, 1.0).has_finite_mean());
  CHECK(IncrementDistribution::pareto(1.0, 1.5).has_finite_mean());
  CHECK_FALSE(IncrementDistribution::pareto(1.0, 1.5).has_finite_second_moment());
  CHECK(IncrementDistribution::pareto(2.0, 3.0).mean() == doctest::Approx(3.0));
  CHECK(std::isinf(IncrementDistribution::pareto(1.0, 0.5).mean()));
  CHECK(IncrementDistribution::uniform(1, 2).support_sup() == 2.0);
  CHECK_FALSE(IncrementDistribution::exponential(1).has_bounded_support());
  CHECK(IncrementDistribution::exponential(2).mean() == 2.0);
}

TEST_CASE("descriptor round trip") {
  for (const char* text : {"pointmass(1)", "uniform(1,2)", "exponential(2)", "pareto(1,0.5)",
                           "mixture(0.3*pointmass(1)+0.7*uniform(1,2))"}) {
    auto d = IncrementDistribution::parse(text);
    CHECK(IncrementDistribution::parse(d.to_string()) == d);
  }
  CHECK_THROWS_AS(IncrementDistribution::parse("gamma(1)"), ConfigError);
  CHECK_THROWS_AS(IncrementDistribution::parse("uniform(1"), ConfigError);
}

TEST_CASE("sampling") {
  Rng rng(1);
  CHECK(IncrementDistribution::point_mass(1.0).sample(rng) == 1.0);
  auto u = IncrementDistribution::uniform(1, 2);
  bool inside = true;
  for (int k = 0; k < 10000; ++k) {
    const double x = u.sample(rng);
    inside = inside && x >= 1.0 && x <= 2.0;
  }
  CHECK(inside);

  auto e = IncrementDistribution::exponential(2.0);
  double sum = 0.0;
  const int n = 1000000;
  for (int k = 0; k < n; ++k) sum += e.sample(rng);
  CHECK(std::abs(sum / n - 2.0) <= 0.01);

  Rng a(5), b(5);
  CHECK(u.sample(a) == u.sample(b));
}

TEST_CASE("thinning closed forms against independent quadrature") {
  CHECK(thinning_factor(IncrementDistribution::point_mass(1)) == 0.5);
  const double uni = simpson([](double a) { return a / (1 + a); }, 1.0, 2.0);
  CHECK(uni == doctest::Approx(1 - std::log(1.5)).epsilon(1e-10));
  CHECK(thinning_factor(IncrementDistribution::uniform(1, 2)) == doctest::Approx(uni).epsilon(1e-10));
  // Exponential(1): integrate on [0, 60] with the density
  const double ex = simpson([](double a) { return a / (1 + a) * std::exp(-a); }, 0.0, 60.0, 200000);
  CHECK(thinning_factor(IncrementDistribution::exponential(1)) == doctest::Approx(ex).epsilon(1e-9));
  for (const char* text : {"exponential(0.3)", "exponential(5)", "uniform(0.1,7)", "pareto(1,0.5)",
                           "mixture(0.3*pointmass(1)+0.7*exponential(2))"}) {
    auto d = IncrementDistribution::parse(text);
    CHECK(thinning_factor(d) == doctest::Approx(thinning_factor_quadrature(d)).epsilon(1e-8));
  }
}

TEST_CASE("contender parameters") {
  auto c = contender_params(2.0, IncrementDistribution::point_mass(1));
  CHECK(c.rate() == doctest::Approx(1.0));
  CHECK(c.mean() == doctest::Approx(1.0));
  for (double cc : {0.5, 1.0, 3.0}) {
    CHECK(contender_params(1.0, IncrementDistribution::point_mass(cc)).rate() ==
          doctest::Approx(cc / (1 + cc)));
  }
  CHECK(contender_params(1.0, IncrementDistribution::uniform(1, 2)).rate() ==
        doctest::Approx(0.5945348918918356).epsilon(1e-12));
}

TEST_CASE("biased sampling matches the size-biased mean") {
  auto law = contender_params(1.0, IncrementDistribution::uniform(1, 2));
  const double z = simpson([](double a) { return a / (1 + a); }, 1.0, 2.0);
  const double m1 = simpson([](double a) { return a * a / (1 + a); }, 1.0, 2.0) / z;
  const double m2 = simpson([](double a) { return a * a * a / (1 + a); }, 1.0, 2.0) / z;
  CHECK(law.mean() == doctest::Approx(m1).epsilon(1e-9));
  Rng rng(11);
  const int n = 200000;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += law.sample(rng);
  const double se = std::sqrt((m2 - m1 * m1) / n);
  CHECK(std::abs(s / n - m1) <= 3 * se);

  auto pm = contender_params(1.0, IncrementDistribution::point_mass(2));
  CHECK(pm.sample(rng) == 2.0);
}

TEST_CASE("input stream statistics") {
  Rng rng(21);
  CHECK(sample_input_stream(1.0, IncrementDistribution::point_mass(1), 1e-9, rng).empty());

  const int streams = 1000;
  double total = 0.0;
  for (int k = 0; k < streams; ++k) {
    Rng r = Rng::stream(21, static_cast<std::uint64_t>(k));
    auto evs = sample_input_stream(1.0, IncrementDistribution::point_mass(1), 1000.0, r);
    total += static_cast<double>(evs.size());
  }
  CHECK(std::abs(total / streams - 1000.0) <= 3 * std::sqrt(1000.0 / streams));

  auto evs = sample_input_stream(1.0, IncrementDistribution::point_mass(1), 1e5, rng);
  std::size_t contenders = 0;
  bool increasing = true;
  for (std::size_t k = 0; k < evs.size(); ++k) {
    contenders += evs[k].contender;
    if (k > 0) increasing = increasing && evs[k].time > evs[k - 1].time;
    CHECK(evs[k].increment > 0.0);
  }
  CHECK(increasing);
  const double frac = static_cast<double>(contenders) / static_cast<double>(evs.size());
  CHECK(std::abs(frac - 0.5) <= 0.005);
}

TEST_CASE("contender arrival rate") {
  Rng rng(33);
  const double horizon = 1e5;
  auto evs = sample_input_stream(1.0, IncrementDistribution::exponential(1), horizon, rng);
  const auto n = std::count_if(evs.begin(), evs.end(), [](const InputEvent& e) { return e.contender; });
  const double rate = contender_params(1.0, IncrementDistribution::exponential(1)).rate();
  CHECK(std::abs(static_cast<double>(n) / horizon - rate) <= 3 * std::sqrt(rate / horizon));
}
