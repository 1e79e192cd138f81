#include "pitsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr double kTiny = 1e-300;
// Below this the integrand has underflowed and any estimate is accepted.
constexpr double kNegligible = 1e-200;

bool acceptable(double error, double l1, double rel_tol) {
  return std::isfinite(error) && (error <= rel_tol * std::max(l1, kTiny) || l1 < kNegligible);
}

double integrate_piece(const RealFunction& f, double lo, double hi, double rel_tol) {
  if (!(hi > lo)) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double gk = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 15, rel_tol * 0.1, &error, &l1);
  if (std::isfinite(gk) && acceptable(error, l1, rel_tol)) return gk;

  // Endpoint singularities (e.g. heavy tails after substitution) defeat
  // Gauss-Kronrod; tanh-sinh handles them.
  boost::math::quadrature::tanh_sinh<double> ts(15);
  double ts_error = 0.0;
  double ts_l1 = 0.0;
  auto guarded = [&](double x) {
    const double y = f(x);
    return std::isfinite(y) ? y : 0.0;
  };
  const double tsv = ts.integrate(guarded, lo, hi, rel_tol * 0.1, &ts_error, &ts_l1);
  if (std::isfinite(tsv) && acceptable(ts_error, ts_l1, rel_tol)) return tsv;
  throw NumericalError("quadrature did not converge on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]",
                       tsv, ts_error);
}

}  // namespace

double integrate_interval(const RealFunction& f, double lo, double hi, double rel_tol,
                          std::span<const double> breakpoints) {
  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    total += integrate_piece(f, cuts[k], cuts[k + 1], rel_tol);
  }
  return total;
}

double integrate_half_line(const RealFunction& f, double lo, double rel_tol,
                           std::span<const double> breakpoints) {
  // x = lo + u/(1-u) maps [0,1) onto [lo, inf).
  auto g = [&f, lo](double u) {
    const double w = 1.0 - u;
    if (w <= 0.0) return 0.0;
    return f(lo + u / w) / (w * w);
  };
  std::vector<double> ucuts;
  ucuts.reserve(breakpoints.size());
  for (double b : breakpoints) {
    if (b > lo) ucuts.push_back((b - lo) / (1.0 + b - lo));
  }
  return integrate_interval(g, 0.0, 1.0, rel_tol, ucuts);
}

}  // namespace pitsim
