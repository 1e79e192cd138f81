#pragma once

#include <functional>
#include <span>

namespace pitsim {

using RealFunction = std::function<double(double)>;

/// Adaptive quadrature of f over [lo, hi] to relative tolerance `rel_tol`.
/// Interior `breakpoints` split the range (use for known discontinuities).
/// Throws NumericalError when the error estimate stays above tolerance.
double integrate_interval(const RealFunction& f, double lo, double hi, double rel_tol,
                          std::span<const double> breakpoints = {});

/// Quadrature of f over [lo, inf) after the substitution u = (x-lo)/(1+x-lo),
/// which maps the half line onto [0, 1). For lo = 0 this is u = x/(1+x).
double integrate_half_line(const RealFunction& f, double lo, double rel_tol,
                           std::span<const double> breakpoints = {});

}  // namespace pitsim
