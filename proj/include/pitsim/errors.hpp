#pragma once

#include <stdexcept>
#include <string>

namespace pitsim {

/// Invalid scenario, start configuration or distribution parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a formula (e.g. survival_prob(0)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature failed to reach the requested tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate, double error_estimate)
      : std::runtime_error(what + " (estimate " + std::to_string(estimate) +
                           ", error estimate " + std::to_string(error_estimate) + ")"),
        estimate_(estimate),
        error_estimate_(error_estimate) {}

  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

/// An engine invariant was violated during a run.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pitsim
