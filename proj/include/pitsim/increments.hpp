#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pitsim/quadrature.hpp"
#include "pitsim/rng.hpp"

namespace pitsim {

/// Integration region for tail integrals: (lower, inf) or [lower, inf).
struct TailRegion {
  double lower = 0.0;
  bool closed = false;

  bool contains(double a) const { return closed ? a >= lower : a > lower; }
};

/// Law of a fitness increment on (0, inf).
///
/// Families: point mass, uniform, exponential (by mean), Pareto with density
/// alpha*scale^alpha / a^(alpha+1) on [scale, inf), and finite mixtures of
/// these. Parameters are validated on construction; instances are immutable.
class IncrementDistribution {
 public:
  enum class Kind { PointMass, Uniform, Exponential, Pareto, Mixture };

  static IncrementDistribution point_mass(double c);
  static IncrementDistribution uniform(double lo, double hi);
  static IncrementDistribution exponential(double mean);
  static IncrementDistribution pareto(double scale, double alpha);
  static IncrementDistribution mixture(std::vector<double> weights,
                                       std::vector<IncrementDistribution> components);

  /// Parses the textual descriptor produced by to_string(), e.g.
  /// "pointmass(1)", "uniform(1,2)", "exponential(2)", "pareto(1,0.5)",
  /// "mixture(0.3*pointmass(1)+0.7*uniform(1,2))".
  static IncrementDistribution parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<IncrementDistribution>& components() const { return components_; }

  double sample(Rng& rng) const;

  bool has_finite_mean() const;
  bool has_finite_second_moment() const;
  /// First moment; +inf when it does not exist.
  double mean() const;
  double support_inf() const;
  /// Supremum of the support; +inf for unbounded families.
  double support_sup() const;
  bool has_bounded_support() const;
  /// Locations of point masses (sorted, unique).
  std::vector<double> atoms() const;

  /// Integral of f against the law restricted to `region`.
  double integrate(const RealFunction& f, TailRegion region = {}, double rel_tol = 1e-10,
                   std::span<const double> breakpoints = {}) const;

  /// Probability of `region`.
  double tail(TailRegion region) const;

  friend bool operator==(const IncrementDistribution&, const IncrementDistribution&) = default;

 private:
  IncrementDistribution(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

  Kind kind_ = Kind::PointMass;
  std::vector<double> params_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<IncrementDistribution> components_;
};

/// Probability a/(1+a) that a mutant of advantage a survives drift.
double survival_prob(double a);

/// Thinning factor ∫ a/(1+a) γ(da): closed form for point mass, uniform and
/// exponential laws (and mixtures of them), quadrature otherwise.
double thinning_factor(const IncrementDistribution& gamma);

/// Same integral, always by quadrature on u = a/(1+a). Independent route for tests.
double thinning_factor_quadrature(const IncrementDistribution& gamma, double rel_tol = 1e-8);

/// Rate and increment law of contending mutations.
///
/// Either the size-biased image of (λ, γ), i.e. rate λ∫a/(1+a)γ(da) and law
/// ∝ a/(1+a) γ(da), or a law given directly.
class ContenderLaw {
 public:
  static ContenderLaw size_biased(double lambda, IncrementDistribution gamma);
  static ContenderLaw direct(double rate, IncrementDistribution gamma_star);

  double rate() const { return rate_; }
  bool is_size_biased() const { return size_biased_; }
  /// γ for size-biased laws, γ* itself for direct ones.
  const IncrementDistribution& base() const { return base_; }
  /// The underlying mutation rate λ (equals rate() for direct laws).
  double mutation_rate() const { return lambda_; }

  /// Draws A*. Size-biased laws use rejection from γ with acceptance a/(1+a).
  double sample(Rng& rng) const;

  /// ∫ f dγ* over `region`.
  double integrate(const RealFunction& f, TailRegion region = {}, double rel_tol = 1e-10) const;
  double tail(TailRegion region, double rel_tol = 1e-10) const;
  double mean() const;
  std::vector<double> atoms() const { return base_.atoms(); }

  std::string describe() const;

 private:
  ContenderLaw(double lambda, double rate, bool size_biased, IncrementDistribution base, double norm)
      : lambda_(lambda), rate_(rate), size_biased_(size_biased), base_(std::move(base)), norm_(norm) {}

  double lambda_;
  double rate_;
  bool size_biased_;
  IncrementDistribution base_;
  double norm_;  // thinning factor for size-biased laws
};

/// λ* and γ* for PIT(λ, γ).
ContenderLaw contender_params(double lambda, const IncrementDistribution& gamma);

/// One mark of the Poisson input Ψ = ((T_i, A_i B_i)).
struct InputEvent {
  std::size_t index = 0;  // i >= 1
  double time = 0.0;
  double increment = 0.0;
  bool contender = false;

  double effective_slope() const { return contender ? increment : 0.0; }
};

/// Unbounded lazily sampled input stream.
///
/// Limit mode: gaps Exponential(λ), A ~ γ, B ~ Bernoulli(A/(1+A)), drawn in
/// that order per event. Contender mode: gaps Exponential(λ*), A ~ γ*, B = 1.
class InputStream {
 public:
  InputStream(double lambda, IncrementDistribution gamma, Rng rng);
  InputStream(ContenderLaw law, Rng rng);

  InputEvent next();

 private:
  double rate_;
  std::optional<IncrementDistribution> gamma_;
  std::optional<ContenderLaw> law_;
  Rng rng_;
  double clock_ = 0.0;
  std::size_t count_ = 0;
};

/// All input events with T_i <= horizon.
std::vector<InputEvent> sample_input_stream(double lambda, const IncrementDistribution& gamma,
                                            double horizon, Rng& rng);

}  // namespace pitsim
