#include "pitsim/increments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/expint.hpp>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ConfigError(std::string(what) + " must be a positive finite real, got " + fmt_real(x));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  IncrementDistribution parse_all() {
    auto d = parse_dist();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return d;
  }

 private:
  IncrementDistribution parse_dist() {
    skip_ws();
    std::string name;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      name += static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_++])));
    }
    expect('(');
    if (name == "mixture") {
      std::vector<double> weights;
      std::vector<IncrementDistribution> comps;
      do {
        weights.push_back(parse_number());
        expect('*');
        comps.push_back(parse_dist());
        skip_ws();
      } while (consume('+'));
      expect(')');
      return IncrementDistribution::mixture(std::move(weights), std::move(comps));
    }
    std::vector<double> args{parse_number()};
    while (consume(',')) args.push_back(parse_number());
    expect(')');
    auto need = [&](std::size_t n) {
      if (args.size() != n) fail(name + " expects " + std::to_string(n) + " parameter(s)");
    };
    if (name == "pointmass") {
      need(1);
      return IncrementDistribution::point_mass(args[0]);
    }
    if (name == "uniform") {
      need(2);
      return IncrementDistribution::uniform(args[0], args[1]);
    }
    if (name == "exponential") {
      need(1);
      return IncrementDistribution::exponential(args[0]);
    }
    if (name == "pareto") {
      need(2);
      return IncrementDistribution::pareto(args[0], args[1]);
    }
    fail("unknown distribution kind '" + name + "'");
  }

  double parse_number() {
    skip_ws();
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{}) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("bad distribution descriptor '" + std::string(s_) + "': " + msg +
                      " at offset " + std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

IncrementDistribution IncrementDistribution::point_mass(double c) {
  require_positive(c, "point mass location");
  return IncrementDistribution(Kind::PointMass, {c});
}

IncrementDistribution IncrementDistribution::uniform(double lo, double hi) {
  require_positive(lo, "uniform lower bound");
  require_positive(hi, "uniform upper bound");
  if (!(hi > lo)) throw ConfigError("uniform upper bound must exceed lower bound");
  return IncrementDistribution(Kind::Uniform, {lo, hi});
}

IncrementDistribution IncrementDistribution::exponential(double mean) {
  require_positive(mean, "exponential mean");
  return IncrementDistribution(Kind::Exponential, {mean});
}

IncrementDistribution IncrementDistribution::pareto(double scale, double alpha) {
  require_positive(scale, "pareto scale");
  require_positive(alpha, "pareto alpha");
  return IncrementDistribution(Kind::Pareto, {scale, alpha});
}

IncrementDistribution IncrementDistribution::mixture(std::vector<double> weights,
                                                     std::vector<IncrementDistribution> components) {
  if (weights.empty() || weights.size() != components.size()) {
    throw ConfigError("mixture needs one weight per component and at least one component");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("mixture weights must sum to 1 (got " + fmt_real(total) + ")");
  }
  IncrementDistribution d(Kind::Mixture, {});
  d.cumulative_.resize(weights.size());
  std::partial_sum(weights.begin(), weights.end(), d.cumulative_.begin());
  d.weights_ = std::move(weights);
  d.components_ = std::move(components);
  return d;
}

IncrementDistribution IncrementDistribution::parse(std::string_view text) {
  return Parser(text).parse_all();
}

std::string IncrementDistribution::to_string() const {
  switch (kind_) {
    case Kind::PointMass:
      return "pointmass(" + fmt_real(params_[0]) + ")";
    case Kind::Uniform:
      return "uniform(" + fmt_real(params_[0]) + "," + fmt_real(params_[1]) + ")";
    case Kind::Exponential:
      return "exponential(" + fmt_real(params_[0]) + ")";
    case Kind::Pareto:
      return "pareto(" + fmt_real(params_[0]) + "," + fmt_real(params_[1]) + ")";
    case Kind::Mixture: {
      std::string out = "mixture(";
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        if (k) out += "+";
        out += fmt_real(weights_[k]) + "*" + components_[k].to_string();
      }
      return out + ")";
    }
  }
  return {};
}

double IncrementDistribution::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::PointMass:
      return params_[0];
    case Kind::Uniform:
      return params_[0] + (params_[1] - params_[0]) * rng.uniform();
    case Kind::Exponential:
      return -params_[0] * std::log(rng.uniform_open());
    case Kind::Pareto:
      return params_[0] * std::pow(rng.uniform_open(), -1.0 / params_[1]);
    case Kind::Mixture: {
      const double u = rng.uniform() * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                           components_.size() - 1);
      return components_[k].sample(rng);
    }
  }
  return 0.0;
}

bool IncrementDistribution::has_finite_mean() const {
  switch (kind_) {
    case Kind::Pareto:
      return params_[1] > 1.0;
    case Kind::Mixture:
      return std::all_of(components_.begin(), components_.end(),
                         [](const auto& c) { return c.has_finite_mean(); });
    default:
      return true;
  }
}

bool IncrementDistribution::has_finite_second_moment() const {
  switch (kind_) {
    case Kind::Pareto:
      return params_[1] > 2.0;
    case Kind::Mixture:
      return std::all_of(components_.begin(), components_.end(),
                         [](const auto& c) { return c.has_finite_second_moment(); });
    default:
      return true;
  }
}

double IncrementDistribution::mean() const {
  switch (kind_) {
    case Kind::PointMass:
      return params_[0];
    case Kind::Uniform:
      return 0.5 * (params_[0] + params_[1]);
    case Kind::Exponential:
      return params_[0];
    case Kind::Pareto:
      return params_[1] > 1.0 ? params_[1] * params_[0] / (params_[1] - 1.0) : kInf;
    case Kind::Mixture: {
      double m = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) m += weights_[k] * components_[k].mean();
      return m;
    }
  }
  return 0.0;
}

double IncrementDistribution::support_inf() const {
  switch (kind_) {
    case Kind::PointMass:
    case Kind::Uniform:
    case Kind::Pareto:
      return params_[0];
    case Kind::Exponential:
      return 0.0;
    case Kind::Mixture: {
      double lo = kInf;
      for (const auto& c : components_) lo = std::min(lo, c.support_inf());
      return lo;
    }
  }
  return 0.0;
}

double IncrementDistribution::support_sup() const {
  switch (kind_) {
    case Kind::PointMass:
      return params_[0];
    case Kind::Uniform:
      return params_[1];
    case Kind::Exponential:
    case Kind::Pareto:
      return kInf;
    case Kind::Mixture: {
      double hi = 0.0;
      for (const auto& c : components_) hi = std::max(hi, c.support_sup());
      return hi;
    }
  }
  return kInf;
}

bool IncrementDistribution::has_bounded_support() const { return std::isfinite(support_sup()); }

std::vector<double> IncrementDistribution::atoms() const {
  std::vector<double> out;
  if (kind_ == Kind::PointMass) out.push_back(params_[0]);
  for (const auto& c : components_) {
    auto sub = c.atoms();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double IncrementDistribution::integrate(const RealFunction& f, TailRegion region, double rel_tol,
                                        std::span<const double> breakpoints) const {
  switch (kind_) {
    case Kind::PointMass:
      return region.contains(params_[0]) ? f(params_[0]) : 0.0;
    case Kind::Uniform: {
      const double lo = std::max(params_[0], region.lower);
      const double hi = params_[1];
      if (!(hi > lo)) return 0.0;
      const double width = params_[1] - params_[0];
      return integrate_interval([&](double a) { return f(a) / width; }, lo, hi, rel_tol,
                                breakpoints);
    }
    case Kind::Exponential: {
      const double m = params_[0];
      return integrate_half_line([&](double a) { return f(a) * std::exp(-a / m) / m; },
                                 std::max(0.0, region.lower), rel_tol, breakpoints);
    }
    case Kind::Pareto: {
      const double s = params_[0];
      const double alpha = params_[1];
      return integrate_half_line(
          [&](double a) { return f(a) * alpha * std::pow(s / a, alpha) / a; },
          std::max(s, region.lower), rel_tol, breakpoints);
    }
    case Kind::Mixture: {
      double total = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        total += weights_[k] * components_[k].integrate(f, region, rel_tol, breakpoints);
      }
      return total;
    }
  }
  return 0.0;
}

double IncrementDistribution::tail(TailRegion region) const {
  switch (kind_) {
    case Kind::PointMass:
      return region.contains(params_[0]) ? 1.0 : 0.0;
    case Kind::Uniform: {
      const double lo = std::max(params_[0], region.lower);
      return std::max(0.0, params_[1] - lo) / (params_[1] - params_[0]);
    }
    case Kind::Exponential:
      return std::exp(-std::max(0.0, region.lower) / params_[0]);
    case Kind::Pareto:
      return region.lower <= params_[0] ? 1.0 : std::pow(params_[0] / region.lower, params_[1]);
    case Kind::Mixture: {
      double total = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) total += weights_[k] * components_[k].tail(region);
      return total;
    }
  }
  return 0.0;
}

double survival_prob(double a) {
  if (!(a > 0.0)) throw DomainError("survival_prob requires a > 0");
  if (std::isinf(a)) return 1.0;
  return a / (1.0 + a);
}

double thinning_factor(const IncrementDistribution& gamma) {
  const auto& p = gamma.params();
  switch (gamma.kind()) {
    case IncrementDistribution::Kind::PointMass:
      return p[0] / (1.0 + p[0]);
    case IncrementDistribution::Kind::Uniform:
      // ∫ 1 - 1/(1+a) over [lo,hi], divided by the width.
      return 1.0 - std::log((1.0 + p[1]) / (1.0 + p[0])) / (p[1] - p[0]);
    case IncrementDistribution::Kind::Exponential: {
      // 1 - E[1/(1+A)] = 1 - (1/m) e^{1/m} E1(1/m).
      const double x = 1.0 / p[0];
      return 1.0 - x * std::exp(x) * boost::math::expint(1, x);
    }
    case IncrementDistribution::Kind::Pareto:
      return thinning_factor_quadrature(gamma);
    case IncrementDistribution::Kind::Mixture: {
      double total = 0.0;
      for (std::size_t k = 0; k < gamma.weights().size(); ++k) {
        total += gamma.weights()[k] * thinning_factor(gamma.components()[k]);
      }
      return total;
    }
  }
  return 0.0;
}

double thinning_factor_quadrature(const IncrementDistribution& gamma, double rel_tol) {
  return gamma.integrate([](double a) { return a / (1.0 + a); }, {}, rel_tol);
}

ContenderLaw ContenderLaw::size_biased(double lambda, IncrementDistribution gamma) {
  require_positive(lambda, "lambda");
  const double theta = thinning_factor(gamma);
  if (gamma.kind() == IncrementDistribution::Kind::PointMass) {
    // Biasing a point mass leaves it unchanged.
    return ContenderLaw(lambda, lambda * theta, false, std::move(gamma), 1.0);
  }
  return ContenderLaw(lambda, lambda * theta, true, std::move(gamma), theta);
}

ContenderLaw ContenderLaw::direct(double rate, IncrementDistribution gamma_star) {
  require_positive(rate, "contender rate");
  return ContenderLaw(rate, rate, false, std::move(gamma_star), 1.0);
}

double ContenderLaw::sample(Rng& rng) const {
  if (!size_biased_) return base_.sample(rng);
  for (;;) {
    const double a = base_.sample(rng);
    if (rng.uniform() < a / (1.0 + a)) return a;
  }
}

double ContenderLaw::integrate(const RealFunction& f, TailRegion region, double rel_tol) const {
  const auto atoms = base_.atoms();
  if (!size_biased_) return base_.integrate(f, region, rel_tol, atoms);
  return base_.integrate([&](double a) { return f(a) * a / (1.0 + a); }, region, rel_tol, atoms) /
         norm_;
}

double ContenderLaw::tail(TailRegion region, double rel_tol) const {
  if (!size_biased_) return base_.tail(region);
  return integrate([](double) { return 1.0; }, region, rel_tol);
}

double ContenderLaw::mean() const {
  if (!size_biased_) return base_.mean();
  if (!base_.has_finite_mean()) return kInf;
  return integrate([](double a) { return a; });
}

std::string ContenderLaw::describe() const {
  return size_biased_ ? "sizebiased(" + base_.to_string() + ")" : base_.to_string();
}

ContenderLaw contender_params(double lambda, const IncrementDistribution& gamma) {
  return ContenderLaw::size_biased(lambda, gamma);
}

namespace {

InputEvent draw_limit_event(double lambda, const IncrementDistribution& gamma, Rng& rng,
                            double& clock, std::size_t& count) {
  clock += rng.exponential(lambda);
  InputEvent ev;
  ev.index = ++count;
  ev.time = clock;
  ev.increment = gamma.sample(rng);
  ev.contender = rng.bernoulli(survival_prob(ev.increment));
  return ev;
}

}  // namespace

InputStream::InputStream(double lambda, IncrementDistribution gamma, Rng rng)
    : rate_(lambda), gamma_(std::move(gamma)), rng_(std::move(rng)) {
  require_positive(lambda, "lambda");
}

InputStream::InputStream(ContenderLaw law, Rng rng)
    : rate_(law.rate()), law_(std::move(law)), rng_(std::move(rng)) {}

InputEvent InputStream::next() {
  if (gamma_) return draw_limit_event(rate_, *gamma_, rng_, clock_, count_);
  clock_ += rng_.exponential(rate_);
  InputEvent ev;
  ev.index = ++count_;
  ev.time = clock_;
  ev.increment = law_->sample(rng_);
  ev.contender = true;
  return ev;
}

std::vector<InputEvent> sample_input_stream(double lambda, const IncrementDistribution& gamma,
                                            double horizon, Rng& rng) {
  require_positive(lambda, "lambda");
  require_positive(horizon, "horizon");
  std::vector<InputEvent> out;
  double clock = 0.0;
  std::size_t count = 0;
  for (;;) {
    auto ev = draw_limit_event(lambda, gamma, rng, clock, count);
    if (ev.time > horizon) break;
    out.push_back(ev);
  }
  return out;
}

}  // namespace pitsim
