#include "dpdsurv/hazards.hpp"

#include "dpdsurv/error.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace dpdsurv::hazards {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_time(double t, const char* who) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(who) + ": time must be finite and >= 0");
  }
}

// Gamma-type moments  int_0^inf w^m (log w)^L exp(-b w^k) dw, L in {0, 1}.
// With s = (m + 1) / k they equal G(s) / (k b^s) and
// G(s) (digamma(s) - log b) / (k^2 b^s); G and digamma depend on (m, k) only.
struct GammaMoment {
  double s = 0.0;
  double log_gamma = 0.0;
  double digamma = 0.0;

  GammaMoment(double m, double k) : s((m + 1.0) / k) {
    log_gamma = std::lgamma(s);
    digamma = boost::math::digamma(s);
  }
  double m0(double k, double log_b) const { return std::exp(log_gamma - s * log_b) / k; }
  double m1(double k, double log_b) const { return m0(k, log_b) * (digamma - log_b) / k; }
};

}  // namespace

bool BaselineHazard::valid(const Vector& gamma) const {
  if (gamma.size() != dimension()) return false;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (!std::isfinite(gamma(i)) || !(gamma(i) > 0.0)) return false;
  }
  return true;
}

double BaselineHazard::log_hazard(double t, const Vector& gamma) const {
  return std::log(hazard(t, gamma));
}

std::optional<BaselineHazard::MomentEvaluator> BaselineHazard::moment_evaluator(
    const Vector&, double) const {
  return std::nullopt;
}

std::optional<PowerMoments> BaselineHazard::power_moments(const Vector& gamma, double alpha,
                                                          int delta, double risk) const {
  const auto eval = moment_evaluator(gamma, alpha);
  if (!eval) return std::nullopt;
  return (*eval)(delta, risk);
}

// --- exponential -----------------------------------------------------------

double ExponentialBaseline::hazard(double, const Vector& gamma) const { return gamma(0); }

double ExponentialBaseline::log_hazard(double, const Vector& gamma) const {
  return std::log(gamma(0));
}

double ExponentialBaseline::cumulative(double t, const Vector& gamma) const {
  return gamma(0) * t;
}

Vector ExponentialBaseline::log_hazard_gradient(double, const Vector& gamma) const {
  return Vector::Constant(1, 1.0 / gamma(0));
}

Vector ExponentialBaseline::cumulative_gradient(double t, const Vector&) const {
  return Vector::Constant(1, t);
}

double ExponentialBaseline::inverse_cumulative(double u, const Vector& gamma) const {
  return u / gamma(0);
}

Vector ExponentialBaseline::start_from_rate(double rate) const {
  return Vector::Constant(1, rate);
}

std::optional<BaselineHazard::MomentEvaluator> ExponentialBaseline::moment_evaluator(
    const Vector& gamma, double alpha) const {
  const double g = gamma(0);
  return [g, alpha](int delta, double risk) {
    const double c = g * risk;  // conditional hazard rate
    const double a = 1.0 + alpha;
    PowerMoments out;
    out.xi_baseline.resize(1);
    if (delta == 1) {
      const double scale = std::pow(c, alpha);
      out.integral = scale / a;
      out.xi_baseline(0) = scale / g * alpha / (a * a);
      out.xi_linear = scale * alpha / (a * a);
    } else {
      out.integral = 1.0 / (a * c);
      out.xi_baseline(0) = -risk / (a * a * c * c);
      out.xi_linear = -1.0 / (a * a * c);
    }
    return out;
  };
}

// --- Weibull ---------------------------------------------------------------

double WeibullBaseline::hazard(double t, const Vector& gamma) const {
  const double g1 = gamma(0);
  const double g2 = gamma(1);
  if (t == 0.0) {
    if (g2 < 1.0) throw SingularityError("weibull hazard is singular at t = 0 when shape < 1");
    return g2 == 1.0 ? g1 : 0.0;
  }
  return g2 * std::pow(g1, g2) * std::pow(t, g2 - 1.0);
}

double WeibullBaseline::log_hazard(double t, const Vector& gamma) const {
  const double g1 = gamma(0);
  const double g2 = gamma(1);
  if (t == 0.0) return std::log(hazard(t, gamma));
  return std::log(g2) + g2 * std::log(g1) + (g2 - 1.0) * std::log(t);
}

double WeibullBaseline::cumulative(double t, const Vector& gamma) const {
  if (t == 0.0) return 0.0;
  return std::pow(gamma(0) * t, gamma(1));
}

Vector WeibullBaseline::log_hazard_gradient(double t, const Vector& gamma) const {
  if (t == 0.0) throw SingularityError("weibull log-hazard gradient needs log(t); t = 0");
  Vector out(2);
  out(0) = gamma(1) / gamma(0);
  out(1) = 1.0 / gamma(1) + std::log(gamma(0)) + std::log(t);
  return out;
}

Vector WeibullBaseline::cumulative_gradient(double t, const Vector& gamma) const {
  Vector out = Vector::Zero(2);
  if (t == 0.0) return out;
  const double g1 = gamma(0);
  const double g2 = gamma(1);
  const double w = g1 * t;
  const double lambda_cum = std::pow(w, g2);
  out(0) = g2 * lambda_cum / g1;
  out(1) = lambda_cum * std::log(w);
  return out;
}

double WeibullBaseline::inverse_cumulative(double u, const Vector& gamma) const {
  if (u == 0.0) return 0.0;
  return std::pow(u, 1.0 / gamma(1)) / gamma(0);
}

Vector WeibullBaseline::start_from_rate(double rate) const {
  Vector out(2);
  out << rate, 1.0;
  return out;
}

std::optional<BaselineHazard::MomentEvaluator> WeibullBaseline::moment_evaluator(
    const Vector& gamma, double alpha) const {
  // Substituting w = g1 x turns every integral into a gamma-type moment with
  // rate b = (1 + alpha) * risk.
  const double g1 = gamma(0);
  const double k = gamma(1);
  const double a = 1.0 + alpha;
  const double m = (k - 1.0) * a;
  const bool event_finite = m > -1.0;
  const GammaMoment ev = event_finite ? GammaMoment(m, k) : GammaMoment(0.0, k);
  const GammaMoment ev_k = event_finite ? GammaMoment(m + k, k) : GammaMoment(0.0, k);
  const GammaMoment cens(0.0, k);
  const GammaMoment cens_k(k, k);
  return [=](int delta, double risk) {
    const double c = risk;
    const double log_b = std::log(a * c);
    PowerMoments out;
    out.xi_baseline.resize(2);
    if (delta == 1) {
      if (!event_finite) {
        out.integral = kInf;
        out.xi_baseline.setConstant(std::numeric_limits<double>::quiet_NaN());
        out.xi_linear = std::numeric_limits<double>::quiet_NaN();
        return out;
      }
      const double pref = std::exp(a * std::log(c * k * g1)) / g1;
      const double m0 = ev.m0(k, log_b);
      const double m1 = ev.m1(k, log_b);
      const double mk0 = ev_k.m0(k, log_b);
      const double mk1 = ev_k.m1(k, log_b);
      out.integral = pref * m0;
      out.xi_baseline(0) = pref * (k / g1) * (m0 - c * mk0);
      out.xi_baseline(1) = pref * (m0 / k + m1 - c * mk1);
      out.xi_linear = pref * (m0 - c * mk0);
    } else {
      const double m0 = cens.m0(k, log_b);
      const double mk0 = cens_k.m0(k, log_b);
      const double mk1 = cens_k.m1(k, log_b);
      out.integral = m0 / g1;
      out.xi_baseline(0) = -c * (k / g1) * mk0 / g1;
      out.xi_baseline(1) = -c * mk1 / g1;
      out.xi_linear = -c * mk0 / g1;
    }
    return out;
  };
}

// --- validated entry points -------------------------------------------------

void require_valid(const BaselineHazard& b, const Vector& gamma) {
  if (gamma.size() != b.dimension()) {
    throw DomainError(b.name() + ": expected " + std::to_string(b.dimension()) +
                      " baseline parameters, got " + std::to_string(gamma.size()));
  }
  if (!b.valid(gamma)) throw DomainError(b.name() + ": baseline parameters out of domain");
}

double hazard_eval(const BaselineHazard& b, double t, const Vector& gamma) {
  require_valid(b, gamma);
  require_time(t, "hazard_eval");
  return b.hazard(t, gamma);
}

double cumulative_hazard(const BaselineHazard& b, double t, const Vector& gamma) {
  require_valid(b, gamma);
  require_time(t, "cumulative_hazard");
  return b.cumulative(t, gamma);
}

Vector log_hazard_gradient(const BaselineHazard& b, double t, const Vector& gamma) {
  require_valid(b, gamma);
  require_time(t, "log_hazard_gradient");
  return b.log_hazard_gradient(t, gamma);
}

Vector cumulative_hazard_gradient(const BaselineHazard& b, double t, const Vector& gamma) {
  require_valid(b, gamma);
  require_time(t, "cumulative_hazard_gradient");
  return b.cumulative_gradient(t, gamma);
}

double inverse_cumulative_hazard(const BaselineHazard& b, double u, const Vector& gamma) {
  require_valid(b, gamma);
  if (!(u >= 0.0)) throw DomainError("inverse_cumulative_hazard: u must be >= 0");
  return b.inverse_cumulative(u, gamma);
}

// --- registry ----------------------------------------------------------------

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, BaselineFactory, std::less<>> factories{
      {"exponential", [] { return std::make_shared<const ExponentialBaseline>(); }},
      {"weibull", [] { return std::make_shared<const WeibullBaseline>(); }},
  };
};

Registry& registry() {
  static Registry instance;
  return instance;
}

}  // namespace

void register_baseline(const std::string& name, BaselineFactory factory) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[name] = std::move(factory);
}

BaselinePtr make_baseline(std::string_view name) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  const auto it = reg.factories.find(name);
  if (it == reg.factories.end()) {
    throw DomainError("unknown baseline family '" + std::string(name) + "'");
  }
  return it->second();
}

std::vector<std::string> registered_baselines() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& [name, factory] : reg.factories) names.push_back(name);
  return names;
}

}  // namespace dpdsurv::hazards
