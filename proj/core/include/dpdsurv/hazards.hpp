#pragma once

// Parametric baseline hazard families lambda(t, gamma) for the proportional
// hazards model lambda(t, gamma) * exp(beta' z).

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpdsurv::hazards {

using Vector = Eigen::VectorXd;

/// Integrals of the power density f^{1+alpha} of one observation type
/// (delta, risk = exp(beta' z)):
///   integral    = int f^{1+alpha} dx
///   xi_baseline = int u^{(1)}(x) f^{1+alpha} dx                    (length q)
///   xi_linear   = int (delta - Lambda(x) * risk) f^{1+alpha} dx,
/// so that xi^{(2)} = z * xi_linear.
struct PowerMoments {
  double integral = 0.0;
  Vector xi_baseline;
  double xi_linear = 0.0;
};

/// Contract for a baseline family. All parameters are strictly positive;
/// optimizers work on log(gamma). Implementations are immutable.
class BaselineHazard {
 public:
  virtual ~BaselineHazard() = default;

  virtual std::string name() const = 0;
  /// q, the length of gamma.
  virtual int dimension() const = 0;
  virtual bool valid(const Vector& gamma) const;

  virtual double hazard(double t, const Vector& gamma) const = 0;
  virtual double log_hazard(double t, const Vector& gamma) const;
  virtual double cumulative(double t, const Vector& gamma) const = 0;
  /// psi_gamma(t) = d log lambda(t, gamma) / d gamma
  virtual Vector log_hazard_gradient(double t, const Vector& gamma) const = 0;
  /// Psi_gamma(t) = d Lambda(t, gamma) / d gamma
  virtual Vector cumulative_gradient(double t, const Vector& gamma) const = 0;
  virtual double inverse_cumulative(double u, const Vector& gamma) const = 0;

  /// Crude starting value given an overall event rate (events / exposure).
  virtual Vector start_from_rate(double rate) const = 0;

  /// Closed-form power moments when the family has them; std::nullopt makes
  /// callers fall back to quadrature. The returned evaluator maps
  /// (delta, risk) to the moments at fixed (gamma, alpha), so per-parameter
  /// constants are computed once. A divergent integral is reported as +inf.
  using MomentEvaluator = std::function<PowerMoments(int delta, double risk)>;
  virtual std::optional<MomentEvaluator> moment_evaluator(const Vector& gamma,
                                                          double alpha) const;

  std::optional<PowerMoments> power_moments(const Vector& gamma, double alpha, int delta,
                                            double risk) const;
};

using BaselinePtr = std::shared_ptr<const BaselineHazard>;

/// lambda(t) = gamma
class ExponentialBaseline final : public BaselineHazard {
 public:
  std::string name() const override { return "exponential"; }
  int dimension() const override { return 1; }
  double hazard(double t, const Vector& gamma) const override;
  double log_hazard(double t, const Vector& gamma) const override;
  double cumulative(double t, const Vector& gamma) const override;
  Vector log_hazard_gradient(double t, const Vector& gamma) const override;
  Vector cumulative_gradient(double t, const Vector& gamma) const override;
  double inverse_cumulative(double u, const Vector& gamma) const override;
  Vector start_from_rate(double rate) const override;
  std::optional<MomentEvaluator> moment_evaluator(const Vector& gamma,
                                                  double alpha) const override;
};

/// lambda(t) = g2 * g1^g2 * t^(g2 - 1), Lambda(t) = (g1 t)^g2
class WeibullBaseline final : public BaselineHazard {
 public:
  std::string name() const override { return "weibull"; }
  int dimension() const override { return 2; }
  double hazard(double t, const Vector& gamma) const override;
  double log_hazard(double t, const Vector& gamma) const override;
  double cumulative(double t, const Vector& gamma) const override;
  Vector log_hazard_gradient(double t, const Vector& gamma) const override;
  Vector cumulative_gradient(double t, const Vector& gamma) const override;
  double inverse_cumulative(double u, const Vector& gamma) const override;
  Vector start_from_rate(double rate) const override;
  std::optional<MomentEvaluator> moment_evaluator(const Vector& gamma,
                                                  double alpha) const override;
};

// Validated entry points. These check the parameter domain and time
// argument, then dispatch to the family.
double hazard_eval(const BaselineHazard& b, double t, const Vector& gamma);
double cumulative_hazard(const BaselineHazard& b, double t, const Vector& gamma);
Vector log_hazard_gradient(const BaselineHazard& b, double t, const Vector& gamma);
Vector cumulative_hazard_gradient(const BaselineHazard& b, double t, const Vector& gamma);
double inverse_cumulative_hazard(const BaselineHazard& b, double u, const Vector& gamma);

/// Throws DomainError if gamma has the wrong length or leaves the domain.
void require_valid(const BaselineHazard& b, const Vector& gamma);

// Family registry keyed by the CLI identifier.
using BaselineFactory = std::function<BaselinePtr()>;
void register_baseline(const std::string& name, BaselineFactory factory);
BaselinePtr make_baseline(std::string_view name);
std::vector<std::string> registered_baselines();

}  // namespace dpdsurv::hazards
