#pragma once

// Minimum density power divergence estimation for the parametric
// proportional hazards model with right censoring. The per-observation
// density is
//   f(x | delta, z) = (lambda(x, gamma) e^{beta'z})^delta exp(-Lambda(x, gamma) e^{beta'z}).
// Parameters are stacked as theta = (gamma', beta')'.

#include "dpdsurv/data_model.hpp"
#include "dpdsurv/hazards.hpp"
#include "dpdsurv/numerics.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpdsurv::mdpde {

using numerics::Matrix;
using numerics::Vector;

struct Integration {
  numerics::QuadratureSpec quadrature;
  /// Ignore family closed forms and integrate numerically.
  bool force_quadrature = false;
};

struct ModelSpec {
  hazards::BaselinePtr baseline;
  int p = 0;
  Integration integration;

  int q() const { return baseline->dimension(); }
  int dim() const { return q() + p; }
  std::string family() const { return baseline->name(); }
};

/// Looks the family up in the hazards registry.
ModelSpec make_model(std::string_view family, int p);

struct Theta {
  Vector gamma;
  Vector beta;

  Vector stacked() const;
  static Theta unstack(const ModelSpec& spec, const Vector& v);
};

/// Throws DomainError unless theta has the model's dimensions, finite
/// entries and gamma inside the family's domain.
void require_valid(const ModelSpec& spec, const Theta& theta);

/// Labels gamma[1..q], beta[1..p] (with covariate names when given).
std::vector<std::string> parameter_labels(const ModelSpec& spec,
                                          const std::vector<std::string>& covariate_names = {});

double conditional_hazard(const ModelSpec& spec, const Theta& theta, double t, const Vector& z);
double conditional_survival(const ModelSpec& spec, const Theta& theta, double t,
                            const Vector& z);
double conditional_density(const ModelSpec& spec, const Theta& theta, double x, int delta,
                           const Vector& z);
double log_conditional_density(const ModelSpec& spec, const Theta& theta, double x, int delta,
                               const Vector& z);

/// int_0^inf f(x | delta, z)^{1+alpha} dx
double density_power_integral(const ModelSpec& spec, const Theta& theta, double alpha,
                              int delta, const Vector& z);

/// xi^{(j)} = int u^{(j)}(x | delta, z) f(x | delta, z)^{1+alpha} dx for
/// j = 1 (length q) or j = 2 (length p), where u^{(1)}, u^{(2)} are the
/// likelihood scores in gamma and beta.
Vector xi_integral(const ModelSpec& spec, const Theta& theta, double alpha, int delta,
                   const Vector& z, int j);

struct Scores {
  Vector u1;  ///< length q
  Vector u2;  ///< length p
  Vector stacked() const;
};

/// Estimating-function contributions f^alpha u - xi (alpha > 0). At
/// alpha = 0 they are the likelihood scores.
Scores score_contributions(const ModelSpec& spec, const Theta& theta, double alpha, double x,
                           int delta, const Vector& z);

/// H_{n,alpha}(theta); the negative mean log-likelihood at alpha = 0.
double dpd_objective(const ModelSpec& spec, const data::CensoredDataset& data,
                     const Theta& theta, double alpha);

/// Row i holds the stacked score contribution of observation i.
Matrix score_matrix(const ModelSpec& spec, const data::CensoredDataset& data,
                    const Theta& theta, double alpha);

/// (1/n) sum_i of the stacked score contributions. The gradient of
/// dpd_objective is -(1 + alpha) times this vector.
Vector mean_score(const ModelSpec& spec, const data::CensoredDataset& data, const Theta& theta,
                  double alpha);

struct Sandwich {
  Matrix J;
  Matrix K;
  Matrix sigma;
};

/// Empirical J (central differences of the mean score, symmetrized), K
/// (mean outer product) and Sigma = J^{-1} K J^{-1}. Throws
/// DegenerateInformationError when J is near-singular.
Sandwich sandwich_covariance(const ModelSpec& spec, const data::CensoredDataset& data,
                             const Theta& theta, double alpha);

struct FitOptions {
  double outer_tolerance = 1e-8;
  int max_outer_iterations = 100;
  /// Sup-norm of the mean score required to report convergence.
  double residual_tolerance = 1e-6;
  /// Finish with Newton steps on all of theta.
  bool polish = true;
  bool compute_covariance = true;
};

struct FitResult {
  Theta theta_hat;
  double alpha = 0.0;
  double objective_value = 0.0;
  Matrix sigma;
  Matrix J_hat;
  Matrix K_hat;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  std::size_t n = 0;
  std::string family;
  std::string message;

  /// sqrt(diag(Sigma) / n)
  Vector standard_errors() const;
};

/// Two-stage fit: Newton on beta at fixed gamma alternating with simplex
/// search over log(gamma) at fixed beta, then an optional Newton polish.
/// Throws PreconditionError for unusable data and DegenerateInformationError
/// when the covariance cannot be formed.
FitResult fit_mdpde(const ModelSpec& spec, const data::CensoredDataset& data, double alpha,
                    const std::optional<Theta>& start = std::nullopt,
                    const FitOptions& options = {});

/// Plain-text summary (estimates, standard errors, diagnostics).
std::string format_fit_report(const ModelSpec& spec, const FitResult& fit,
                              const std::vector<std::string>& covariate_names = {});

}  // namespace dpdsurv::mdpde
