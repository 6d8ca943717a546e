#pragma once

// Special functions, quadrature, small dense linear algebra and the two
// optimizers (simplex search, damped Newton) shared by the statistical
// modules. Everything here is pure and reentrant.

#include <Eigen/Dense>

#include <functional>
#include <limits>

namespace dpdsurv::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureSpec {
  double relative_tolerance = 1e-8;
  double absolute_tolerance = 1e-12;
  int max_subdivisions = 200;
  /// Survival level used by callers to truncate (0, inf) integrals of
  /// lifetime densities.
  double upper_cutoff_survival = 1e-12;

  /// Throws DomainError when a field violates its invariant.
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

/// Globally adaptive 21-point Gauss-Kronrod quadrature of f over [a, b].
/// An infinite upper limit is mapped onto [0, 1) with x = a + t / (1 - t).
/// Throws QuadratureError (carrying the best estimate) when the tolerance
/// max(abs_tol, rel_tol * |I|) is not met within max_subdivisions.
QuadratureResult adaptive_quadrature(const std::function<double(double)>& f,
                                     double a, double b,
                                     const QuadratureSpec& spec = {});

// ---------------------------------------------------------------------------
// Distributions

double normal_cdf(double x);
double normal_quantile(double p);

double chisq_cdf(double x, int df);
/// Upper tail 1 - chisq_cdf, computed without cancellation.
double chisq_sf(double x, int df);
double chisq_quantile(double p, int df);

/// Poisson tail mass below which the mixture series are truncated.
inline constexpr double kSeriesTailMass = 1e-14;

/// P(chi^2_df(ncp) > x) as the Poisson(ncp / 2) mixture of central upper
/// tails P(chi^2_{df + 2v} > x).
double noncentral_chisq_sf(double x, int df, double ncp);

// ---------------------------------------------------------------------------
// Linear algebra

inline constexpr double kMaxCondition = 1e12;

/// 2-norm condition number (ratio of extreme singular values).
double condition_number(const Matrix& a);

/// Solves A X = B. Throws NearSingularError when cond(A) > max_condition.
Matrix solve_spd(const Matrix& a, const Matrix& b, double max_condition = kMaxCondition);

Matrix inverse(const Matrix& a, double max_condition = kMaxCondition);

/// x' A^{-1} x
double inverse_quadratic_form(const Matrix& a, const Vector& x,
                              double max_condition = kMaxCondition);

/// trace(A^{-1} B)
double trace_solve(const Matrix& a, const Matrix& b, double max_condition = kMaxCondition);

Matrix symmetrize(const Matrix& a);

/// Central-difference Jacobian of g at x; column j uses the step
/// relative_step * max(1, |x_j|).
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& g,
                                  const Vector& x, double relative_step = 1e-6);

// ---------------------------------------------------------------------------
// Optimizers

struct SimplexOptions {
  double diameter_tolerance = 1e-8;
  int max_iterations = 5000;
  double initial_step = 0.1;
};

struct MinimizeResult {
  Vector argmin;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Nelder-Mead simplex search. Non-finite objective values are treated as
/// +infinity, so the simplex steers away from invalid regions.
MinimizeResult minimize_scalar_free(const std::function<double(const Vector&)>& f,
                                    const Vector& x0, const SimplexOptions& options = {});

struct NewtonOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  int max_halvings = 30;
  double max_condition = kMaxCondition;
};

struct NewtonResult {
  Vector root;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Newton-Raphson for g(x) = 0 with step halving whenever the full step does
/// not decrease ||g||_inf. Converged means ||g(root)||_inf < tolerance.
NewtonResult newton_raphson(const std::function<Vector(const Vector&)>& g,
                            const std::function<Matrix(const Vector&)>& jacobian,
                            const Vector& x0, const NewtonOptions& options = {});

}  // namespace dpdsurv::numerics
