#pragma once

// Wald-type tests built on the MDPDE, their asymptotic and contiguous power,
// sample-size planning, and influence-function diagnostics.

#include "dpdsurv/mdpde.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpdsurv::inference {

using numerics::Matrix;
using numerics::Vector;

/// Composite null m(theta) = 0_r on the stacked theta = (gamma', beta')'.
struct HypothesisSpec {
  std::function<Vector(const Vector&)> m;
  /// (p+q) x r Jacobian of m'; central differences when left empty.
  std::function<Matrix(const Vector&)> M;
  int r = 0;
  std::string label;

  Vector value(const Vector& theta) const;
  /// Throws DomainError when M(theta) does not have full column rank r.
  Matrix jacobian(const Vector& theta) const;
};

/// m(theta) = A theta - b with analytic M = A'.
HypothesisSpec linear_restriction(const Matrix& A, const Vector& b, std::string label);

// Indices below are 1-based, matching beta_1..beta_p and gamma_1..gamma_q.
HypothesisSpec coefficient_equals(const mdpde::ModelSpec& spec, int j, double b0);
HypothesisSpec coefficients_zero(const mdpde::ModelSpec& spec, const std::vector<int>& indices);
HypothesisSpec baseline_param_equals(const mdpde::ModelSpec& spec, int j, double g0);

struct TestResult {
  double statistic = 0.0;
  int r = 0;
  double p_value = 1.0;
  double critical_value = 0.0;
  bool reject = false;
  double alpha = 0.0;
  double tau = 0.05;
  mdpde::Theta theta_hat;
  std::string label;
};

/// n m(theta)'(M' Sigma M)^{-1} m(theta). Throws DegenerateInformationError
/// when the r x r kernel is near-singular.
double wald_statistic(const Vector& theta, const Matrix& sigma, std::size_t n,
                      const HypothesisSpec& h);

/// Rejects when the statistic strictly exceeds the (1 - tau) chi-square quantile.
TestResult wald_test(const mdpde::FitResult& fit, const HypothesisSpec& h, double tau = 0.05);

/// Standard deviation of the asymptotic normal law of W_n at a fixed
/// alternative: sqrt(g' Sigma g) with g the gradient of
/// l*(theta, theta*) = m(theta)'(M(theta*)' Sigma M(theta*))^{-1} m(theta)
/// at theta = theta*, by central differences.
double wald_sd_at_alternative(const Vector& theta_star, const HypothesisSpec& h,
                              const Matrix& sigma);

/// Normal approximation of the power at a fixed alternative.
double approx_power(const Vector& theta_star, const HypothesisSpec& h, const Matrix& sigma,
                    std::size_t n, double tau = 0.05);

enum class SampleSizeRule {
  /// n* = (A + B + sqrt(A (A + 2B))) / (2 l*), A = sd^2 Phi^{-1}(1 - pi)^2,
  /// B = chi2 l* / 2, as published.
  published,
  /// Smallest n for which approx_power reaches the target.
  exact_inversion,
};

std::size_t required_sample_size(const Vector& theta_star, const HypothesisSpec& h,
                                 const Matrix& sigma, double tau, double target_power,
                                 SampleSizeRule rule = SampleSizeRule::published);

/// Asymptotic power under theta_n = theta0 + d / sqrt(n).
double contiguous_power(const Vector& theta0, const HypothesisSpec& h, const Matrix& sigma0,
                        const Vector& d, double tau = 0.05);
/// Same, parameterized by the restriction drift m(theta_n) = delta / sqrt(n).
double contiguous_power_restriction(const Vector& theta0, const HypothesisSpec& h,
                                    const Matrix& sigma0, const Vector& delta,
                                    double tau = 0.05);

/// sum_v C_v(t, A) P(chi2_{r+2v} > chi2_{r,tau}) with
/// C_v(t, A) = (t'At)^v e^{-t'At/2} / (v! 2^v), summed by weight recursion.
double poisson_mixture_power(const Vector& t, const Matrix& A, int r, double tau);

/// 2 d/ds P(chi2_r(s) > chi2_{r,tau}), evaluated as
/// sum_w Pois(w; s/2) (Q_{w+1} - Q_w) with Q_w = P(chi2_{r+2w} > chi2_{r,tau}).
double c_star(double s, int r, double tau);
/// The same quantity from the expanded series
/// e^{-s/2} sum_v s^{v-1} 2^{-v} (2v - s) Q_v / v!   (s > 0).
double c_star_series(double s, int r, double tau);

struct ContaminationPoint {
  double x = 0.0;
  int delta = 1;
  Vector z;
};

/// Everything the influence formulas need at a null parameter theta0.
struct InfluenceContext {
  mdpde::ModelSpec spec;
  mdpde::Theta theta0;
  double alpha = 0.0;
  Matrix J;      ///< J_alpha(theta0)
  Matrix sigma;  ///< Sigma_alpha(theta0)
  HypothesisSpec h;
  double tau = 0.05;

  /// N = M (M' Sigma M)^{-1} M'
  Matrix kernel() const;
};

/// J and Sigma taken from the empirical sandwich at theta0 on `design`.
InfluenceContext make_influence_context(const mdpde::ModelSpec& spec,
                                        const data::CensoredDataset& design,
                                        const mdpde::Theta& theta0, double alpha,
                                        const HypothesisSpec& h, double tau = 0.05);

/// IF of the MDPDE functional: J^{-1} u(y_t).
Vector mdpde_influence(const InfluenceContext& ctx, const ContaminationPoint& y);
/// Second-order IF of the Wald functional, 2 IF' N IF.
double test_if2(const InfluenceContext& ctx, const ContaminationPoint& y);
/// C*_r(d'Nd) d'N IF(y_t).
double power_influence(const InfluenceContext& ctx, const Vector& d,
                       const ContaminationPoint& y);

/// Power under contiguous alternatives with contamination fraction eps,
/// noncentrality d_eps' N d_eps with d_eps = d + eps * if_vec.
double contaminated_power_series(const InfluenceContext& ctx, const Vector& d, double epsilon,
                                 const Vector& if_vec);

struct InfluenceReport {
  ContaminationPoint point;
  Vector if_estimator;
  double if2_test = 0.0;
  double pif = 0.0;
  double lif = 0.0;  ///< identically zero
};

InfluenceReport influence_report(const InfluenceContext& ctx, const Vector& d,
                                 const ContaminationPoint& y);

/// Reports for every x in `times` and delta in {0, 1} at covariate z.
std::vector<InfluenceReport> influence_sweep(const InfluenceContext& ctx, const Vector& d,
                                             const std::vector<double>& times, const Vector& z);

/// Header: x_t,delta_t,if_1..if_k,if2,pif,lif
void write_influence_csv(std::ostream& out, const std::vector<InfluenceReport>& rows,
                         const std::vector<std::string>& parameter_labels);

/// log-spaced grid of `count` points on [lo, hi], lo > 0.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace dpdsurv::inference
