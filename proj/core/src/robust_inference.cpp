#include "dpdsurv/robust_inference.hpp"

#include "dpdsurv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dpdsurv::inference {

namespace {

void require_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("significance level tau must lie in (0, 1)");
}

// (M' Sigma M), checked for degeneracy by the caller's solve.
Matrix wald_kernel(const Matrix& M, const Matrix& sigma) {
  if (sigma.rows() != M.rows() || sigma.cols() != M.rows()) {
    throw DomainError("covariance and restriction Jacobian dimensions differ");
  }
  return numerics::symmetrize(M.transpose() * sigma * M);
}

Vector solve_kernel(const Matrix& kernel, const Vector& v) {
  try {
    return numerics::solve_spd(kernel, v);
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(std::string("Wald kernel M' Sigma M is degenerate: ") +
                                         e.what(),
                                     e.condition());
  }
}

double critical_value(int r, double tau) { return numerics::chisq_quantile(1.0 - tau, r); }

double poisson_log_weight(int v, double mean) {
  return -mean + v * std::log(mean) - std::lgamma(v + 1.0);
}

HypothesisSpec coordinate_restriction(const mdpde::ModelSpec& spec,
                                      const std::vector<int>& coords, const Vector& values,
                                      std::string label) {
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(coords.size()), spec.dim());
  for (std::size_t k = 0; k < coords.size(); ++k) A(static_cast<Eigen::Index>(k), coords[k]) = 1.0;
  return linear_restriction(A, values, std::move(label));
}

}  // namespace

Vector HypothesisSpec::value(const Vector& theta) const {
  const Vector v = m(theta);
  if (v.size() != r) throw DomainError("restriction function returned the wrong length");
  return v;
}

Matrix HypothesisSpec::jacobian(const Vector& theta) const {
  Matrix jac;
  if (M) {
    jac = M(theta);
  } else {
    jac = numerics::finite_difference_jacobian(m, theta).transpose();
  }
  if (jac.rows() != theta.size() || jac.cols() != r) {
    throw DomainError("restriction Jacobian must be (p+q) x r");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(jac);
  qr.setThreshold(1e-10);
  if (qr.rank() != r) {
    throw DomainError("restriction Jacobian M(theta) is rank deficient (rank " +
                      std::to_string(qr.rank()) + " < r = " + std::to_string(r) + ")");
  }
  return jac;
}

HypothesisSpec linear_restriction(const Matrix& A, const Vector& b, std::string label) {
  if (A.rows() != b.size() || A.rows() < 1) {
    throw DomainError("linear restriction needs A with r >= 1 rows matching b");
  }
  HypothesisSpec h;
  h.r = static_cast<int>(A.rows());
  h.label = std::move(label);
  h.m = [A, b](const Vector& theta) -> Vector { return A * theta - b; };
  h.M = [A](const Vector&) -> Matrix { return A.transpose(); };
  return h;
}

HypothesisSpec coefficient_equals(const mdpde::ModelSpec& spec, int j, double b0) {
  if (j < 1 || j > spec.p) throw DomainError("coefficient index out of range");
  return coordinate_restriction(spec, {spec.q() + j - 1}, Vector::Constant(1, b0),
                                "beta[" + std::to_string(j) + "]=" + std::to_string(b0));
}

HypothesisSpec coefficients_zero(const mdpde::ModelSpec& spec, const std::vector<int>& indices) {
  if (indices.empty()) throw DomainError("coefficients_zero needs at least one index");
  std::vector<int> coords;
  std::string label = "beta[";
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int j = indices[k];
    if (j < 1 || j > spec.p) throw DomainError("coefficient index out of range");
    if (std::find(coords.begin(), coords.end(), spec.q() + j - 1) != coords.end()) {
      throw DomainError("coefficient index repeated");
    }
    coords.push_back(spec.q() + j - 1);
    label += (k ? "," : "") + std::to_string(j);
  }
  return coordinate_restriction(spec, coords, Vector::Zero(static_cast<Eigen::Index>(coords.size())),
                                label + "]=0");
}

HypothesisSpec baseline_param_equals(const mdpde::ModelSpec& spec, int j, double g0) {
  if (j < 1 || j > spec.q()) throw DomainError("baseline parameter index out of range");
  return coordinate_restriction(spec, {j - 1}, Vector::Constant(1, g0),
                                "gamma[" + std::to_string(j) + "]=" + std::to_string(g0));
}

double wald_statistic(const Vector& theta, const Matrix& sigma, std::size_t n,
                      const HypothesisSpec& h) {
  const Vector mv = h.value(theta);
  const Matrix M = h.jacobian(theta);
  const Matrix kernel = wald_kernel(M, sigma);
  const double w = static_cast<double>(n) * mv.dot(solve_kernel(kernel, mv));
  return std::max(w, 0.0);
}

TestResult wald_test(const mdpde::FitResult& fit, const HypothesisSpec& h, double tau) {
  require_tau(tau);
  if (!fit.converged) throw PreconditionError("Wald test needs a converged fit");
  if (fit.sigma.size() == 0) throw PreconditionError("fit has no covariance estimate");
  TestResult out;
  out.statistic = wald_statistic(fit.theta_hat.stacked(), fit.sigma, fit.n, h);
  out.r = h.r;
  out.p_value = numerics::chisq_sf(out.statistic, h.r);
  out.critical_value = critical_value(h.r, tau);
  out.reject = out.statistic > out.critical_value;
  out.alpha = fit.alpha;
  out.tau = tau;
  out.theta_hat = fit.theta_hat;
  out.label = h.label;
  return out;
}

double wald_sd_at_alternative(const Vector& theta_star, const HypothesisSpec& h,
                              const Matrix& sigma) {
  const Matrix M = h.jacobian(theta_star);
  const Matrix kernel = wald_kernel(M, sigma);
  auto ell = [&](const Vector& th) {
    const Vector mv = h.value(th);
    return Vector::Constant(1, mv.dot(solve_kernel(kernel, mv)));
  };
  const Vector g = numerics::finite_difference_jacobian(ell, theta_star).row(0).transpose();
  const double var = g.dot(sigma * g);
  return std::sqrt(std::max(var, 0.0));
}

namespace {

double ell_star(const Vector& theta_star, const HypothesisSpec& h, const Matrix& sigma) {
  const Vector mv = h.value(theta_star);
  const Matrix kernel = wald_kernel(h.jacobian(theta_star), sigma);
  return mv.dot(solve_kernel(kernel, mv));
}

}  // namespace

double approx_power(const Vector& theta_star, const HypothesisSpec& h, const Matrix& sigma,
                    std::size_t n, double tau) {
  require_tau(tau);
  if (n == 0) throw DomainError("sample size must be positive");
  const double ell = ell_star(theta_star, h, sigma);
  const double sd = wald_sd_at_alternative(theta_star, h, sigma);
  if (!(sd > 0.0)) {
    throw DegenerateInformationError("sd of W_n at the alternative is zero", numerics::kInfinity);
  }
  const double nn = static_cast<double>(n);
  const double arg = std::sqrt(nn) / sd * (critical_value(h.r, tau) / nn - ell);
  return std::clamp(1.0 - numerics::normal_cdf(arg), 0.0, 1.0);
}

std::size_t required_sample_size(const Vector& theta_star, const HypothesisSpec& h,
                                 const Matrix& sigma, double tau, double target_power,
                                 SampleSizeRule rule) {
  require_tau(tau);
  if (!(target_power > 0.0 && target_power < 1.0)) {
    throw DomainError("target power must lie in (0, 1)");
  }
  const double ell = ell_star(theta_star, h, sigma);
  if (!(ell > 0.0)) {
    throw DomainError("theta* lies on the null set (l* = 0); no sample size achieves the power");
  }
  const double sd = wald_sd_at_alternative(theta_star, h, sigma);
  const double c = critical_value(h.r, tau);
  const double zq = numerics::normal_quantile(1.0 - target_power);
  double n_star = 0.0;
  if (rule == SampleSizeRule::published) {
    const double A = sd * sd * zq * zq;
    const double B = 0.5 * c * ell;
    n_star = (A + B + std::sqrt(A * (A + 2.0 * B))) / (2.0 * ell);
  } else {
    // sqrt(n) solves l s^2 + sd zq s - c = 0
    const double s = (-sd * zq + std::sqrt(sd * sd * zq * zq + 4.0 * ell * c)) / (2.0 * ell);
    n_star = s * s;
  }
  return static_cast<std::size_t>(std::floor(n_star)) + 1;
}

double contiguous_power(const Vector& theta0, const HypothesisSpec& h, const Matrix& sigma0,
                        const Vector& d, double tau) {
  require_tau(tau);
  const Matrix M = h.jacobian(theta0);
  if (d.size() != M.rows()) throw DomainError("drift vector has the wrong length");
  const Vector md = M.transpose() * d;
  const double ncp = md.dot(solve_kernel(wald_kernel(M, sigma0), md));
  return numerics::noncentral_chisq_sf(critical_value(h.r, tau), h.r, std::max(ncp, 0.0));
}

double contiguous_power_restriction(const Vector& theta0, const HypothesisSpec& h,
                                    const Matrix& sigma0, const Vector& delta, double tau) {
  require_tau(tau);
  if (delta.size() != h.r) throw DomainError("restriction drift must have length r");
  const Matrix M = h.jacobian(theta0);
  const double ncp = delta.dot(solve_kernel(wald_kernel(M, sigma0), delta));
  return numerics::noncentral_chisq_sf(critical_value(h.r, tau), h.r, std::max(ncp, 0.0));
}

double poisson_mixture_power(const Vector& t, const Matrix& A, int r, double tau) {
  require_tau(tau);
  const double c = critical_value(r, tau);
  const double half = 0.5 * t.dot(A * t);
  if (half < 0.0) throw DomainError("t'At must be nonnegative");
  // e^{-t'At/2} underflows beyond this; the log-space evaluation takes over.
  if (half > 700.0) return numerics::noncentral_chisq_sf(c, r, 2.0 * half);
  double weight = std::exp(-half);  // C_0
  double mass = weight;
  double sum = weight * numerics::chisq_sf(c, r);
  for (int v = 1; v < 100000; ++v) {
    weight *= half / v;  // C_v = C_{v-1} (t'At / 2) / v
    mass += weight;
    sum += weight * numerics::chisq_sf(c, r + 2 * v);
    if (v > half && 1.0 - mass < numerics::kSeriesTailMass) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double c_star(double s, int r, double tau) {
  require_tau(tau);
  if (!(s >= 0.0)) throw DomainError("c_star: s must be >= 0");
  const double c = critical_value(r, tau);
  if (s == 0.0) return numerics::chisq_sf(c, r + 2) - numerics::chisq_sf(c, r);
  const double mean = 0.5 * s;
  double q_prev = numerics::chisq_sf(c, r);
  double mass = 0.0;
  double sum = 0.0;
  for (int w = 0; w < 100000; ++w) {
    const double weight = std::exp(poisson_log_weight(w, mean));
    const double q_next = numerics::chisq_sf(c, r + 2 * (w + 1));
    mass += weight;
    sum += weight * (q_next - q_prev);
    q_prev = q_next;
    if (w > mean && 1.0 - mass < numerics::kSeriesTailMass) break;
  }
  return sum;
}

double c_star_series(double s, int r, double tau) {
  require_tau(tau);
  if (!(s > 0.0)) throw DomainError("c_star_series: s must be > 0");
  const double c = critical_value(r, tau);
  // v = 0 term: s^{-1} (-s) Q_0
  double sum = -std::exp(-0.5 * s) * numerics::chisq_sf(c, r);
  double mass = std::exp(-0.5 * s);
  for (int v = 1; v < 100000; ++v) {
    const double log_common = -0.5 * s + (v - 1) * std::log(s) - v * std::log(2.0) -
                              std::lgamma(v + 1.0);
    sum += std::exp(log_common) * (2.0 * v - s) * numerics::chisq_sf(c, r + 2 * v);
    mass += std::exp(poisson_log_weight(v, 0.5 * s));
    if (v > 0.5 * s && 1.0 - mass < numerics::kSeriesTailMass) break;
  }
  return sum;
}

Matrix InfluenceContext::kernel() const {
  const Vector th = theta0.stacked();
  const Matrix M = h.jacobian(th);
  const Matrix inner = wald_kernel(M, sigma);
  Matrix solved;
  try {
    solved = numerics::solve_spd(inner, M.transpose());
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(std::string("Wald kernel M' Sigma M is degenerate: ") +
                                         e.what(),
                                     e.condition());
  }
  return numerics::symmetrize(M * solved);
}

InfluenceContext make_influence_context(const mdpde::ModelSpec& spec,
                                        const data::CensoredDataset& design,
                                        const mdpde::Theta& theta0, double alpha,
                                        const HypothesisSpec& h, double tau) {
  require_tau(tau);
  const Vector mv = h.value(theta0.stacked());
  if (mv.lpNorm<Eigen::Infinity>() > 1e-8) {
    throw DomainError("influence diagnostics need theta0 on the null set (m(theta0) = 0)");
  }
  const auto s = mdpde::sandwich_covariance(spec, design, theta0, alpha);
  return InfluenceContext{spec, theta0, alpha, s.J, s.sigma, h, tau};
}

Vector mdpde_influence(const InfluenceContext& ctx, const ContaminationPoint& y) {
  const Vector u =
      mdpde::score_contributions(ctx.spec, ctx.theta0, ctx.alpha, y.x, y.delta, y.z).stacked();
  try {
    return numerics::solve_spd(ctx.J, u);
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(std::string("J is degenerate: ") + e.what(), e.condition());
  }
}

double test_if2(const InfluenceContext& ctx, const ContaminationPoint& y) {
  const Vector f = mdpde_influence(ctx, y);
  return std::max(2.0 * f.dot(ctx.kernel() * f), 0.0);
}

double power_influence(const InfluenceContext& ctx, const Vector& d, const ContaminationPoint& y) {
  const Matrix N = ctx.kernel();
  if (d.size() != N.rows()) throw DomainError("drift vector has the wrong length");
  const Vector f = mdpde_influence(ctx, y);
  return c_star(std::max(d.dot(N * d), 0.0), ctx.h.r, ctx.tau) * d.dot(N * f);
}

double contaminated_power_series(const InfluenceContext& ctx, const Vector& d, double epsilon,
                                 const Vector& if_vec) {
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  const Vector th = ctx.theta0.stacked();
  const Matrix M = ctx.h.jacobian(th);
  if (d.size() != M.rows() || if_vec.size() != M.rows()) {
    throw DomainError("drift and IF vectors must have length p+q");
  }
  const Vector d_eps = d + epsilon * if_vec;
  Matrix A;
  try {
    A = numerics::inverse(wald_kernel(M, ctx.sigma));
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(std::string("Wald kernel is degenerate: ") + e.what(),
                                     e.condition());
  }
  return poisson_mixture_power(M.transpose() * d_eps, A, ctx.h.r, ctx.tau);
}

InfluenceReport influence_report(const InfluenceContext& ctx, const Vector& d,
                                 const ContaminationPoint& y) {
  InfluenceReport out;
  out.point = y;
  out.if_estimator = mdpde_influence(ctx, y);
  const Matrix N = ctx.kernel();
  out.if2_test = std::max(2.0 * out.if_estimator.dot(N * out.if_estimator), 0.0);
  out.pif = c_star(std::max(d.dot(N * d), 0.0), ctx.h.r, ctx.tau) * d.dot(N * out.if_estimator);
  out.lif = 0.0;
  return out;
}

std::vector<InfluenceReport> influence_sweep(const InfluenceContext& ctx, const Vector& d,
                                             const std::vector<double>& times, const Vector& z) {
  std::vector<InfluenceReport> rows;
  rows.reserve(2 * times.size());
  for (const int delta : {0, 1}) {
    for (const double x : times) rows.push_back(influence_report(ctx, d, {x, delta, z}));
  }
  return rows;
}

void write_influence_csv(std::ostream& out, const std::vector<InfluenceReport>& rows,
                         const std::vector<std::string>& parameter_labels) {
  out << "x_t,delta_t";
  for (std::size_t k = 0; k < parameter_labels.size(); ++k) out << ",if_" << k + 1;
  out << ",if2,pif,lif\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    out << r.point.x << ',' << r.point.delta;
    for (Eigen::Index k = 0; k < r.if_estimator.size(); ++k) out << ',' << r.if_estimator(k);
    out << ',' << r.if2_test << ',' << r.pif << ',' << r.lif << '\n';
  }
  out.precision(old);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw DomainError("log_grid needs 0 < lo <= hi");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(lo * std::exp(step * i));
  out.back() = hi;
  return out;
}

}  // namespace dpdsurv::inference
