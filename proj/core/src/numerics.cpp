#include "dpdsurv/numerics.hpp"

#include "dpdsurv/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <vector>

namespace dpdsurv::numerics {

namespace {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// One 21-point Kronrod panel with its embedded 10-point Gauss estimate.
Panel kronrod_panel(const std::function<double(double)>& f, double a, double b) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();

  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  // Gauss order 10 is even: the centre node and the even-indexed nodes are
  // Kronrod-only, the odd-indexed nodes are shared with the Gauss rule.
  double kronrod = f(mid) * wk[0];
  double gauss = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double pair = f(mid + half * x[i]) + f(mid - half * x[i]);
    kronrod += pair * wk[i];
    if (i % 2 == 1) gauss += pair * wg[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  const double err = std::max(std::abs(kronrod - gauss),
                              2.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod));
  return {a, b, kronrod, err};
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0)) {
    throw DomainError("quadrature tolerances must be strictly positive");
  }
  if (max_subdivisions < 1) throw DomainError("max_subdivisions must be at least 1");
  if (!(upper_cutoff_survival > 0.0 && upper_cutoff_survival < 1.0)) {
    throw DomainError("upper_cutoff_survival must lie in (0, 1)");
  }
}

QuadratureResult adaptive_quadrature(const std::function<double(double)>& f, double a,
                                     double b, const QuadratureSpec& spec) {
  spec.validate();
  if (std::isnan(a) || std::isnan(b) || std::isinf(a)) {
    throw DomainError("adaptive_quadrature: lower limit must be finite");
  }
  if (b == a) return {0.0, 0.0, 0};

  std::function<double(double)> g = f;
  double lo = a;
  double hi = b;
  if (std::isinf(b)) {
    if (b < 0) throw DomainError("adaptive_quadrature: upper limit -inf not supported");
    g = [&f, a](double t) {
      const double s = 1.0 - t;
      return f(a + t / s) / (s * s);
    };
    lo = 0.0;
    hi = 1.0;
  }

  std::priority_queue<Panel> panels;
  panels.push(kronrod_panel(g, lo, hi));
  double total = panels.top().value;
  double total_error = panels.top().error;
  int subdivisions = 0;

  while (true) {
    if (!std::isfinite(total)) {
      throw QuadratureError("adaptive_quadrature: non-finite integrand value", total,
                            total_error);
    }
    const double target =
        std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total));
    if (total_error <= target) break;
    if (subdivisions >= spec.max_subdivisions) {
      std::ostringstream msg;
      msg << "adaptive_quadrature: tolerance not met after " << subdivisions
          << " subdivisions (estimate " << total << ", error " << total_error << ")";
      throw QuadratureError(msg.str(), total, total_error);
    }
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = kronrod_panel(g, worst.a, mid);
    const Panel right = kronrod_panel(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++subdivisions;

    // Re-sum occasionally so the running totals do not drift.
    if (subdivisions % 32 == 0) {
      auto copy = panels;
      total = 0.0;
      total_error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_error += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, total_error, subdivisions};
}

double normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

namespace {
void check_chisq_args(double x, int df, const char* who) {
  if (df < 1) throw DomainError(std::string(who) + ": degrees of freedom must be >= 1");
  if (std::isnan(x) || x < 0.0) throw DomainError(std::string(who) + ": x must be >= 0");
}
}  // namespace

double chisq_cdf(double x, int df) {
  check_chisq_args(x, df, "chisq_cdf");
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double x, int df) {
  check_chisq_args(x, df, "chisq_sf");
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double p, int df) {
  if (df < 1) throw DomainError("chisq_quantile: degrees of freedom must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chisq_quantile: p must lie in (0, 1)");
  return 2.0 * boost::math::gamma_p_inv(0.5 * df, p);
}

double noncentral_chisq_sf(double x, int df, double ncp) {
  check_chisq_args(x, df, "noncentral_chisq_sf");
  if (std::isnan(ncp) || ncp < 0.0) throw DomainError("noncentral_chisq_sf: ncp must be >= 0");
  if (x == 0.0) return 1.0;
  if (ncp == 0.0) return chisq_sf(x, df);

  const double mean = 0.5 * ncp;
  double sum = 0.0;
  double mass = 0.0;
  for (int v = 0;; ++v) {
    const double weight = std::exp(-mean + v * std::log(mean) - std::lgamma(v + 1.0));
    mass += weight;
    sum += weight * chisq_sf(x, df + 2 * v);
    if (v > mean && 1.0 - mass < kSeriesTailMass) break;
    if (v > 100000) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double condition_number(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DomainError("condition_number: matrix must be square and non-empty");
  }
  const Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return kInfinity;
  return s(0) / smin;
}

Matrix solve_spd(const Matrix& a, const Matrix& b, double max_condition) {
  if (a.rows() != a.cols()) throw DomainError("solve_spd: A must be square");
  if (a.rows() != b.rows()) throw DomainError("solve_spd: dimension mismatch");
  if (!a.allFinite() || !b.allFinite()) throw DomainError("solve_spd: non-finite entries");
  const double cond = condition_number(a);
  if (!(cond <= max_condition)) {
    std::ostringstream msg;
    msg << "solve_spd: matrix is near-singular (condition estimate " << cond << ")";
    throw NearSingularError(msg.str(), cond);
  }
  return a.fullPivLu().solve(b);
}

Matrix inverse(const Matrix& a, double max_condition) {
  return solve_spd(a, Matrix::Identity(a.rows(), a.cols()), max_condition);
}

double inverse_quadratic_form(const Matrix& a, const Vector& x, double max_condition) {
  const Vector y = solve_spd(a, x, max_condition);
  return x.dot(y);
}

double trace_solve(const Matrix& a, const Matrix& b, double max_condition) {
  return solve_spd(a, b, max_condition).trace();
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& g,
                                  const Vector& x, double relative_step) {
  const Vector g0 = g(x);
  Matrix jac(g0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = relative_step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    const Vector up = g(xp);
    xp(j) = x(j) - h;
    const Vector down = g(xp);
    xp(j) = x(j);
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

MinimizeResult minimize_scalar_free(const std::function<double(const Vector&)>& f,
                                    const Vector& x0, const SimplexOptions& options) {
  const Eigen::Index dim = x0.size();
  if (dim == 0) return {x0, f(x0), true, 0};

  auto eval = [&f](const Vector& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInfinity;
  };

  std::vector<Vector> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  values[0] = eval(x0);
  if (!std::isfinite(values[0])) {
    throw DomainError("minimize_scalar_free: objective is not finite at the start point");
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double step =
        x0(j) != 0.0 ? options.initial_step * std::max(1.0, std::abs(x0(j))) : options.initial_step;
    simplex[j + 1](j) += step;
    values[j + 1] = eval(simplex[j + 1]);
  }

  std::vector<std::size_t> order(dim + 1);
  MinimizeResult result;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      diameter = std::max(diameter, (simplex[i] - simplex[best]).lpNorm<Eigen::Infinity>());
    }
    result.iterations = iter;
    if (diameter < options.diameter_tolerance) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(dim);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(dim);

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  result.argmin = simplex[static_cast<std::size_t>(best_it - values.begin())];
  result.value = *best_it;
  return result;
}

NewtonResult newton_raphson(const std::function<Vector(const Vector&)>& g,
                            const std::function<Matrix(const Vector&)>& jacobian,
                            const Vector& x0, const NewtonOptions& options) {
  NewtonResult result;
  result.root = x0;
  Vector residual = g(x0);
  if (!residual.allFinite()) throw DomainError("newton_raphson: residual not finite at start");
  double norm = residual.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    if (norm < options.tolerance) {
      result.converged = true;
      break;
    }
    const Matrix jac = jacobian(result.root);
    const Vector step = solve_spd(jac, -residual, options.max_condition);

    double scale = 1.0;
    Vector candidate = result.root + step;
    Vector cand_residual = g(candidate);
    double cand_norm = cand_residual.allFinite() ? cand_residual.lpNorm<Eigen::Infinity>() : kInfinity;
    for (int halving = 0; halving < options.max_halvings && !(cand_norm < norm); ++halving) {
      scale *= 0.5;
      candidate = result.root + scale * step;
      cand_residual = g(candidate);
      cand_norm = cand_residual.allFinite() ? cand_residual.lpNorm<Eigen::Infinity>() : kInfinity;
    }
    // No decrease after every halving: the residual is at its noise floor.
    if (!(cand_norm < norm)) break;
    result.root = candidate;
    residual = cand_residual;
    norm = cand_norm;
    result.iterations = iter + 1;
  }
  if (norm < options.tolerance) result.converged = true;
  result.residual_norm = norm;
  return result;
}

}  // namespace dpdsurv::numerics
