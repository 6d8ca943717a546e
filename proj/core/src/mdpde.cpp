#include "dpdsurv/mdpde.hpp"

#include "dpdsurv/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace dpdsurv::mdpde {

namespace {

using hazards::PowerMoments;

void require_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError("tuning parameter alpha must be finite and >= 0");
  }
}

void require_delta(int delta) {
  if (delta != 0 && delta != 1) throw DomainError("censoring indicator must be 0 or 1");
}

// Power moments by quadrature on [0, T], where S(T | z) equals the
// configured cutoff survival.
PowerMoments quadrature_moments(const ModelSpec& spec, const Theta& theta, double alpha,
                                int delta, double eta) {
  const auto& b = *spec.baseline;
  const auto& qs = spec.integration.quadrature;
  const Vector& gamma = theta.gamma;
  const double risk = std::exp(eta);
  const double a = 1.0 + alpha;
  const double upper = b.inverse_cumulative(-std::log(qs.upper_cutoff_survival) / risk, gamma);

  auto log_f = [&](double x) {
    double lf = -b.cumulative(x, gamma) * risk;
    if (delta == 1) lf += b.log_hazard(x, gamma) + eta;
    return lf;
  };
  auto weight = [&](double x) { return std::exp(a * log_f(x)); };

  PowerMoments out;
  out.integral = numerics::adaptive_quadrature(weight, 0.0, upper, qs).value;
  out.xi_baseline.resize(b.dimension());
  for (int k = 0; k < b.dimension(); ++k) {
    auto integrand = [&](double x) {
      const double w = weight(x);
      if (w == 0.0) return 0.0;
      double u = -b.cumulative_gradient(x, gamma)(k) * risk;
      if (delta == 1) u += b.log_hazard_gradient(x, gamma)(k);
      return u * w;
    };
    out.xi_baseline(k) = numerics::adaptive_quadrature(integrand, 0.0, upper, qs).value;
  }
  auto linear = [&](double x) {
    const double w = weight(x);
    if (w == 0.0) return 0.0;
    return (delta - b.cumulative(x, gamma) * risk) * w;
  };
  out.xi_linear = numerics::adaptive_quadrature(linear, 0.0, upper, qs).value;
  return out;
}

// Evaluates per-observation quantities at a fixed (theta, alpha), reusing the
// family's closed-form moment constants.
class Evaluator {
 public:
  Evaluator(const ModelSpec& spec, const Theta& theta, double alpha)
      : spec_(spec), theta_(theta), alpha_(alpha) {
    if (alpha_ > 0.0 && !spec_.integration.force_quadrature) {
      closed_ = spec_.baseline->moment_evaluator(theta_.gamma, alpha_);
    }
  }

  PowerMoments moments(int delta, double eta) const {
    if (closed_) return (*closed_)(delta, std::exp(eta));
    return quadrature_moments(spec_, theta_, alpha_, delta, eta);
  }

  double log_density(double x, int delta, double eta) const {
    const auto& b = *spec_.baseline;
    double lf = -b.cumulative(x, theta_.gamma) * std::exp(eta);
    if (delta == 1) lf += b.log_hazard(x, theta_.gamma) + eta;
    return lf;
  }

  double objective_term(double x, int delta, const Vector& z) const {
    const double eta = theta_.beta.dot(z);
    const double lf = log_density(x, delta, eta);
    if (alpha_ == 0.0) return -lf;
    const double integral = moments(delta, eta).integral;
    // -((1 + alpha) / alpha) f^alpha + 1 / alpha, without cancellation
    return integral - std::expm1(alpha_ * lf) / alpha_ - std::exp(alpha_ * lf);
  }

  Vector score(double x, int delta, const Vector& z) const {
    const auto& b = *spec_.baseline;
    const int q = b.dimension();
    const double eta = theta_.beta.dot(z);
    const double risk = std::exp(eta);
    const double cum = b.cumulative(x, theta_.gamma);
    Vector u(q + spec_.p);
    u.head(q) = -b.cumulative_gradient(x, theta_.gamma) * risk;
    if (delta == 1) u.head(q) += b.log_hazard_gradient(x, theta_.gamma);
    const double linear = delta - cum * risk;
    if (alpha_ == 0.0) {
      u.tail(spec_.p) = z * linear;
      return u;
    }
    const double w = std::exp(alpha_ * log_density(x, delta, eta));
    const PowerMoments m = moments(delta, eta);
    u.head(q) = w * u.head(q) - m.xi_baseline;
    u.tail(spec_.p) = z * (w * linear - m.xi_linear);
    return u;
  }

 private:
  const ModelSpec& spec_;
  const Theta& theta_;
  double alpha_;
  std::optional<hazards::BaselineHazard::MomentEvaluator> closed_;
};

[[noreturn]] void rethrow_with_row(const QuadratureError& e, std::size_t i) {
  throw QuadratureError("observation " + std::to_string(i + 1) + ": " + e.what(), e.estimate(),
                        e.error_bound());
}

void require_compatible(const ModelSpec& spec, const data::CensoredDataset& data) {
  if (data.p() != spec.p) {
    throw DomainError("model expects " + std::to_string(spec.p) + " covariates, data has " +
                      std::to_string(data.p()));
  }
}

Theta from_log_scale(const Vector& log_gamma, const Vector& beta) {
  return Theta{log_gamma.array().exp().matrix(), beta};
}

}  // namespace

ModelSpec make_model(std::string_view family, int p) {
  if (p < 0) throw DomainError("number of covariates must be >= 0");
  ModelSpec spec;
  spec.baseline = hazards::make_baseline(family);
  spec.p = p;
  return spec;
}

Vector Theta::stacked() const {
  Vector v(gamma.size() + beta.size());
  v << gamma, beta;
  return v;
}

Theta Theta::unstack(const ModelSpec& spec, const Vector& v) {
  if (v.size() != spec.dim()) {
    throw DomainError("parameter vector has length " + std::to_string(v.size()) +
                      ", model needs " + std::to_string(spec.dim()));
  }
  return Theta{v.head(spec.q()), v.tail(spec.p)};
}

void require_valid(const ModelSpec& spec, const Theta& theta) {
  if (theta.beta.size() != spec.p) {
    throw DomainError("beta has length " + std::to_string(theta.beta.size()) +
                      ", model needs " + std::to_string(spec.p));
  }
  if (!theta.beta.allFinite()) throw DomainError("beta has non-finite entries");
  hazards::require_valid(*spec.baseline, theta.gamma);
}

std::vector<std::string> parameter_labels(const ModelSpec& spec,
                                          const std::vector<std::string>& covariate_names) {
  std::vector<std::string> out;
  for (int k = 0; k < spec.q(); ++k) out.push_back("gamma[" + std::to_string(k + 1) + "]");
  for (int j = 0; j < spec.p; ++j) {
    std::string label = "beta[" + std::to_string(j + 1) + "]";
    if (static_cast<std::size_t>(j) < covariate_names.size()) {
      label += " " + covariate_names[j];
    }
    out.push_back(label);
  }
  return out;
}

double conditional_hazard(const ModelSpec& spec, const Theta& theta, double t, const Vector& z) {
  require_valid(spec, theta);
  return hazards::hazard_eval(*spec.baseline, t, theta.gamma) * std::exp(theta.beta.dot(z));
}

double conditional_survival(const ModelSpec& spec, const Theta& theta, double t,
                            const Vector& z) {
  require_valid(spec, theta);
  return std::exp(-hazards::cumulative_hazard(*spec.baseline, t, theta.gamma) *
                  std::exp(theta.beta.dot(z)));
}

double log_conditional_density(const ModelSpec& spec, const Theta& theta, double x, int delta,
                               const Vector& z) {
  require_valid(spec, theta);
  require_delta(delta);
  const double eta = theta.beta.dot(z);
  double lf = -hazards::cumulative_hazard(*spec.baseline, x, theta.gamma) * std::exp(eta);
  if (delta == 1) {
    lf += std::log(hazards::hazard_eval(*spec.baseline, x, theta.gamma)) + eta;
  }
  return lf;
}

double conditional_density(const ModelSpec& spec, const Theta& theta, double x, int delta,
                           const Vector& z) {
  return std::exp(log_conditional_density(spec, theta, x, delta, z));
}

double density_power_integral(const ModelSpec& spec, const Theta& theta, double alpha,
                              int delta, const Vector& z) {
  require_valid(spec, theta);
  require_alpha(alpha);
  require_delta(delta);
  const double eta = theta.beta.dot(z);
  if (!spec.integration.force_quadrature) {
    if (auto m = spec.baseline->power_moments(theta.gamma, alpha, delta, std::exp(eta))) {
      return m->integral;
    }
  }
  return quadrature_moments(spec, theta, alpha, delta, eta).integral;
}

Vector xi_integral(const ModelSpec& spec, const Theta& theta, double alpha, int delta,
                   const Vector& z, int j) {
  require_valid(spec, theta);
  require_alpha(alpha);
  require_delta(delta);
  if (j != 1 && j != 2) throw DomainError("xi_integral: j must be 1 or 2");
  const double eta = theta.beta.dot(z);
  std::optional<PowerMoments> m;
  if (!spec.integration.force_quadrature) {
    m = spec.baseline->power_moments(theta.gamma, alpha, delta, std::exp(eta));
  }
  if (!m) m = quadrature_moments(spec, theta, alpha, delta, eta);
  if (j == 1) return m->xi_baseline;
  return z * m->xi_linear;
}

Vector Scores::stacked() const {
  Vector v(u1.size() + u2.size());
  v << u1, u2;
  return v;
}

Scores score_contributions(const ModelSpec& spec, const Theta& theta, double alpha, double x,
                           int delta, const Vector& z) {
  require_valid(spec, theta);
  require_alpha(alpha);
  require_delta(delta);
  if (z.size() != spec.p) throw DomainError("covariate vector has the wrong length");
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("time must be finite and >= 0");
  const Vector u = Evaluator(spec, theta, alpha).score(x, delta, z);
  return Scores{u.head(spec.q()), u.tail(spec.p)};
}

double dpd_objective(const ModelSpec& spec, const data::CensoredDataset& data,
                     const Theta& theta, double alpha) {
  require_valid(spec, theta);
  require_alpha(alpha);
  require_compatible(spec, data);
  if (data.empty()) throw PreconditionError("dpd_objective: empty dataset");
  const Evaluator ev(spec, theta, alpha);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    try {
      sum += ev.objective_term(o.x, o.delta, o.z);
    } catch (const QuadratureError& e) {
      rethrow_with_row(e, i);
    }
  }
  return sum / static_cast<double>(data.size());
}

Matrix score_matrix(const ModelSpec& spec, const data::CensoredDataset& data,
                    const Theta& theta, double alpha) {
  require_valid(spec, theta);
  require_alpha(alpha);
  require_compatible(spec, data);
  const Evaluator ev(spec, theta, alpha);
  Matrix out(data.size(), spec.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    try {
      out.row(i) = ev.score(o.x, o.delta, o.z).transpose();
    } catch (const QuadratureError& e) {
      rethrow_with_row(e, i);
    }
  }
  return out;
}

Vector mean_score(const ModelSpec& spec, const data::CensoredDataset& data, const Theta& theta,
                  double alpha) {
  if (data.empty()) throw PreconditionError("mean_score: empty dataset");
  return score_matrix(spec, data, theta, alpha).colwise().mean().transpose();
}

Sandwich sandwich_covariance(const ModelSpec& spec, const data::CensoredDataset& data,
                             const Theta& theta, double alpha) {
  require_valid(spec, theta);
  if (data.empty()) throw PreconditionError("sandwich_covariance: empty dataset");
  const Matrix scores = score_matrix(spec, data, theta, alpha);
  const double n = static_cast<double>(data.size());

  auto g = [&](const Vector& v) {
    return mean_score(spec, data, Theta::unstack(spec, v), alpha);
  };
  Sandwich out;
  out.J = numerics::symmetrize(-numerics::finite_difference_jacobian(g, theta.stacked()));
  out.K = scores.transpose() * scores / n;
  try {
    const Matrix jinv_k = numerics::solve_spd(out.J, out.K);
    out.sigma = numerics::symmetrize(numerics::solve_spd(out.J, jinv_k.transpose()));
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(
        std::string("information matrix J is degenerate: ") + e.what(), e.condition());
  }
  return out;
}

Vector FitResult::standard_errors() const {
  if (sigma.size() == 0 || n == 0) return {};
  return (sigma.diagonal().array().max(0.0) / static_cast<double>(n)).sqrt().matrix();
}

FitResult fit_mdpde(const ModelSpec& spec, const data::CensoredDataset& data, double alpha,
                    const std::optional<Theta>& start, const FitOptions& options) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  data::require_fittable(data);
  require_compatible(spec, data);

  Theta theta;
  if (start) {
    theta = *start;
  } else {
    const double rate = static_cast<double>(data.events()) / std::max(data.total_time(), 1e-300);
    theta = Theta{spec.baseline->start_from_rate(rate), Vector::Zero(spec.p)};
    if (alpha > 0.0) {
      // From the crude start the alpha > 0 objective can drift into the region
      // where every density is tiny; the MLE is a much safer start.
      FitOptions mle_options = options;
      mle_options.compute_covariance = false;
      try {
        const FitResult mle = fit_mdpde(spec, data, 0.0, theta, mle_options);
        if (mle.converged) theta = mle.theta_hat;
      } catch (const std::exception&) {
      }
    }
  }
  require_valid(spec, theta);

  const int q = spec.q();
  const int p = spec.p;
  Vector log_gamma = theta.gamma.array().log().matrix();
  Vector beta = theta.beta;

  auto objective = [&](const Vector& lg, const Vector& b) {
    try {
      return dpd_objective(spec, data, from_log_scale(lg, b), alpha);
    } catch (const DomainError&) {
      return numerics::kInfinity;
    }
  };

  FitResult result;
  result.alpha = alpha;
  result.n = data.size();
  result.family = spec.family();

  double previous_h = numerics::kInfinity;
  double simplex_step = 0.1;
  int outer = 0;
  std::string stop_reason = "outer iteration cap reached";
  while (outer < options.max_outer_iterations) {
    ++outer;
    const Vector old_theta = from_log_scale(log_gamma, beta).stacked();

    if (p > 0) {
      auto g = [&](const Vector& b) {
        return Vector(mean_score(spec, data, from_log_scale(log_gamma, b), alpha).tail(p));
      };
      auto jac = [&](const Vector& b) { return numerics::finite_difference_jacobian(g, b); };
      try {
        const Vector root = numerics::newton_raphson(g, jac, beta).root;
        // a root of the score can be a saddle or maximum; backtrack toward it
        // and keep the first point that goes downhill
        if (root.allFinite()) {
          const double h0 = objective(log_gamma, beta);
          const Vector dir = root - beta;
          for (double t = 1.0; t > 1e-3; t *= 0.5) {
            const Vector b = beta + t * dir;
            if (objective(log_gamma, b) <= h0) {
              beta = b;
              break;
            }
          }
        }
      } catch (const NearSingularError&) {
        // leave beta in place; the gamma step may move to a better region
      } catch (const DomainError&) {
      }
    }

    numerics::SimplexOptions so;
    so.initial_step = simplex_step;
    const auto nm = numerics::minimize_scalar_free(
        [&](const Vector& lg) { return objective(lg, beta); }, log_gamma, so);
    const Vector moved = nm.argmin - log_gamma;
    log_gamma = nm.argmin;
    simplex_step = std::clamp(10.0 * moved.lpNorm<Eigen::Infinity>(), 1e-4, 0.1);

    const Vector new_theta = from_log_scale(log_gamma, beta).stacked();
    const double change = (new_theta - old_theta).lpNorm<Eigen::Infinity>();
    if (change < options.outer_tolerance) {
      stop_reason = "parameter change below tolerance";
      break;
    }
    // Both stages have stalled at rounding level.
    if (std::abs(previous_h - nm.value) <= 1e-15 * std::max(1.0, std::abs(nm.value))) {
      stop_reason = "objective stationary";
      break;
    }
    previous_h = nm.value;
  }
  result.iterations = outer;

  auto polish = [&] {
    Vector phi(q + p);
    phi << log_gamma, beta;
    auto g = [&](const Vector& v) {
      return mean_score(spec, data, from_log_scale(v.head(q), v.tail(p)), alpha);
    };
    auto jac = [&](const Vector& v) { return numerics::finite_difference_jacobian(g, v); };
    numerics::NewtonOptions no;
    no.tolerance = 1e-10;
    try {
      const auto nr = numerics::newton_raphson(g, jac, phi, no);
      const Vector lg = nr.root.head(q);
      const Vector b = nr.root.tail(p);
      // accept unless it wandered off to a clearly worse point
      const double before = objective(log_gamma, beta);
      if (nr.root.allFinite() && objective(lg, b) <= before + 1e-9 * std::max(1.0, std::abs(before))) {
        log_gamma = lg;
        beta = b;
        result.iterations += nr.iterations;
      }
    } catch (const NearSingularError& e) {
      throw DegenerateInformationError(
          std::string("estimating equations have a degenerate Jacobian: ") + e.what(),
          e.condition());
    } catch (const DomainError&) {
    }
  };
  auto residual = [&] {
    try {
      return mean_score(spec, data, from_log_scale(log_gamma, beta), alpha)
          .lpNorm<Eigen::Infinity>();
    } catch (const DomainError&) {
      return numerics::kInfinity;
    }
  };
  if (options.polish) {
    polish();
    if (!(residual() < options.residual_tolerance)) {
      // alternating stages stalled; joint simplex search, then polish again
      Vector phi(q + p);
      phi << log_gamma, beta;
      numerics::SimplexOptions so;
      so.diameter_tolerance = 1e-10;
      so.max_iterations = 20000;
      const auto nm = numerics::minimize_scalar_free(
          [&](const Vector& v) { return objective(v.head(q), v.tail(p)); }, phi, so);
      if (nm.value <= objective(log_gamma, beta)) {
        // the objective also falls toward degenerate spikes, so keep the
        // fallback only when it ends at a root of the estimating equations
        const Vector saved_lg = log_gamma;
        const Vector saved_b = beta;
        log_gamma = nm.argmin.head(q);
        beta = nm.argmin.tail(p);
        polish();
        if (residual() < options.residual_tolerance) {
          result.iterations += nm.iterations;
          stop_reason += "; joint simplex fallback";
        } else {
          log_gamma = saved_lg;
          beta = saved_b;
        }
      }
    }
  }

  result.theta_hat = from_log_scale(log_gamma, beta);
  result.objective_value = dpd_objective(spec, data, result.theta_hat, alpha);
  result.residual_norm =
      mean_score(spec, data, result.theta_hat, alpha).lpNorm<Eigen::Infinity>();
  result.converged =
      std::isfinite(result.residual_norm) && result.residual_norm < options.residual_tolerance;
  result.message = stop_reason;
  if (!result.converged) result.message += "; estimating-equation residual above tolerance";

  if (options.compute_covariance) {
    const Sandwich s = sandwich_covariance(spec, data, result.theta_hat, alpha);
    result.J_hat = s.J;
    result.K_hat = s.K;
    result.sigma = s.sigma;
  }
  return result;
}

std::string format_fit_report(const ModelSpec& spec, const FitResult& fit,
                              const std::vector<std::string>& covariate_names) {
  std::ostringstream out;
  out << "baseline   " << fit.family << "\n"
      << "alpha      " << fit.alpha << "\n"
      << "n          " << fit.n << "\n"
      << "objective  " << std::setprecision(10) << fit.objective_value << "\n"
      << "converged  " << (fit.converged ? "yes" : "no") << " (" << fit.message << ")\n"
      << "iterations " << fit.iterations << "\n"
      << "residual   " << std::setprecision(3) << fit.residual_norm << "\n\n";
  const auto labels = parameter_labels(spec, covariate_names);
  const Vector est = fit.theta_hat.stacked();
  const Vector se = fit.standard_errors();
  std::size_t width = 9;
  for (const auto& l : labels) width = std::max(width, l.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "parameter" << std::right
      << std::setw(14) << "estimate" << std::setw(14) << "std.error" << "\n";
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << labels[k] << std::right
        << std::setprecision(6) << std::setw(14) << est(k);
    if (se.size() == est.size()) {
      out << std::setw(14) << se(k);
    } else {
      out << std::setw(14) << "NA";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace dpdsurv::mdpde
