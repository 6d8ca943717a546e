#include "dpdsurv/simulation.hpp"

#include "dpdsurv/error.hpp"
#include "dpdsurv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace dpdsurv::simulation {

namespace {

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u == 0.0) u = unif(rng);
  return u;
}

double expected_censoring(const std::vector<double>& times, double c) {
  double s = 0.0;
  for (const double t : times) s += std::min(t / c, 1.0);
  return s / static_cast<double>(times.size());
}

inference::HypothesisSpec translated(const inference::HypothesisSpec& h, const Vector& shift) {
  inference::HypothesisSpec out = h;
  out.m = [h, shift](const Vector& theta) -> Vector { return h.value(theta - shift); };
  out.M = [h, shift](const Vector& theta) -> numerics::Matrix {
    return h.jacobian(theta - shift);
  };
  out.label = h.label + " (translated)";
  return out;
}

}  // namespace

Rng replication_rng(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    0x5eedu};
  return Rng(seq);
}

ContaminationScheme ContaminationScheme::exponential(double mean) {
  if (!(mean > 0.0)) throw DomainError("contamination mean must be > 0");
  ContaminationScheme s;
  s.kind = Kind::exponential_mean;
  s.mean = mean;
  return s;
}

ContaminationScheme ContaminationScheme::weibull(double gamma1, double gamma2) {
  if (!(gamma1 > 0.0 && gamma2 > 0.0)) throw DomainError("Weibull parameters must be > 0");
  ContaminationScheme s;
  s.kind = Kind::weibull_params;
  s.gamma1 = gamma1;
  s.gamma2 = gamma2;
  return s;
}

double ContaminationScheme::draw(Rng& rng) const {
  const double e = -std::log(open_uniform(rng));
  if (kind == Kind::exponential_mean) return mean * e;
  return std::pow(e, 1.0 / gamma2) / gamma1;
}

void SimConfig::validate() const {
  if (n < 1) throw DomainError("sample size must be >= 1");
  if (!spec.baseline) throw DomainError("simulation needs a baseline family");
  mdpde::require_valid(spec, theta_true);
  if (!(censoring_target >= 0.0 && censoring_target < 1.0)) {
    throw DomainError("censoring target must lie in [0, 1)");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  if (!(epsilon + censoring_target < 1.0)) {
    throw DomainError("epsilon + censoring target must be < 1");
  }
  if (replications < 1) throw DomainError("replications must be >= 1");
  if (!(covariates.sd >= 0.0)) throw DomainError("covariate sd must be >= 0");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
}

double generate_survival(const mdpde::ModelSpec& spec, const mdpde::Theta& theta,
                         const Vector& z, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("generate_survival: u must lie in (0, 1)");
  mdpde::require_valid(spec, theta);
  const double target = -std::log(u) / std::exp(theta.beta.dot(z));
  return hazards::inverse_cumulative_hazard(*spec.baseline, target, theta.gamma);
}

double calibrate_censoring_bound(const std::vector<double>& times, double target) {
  if (times.empty()) throw DomainError("censoring calibration needs at least one time");
  if (!(target > 0.0 && target < 1.0)) throw DomainError("censoring target must lie in (0, 1)");
  const double mean = std::accumulate(times.begin(), times.end(), 0.0) /
                      static_cast<double>(times.size());
  const double tmax = *std::max_element(times.begin(), times.end());
  if (!(mean > 0.0)) throw DataError("censoring calibration failed: all times are zero");
  // Beyond max T the expected fraction is exactly mean / c.
  if (mean / tmax <= target) {
    if (mean / tmax == target) return tmax;
    double lo = 0.0;
    double hi = tmax;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (expected_censoring(times, mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double c = 0.5 * (lo + hi);
    if (std::abs(expected_censoring(times, c) - target) > 0.005) {
      throw DataError("censoring calibration failed to reach the target proportion");
    }
    return c;
  }
  return mean / target;
}

CensoredTimes apply_censoring(const std::vector<double>& times, double target, Rng& rng) {
  if (!(target >= 0.0 && target < 1.0)) throw DomainError("censoring target must lie in [0, 1)");
  CensoredTimes out;
  out.x = times;
  out.delta.assign(times.size(), 1);
  out.c_max = numerics::kInfinity;
  if (target == 0.0) return out;
  out.c_max = calibrate_censoring_bound(times, target);
  std::uniform_real_distribution<double> unif(0.0, out.c_max);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double c = unif(rng);
    if (c < times[i]) {
      out.x[i] = c;
      out.delta[i] = 0;
    }
  }
  return out;
}

data::CensoredDataset contaminate(const data::CensoredDataset& sample, double epsilon,
                                  const ContaminationScheme& scheme, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  const std::size_t n = sample.size();
  const auto k = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n) + 1e-9));
  if (k == 0) return sample;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), k, rng);
  std::vector<data::CensoredObservation> obs = sample.observations();
  for (const std::size_t i : chosen) {
    obs[i].x = scheme.draw(rng);
    if (scheme.force_event) obs[i].delta = 1;
  }
  return data::CensoredDataset(std::move(obs), sample.p(), sample.covariate_names());
}

data::CensoredDataset simulate_dataset(const SimConfig& config, const mdpde::Theta& theta,
                                       Rng& rng) {
  const int p = config.spec.p;
  std::normal_distribution<double> normal(config.covariates.mean, config.covariates.sd);
  std::vector<Vector> zs(config.n, Vector(p));
  std::vector<double> times(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    for (int j = 0; j < p; ++j) zs[i](j) = config.covariates.sd > 0.0 ? normal(rng) : config.covariates.mean;
    times[i] = generate_survival(config.spec, theta, zs[i], open_uniform(rng));
  }
  const auto cens = apply_censoring(times, config.censoring_target, rng);
  std::vector<data::CensoredObservation> obs(config.n);
  for (std::size_t i = 0; i < config.n; ++i) obs[i] = {cens.x[i], cens.delta[i], zs[i]};
  data::CensoredDataset d(std::move(obs), p);
  return contaminate(d, config.epsilon, config.scheme, rng);
}

ExperimentResult level_power_experiment(const SimConfig& config,
                                        const inference::HypothesisSpec& h,
                                        const std::vector<double>& alphas,
                                        const Alternative& alternative) {
  config.validate();
  if (alphas.empty()) throw DomainError("alpha grid is empty");
  const int dim = config.spec.dim();
  const double root_n = std::sqrt(static_cast<double>(config.n));

  mdpde::Theta theta_sim = config.theta_true;
  inference::HypothesisSpec h_test = h;
  if (alternative.kind != Alternative::Kind::null) {
    if (alternative.d.size() != dim) throw DomainError("drift vector must have length p+q");
    const Vector shift = alternative.d / root_n;
    if (alternative.kind == Alternative::Kind::drift) {
      theta_sim = mdpde::Theta::unstack(config.spec, config.theta_true.stacked() + shift);
      mdpde::require_valid(config.spec, theta_sim);
    } else {
      h_test = translated(h, shift);
    }
  }

  const std::size_t reps = static_cast<std::size_t>(config.replications);
  const std::size_t m = alphas.size();
  // -1 failed fit, 0 accept, 1 reject
  std::vector<int> outcome(reps * m, -1);
  std::vector<double> censored(reps, 0.0);
  parallel_for(
      reps,
      [&](std::size_t rep) {
        Rng rng = replication_rng(config.seed, rep);
        const auto d = simulate_dataset(config, theta_sim, rng);
        censored[rep] = d.censored_fraction();
        for (std::size_t a = 0; a < m; ++a) {
          try {
            const auto fit = mdpde::fit_mdpde(config.spec, d, alphas[a]);
            if (!fit.converged) continue;
            outcome[rep * m + a] = inference::wald_test(fit, h_test, config.tau).reject ? 1 : 0;
          } catch (const std::exception&) {
            // counted as a failure
          }
        }
      },
      config.workers);

  ExperimentResult out;
  out.censoring_target = config.censoring_target;
  out.epsilon = config.epsilon;
  out.n = config.n;
  out.replications = config.replications;
  out.realized_censoring =
      std::accumulate(censored.begin(), censored.end(), 0.0) / static_cast<double>(reps);
  for (std::size_t a = 0; a < m; ++a) {
    ExperimentCell cell;
    cell.alpha = alphas[a];
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const int o = outcome[rep * m + a];
      if (o < 0) {
        ++cell.failures;
      } else {
        ++cell.valid;
        cell.rejections += o;
      }
    }
    if (cell.valid > 0) {
      cell.rate = static_cast<double>(cell.rejections) / cell.valid;
      cell.std_error = std::sqrt(cell.rate * (1.0 - cell.rate) / cell.valid);
    }
    out.cells.push_back(cell);
  }
  return out;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  if (rows.empty()) return;
  out << "censoring,epsilon,n,replications";
  for (const auto& c : rows.front().cells) out << ",alpha=" << c.alpha;
  out << ",failures\n";
  const auto old = out.precision(6);
  for (const auto& r : rows) {
    out << r.censoring_target << ',' << r.epsilon << ',' << r.n << ',' << r.replications;
    int failures = 0;
    for (const auto& c : r.cells) {
      out << ',' << c.rate;
      failures += c.failures;
    }
    out << ',' << failures << '\n';
  }
  out.precision(old);
}

}  // namespace dpdsurv::simulation
