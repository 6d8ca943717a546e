#pragma once

// Data generation under the parametric proportional hazards model, uniform
// random censoring, outlier contamination, and level/power Monte Carlo runs.

#include "dpdsurv/mdpde.hpp"
#include "dpdsurv/robust_inference.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace dpdsurv::simulation {

using numerics::Vector;
using Rng = std::mt19937_64;

/// Independent stream for replication `rep` of an experiment seeded by `seed`.
Rng replication_rng(std::uint64_t seed, std::uint64_t rep);

/// Covariates drawn iid N(mean, sd^2) in every coordinate.
struct CovariateDesign {
  double mean = 0.0;
  double sd = 1.0;
};

struct ContaminationScheme {
  enum class Kind { exponential_mean, weibull_params };
  Kind kind = Kind::exponential_mean;
  double mean = 31.0;    ///< exponential_mean
  double gamma1 = 1.0;   ///< weibull_params, Lambda(t) = (gamma1 t)^gamma2
  double gamma2 = 0.8;
  /// Contaminated units are recorded as events; false keeps their status.
  bool force_event = true;

  static ContaminationScheme exponential(double mean);
  static ContaminationScheme weibull(double gamma1, double gamma2);
  double draw(Rng& rng) const;
};

struct SimConfig {
  std::size_t n = 100;
  mdpde::ModelSpec spec;
  mdpde::Theta theta_true;
  CovariateDesign covariates;
  double censoring_target = 0.0;
  double epsilon = 0.0;
  ContaminationScheme scheme;
  int replications = 100;
  std::uint64_t seed = 0;
  double tau = 0.05;
  unsigned workers = 1;

  void validate() const;
};

/// T = Lambda^{-1}(-log(u) / e^{beta'z}), so S(T | z) = u.
double generate_survival(const mdpde::ModelSpec& spec, const mdpde::Theta& theta,
                         const Vector& z, double u);

/// Upper end c of C ~ U(0, c) for which the expected censored fraction
/// mean_i min(T_i / c, 1) equals `target`.
double calibrate_censoring_bound(const std::vector<double>& times, double target);

struct CensoredTimes {
  std::vector<double> x;
  std::vector<int> delta;
  double c_max = 0.0;  ///< +inf when no censoring was applied
};

CensoredTimes apply_censoring(const std::vector<double>& times, double target, Rng& rng);

/// Replaces floor(epsilon n) randomly chosen observed times with draws from
/// the scheme; covariates are kept.
data::CensoredDataset contaminate(const data::CensoredDataset& sample, double epsilon,
                                  const ContaminationScheme& scheme, Rng& rng);

/// One dataset from the configuration (model draw, censoring, contamination).
data::CensoredDataset simulate_dataset(const SimConfig& config, const mdpde::Theta& theta,
                                       Rng& rng);

struct Alternative {
  enum class Kind {
    /// Data from theta_true, test h.
    null,
    /// Data from theta_true + d / sqrt(n), test h.
    drift,
    /// Data from theta_true, test the null translated by d / sqrt(n).
    switched_null,
  };
  Kind kind = Kind::null;
  Vector d;
};

struct ExperimentCell {
  double alpha = 0.0;
  int rejections = 0;
  int valid = 0;
  int failures = 0;
  double rate = 0.0;
  double std_error = 0.0;
};

struct ExperimentResult {
  double censoring_target = 0.0;
  double epsilon = 0.0;
  std::size_t n = 0;
  int replications = 0;
  double realized_censoring = 0.0;
  std::vector<ExperimentCell> cells;
};

/// Rejection proportions of the Wald-type test for each alpha. Every
/// replication simulates one dataset and fits it at all alphas; failed fits
/// are excluded from that alpha's denominator and counted.
ExperimentResult level_power_experiment(const SimConfig& config,
                                        const inference::HypothesisSpec& h,
                                        const std::vector<double>& alphas,
                                        const Alternative& alternative = {});

/// Header: censoring,epsilon,n,replications,<one column per alpha>,failures
void write_experiment_csv(std::ostream& out, const std::vector<ExperimentResult>& rows);

}  // namespace dpdsurv::simulation
