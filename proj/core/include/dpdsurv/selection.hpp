#pragma once

// Divergence information criterion, AMSE-based choice of the tuning
// parameter, and exhaustive model search over baselines and covariate subsets.

#include "dpdsurv/mdpde.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpdsurv::selection {

using numerics::Matrix;
using numerics::Vector;

/// H_{n,alpha}(theta_hat) + ((alpha + 1) / n) tr(K J^{-1}).
double dic(const mdpde::ModelSpec& spec, const data::CensoredDataset& data,
           const mdpde::FitResult& fit);

/// ||theta_alpha - pilot||^2 + tr(Sigma_alpha) / n.
double amse_estimate(const mdpde::FitResult& fit_alpha, const mdpde::Theta& pilot);

/// 0, step, 2 step, ..., 1.
std::vector<double> default_alpha_grid(double step = 0.05);

struct SelectAlphaOptions {
  std::vector<double> grid = default_alpha_grid();
  double pilot_alpha = 0.5;
  /// Re-pilot at the current choice until it stops moving.
  bool iterate = false;
  int max_rounds = 5;
  unsigned workers = 1;
};

struct AlphaSelection {
  double alpha_hat = 0.0;
  std::vector<double> grid;
  /// NaN where the fit at that alpha failed.
  std::vector<double> amse;
  std::vector<std::string> warnings;
  mdpde::Theta pilot;
  mdpde::FitResult fit;  ///< fit at alpha_hat
  int rounds = 0;
};

/// Throws PreconditionError when no grid point can be fitted.
AlphaSelection select_alpha(const mdpde::ModelSpec& spec, const data::CensoredDataset& data,
                            const SelectAlphaOptions& options = {});

struct CandidateModel {
  std::string baseline;
  std::vector<int> subset;  ///< 0-based covariate columns
  std::string label;
};

struct CandidateResult {
  CandidateModel model;
  bool ok = false;
  std::string error;
  double alpha_hat = 0.0;
  double dic = 0.0;
  mdpde::FitResult fit;
};

struct CoefficientRow {
  std::string label;
  double estimate = 0.0;
  double std_error = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct DicReport {
  std::vector<CandidateResult> candidates;
  /// Candidate indices, best first; failed candidates are left out.
  std::vector<std::size_t> ranking;
  std::optional<std::size_t> winner;
  /// Wald tests of beta_j = 0 for the winner at its alpha_hat.
  std::vector<CoefficientRow> winner_coefficients;
};

struct ModelSearchOptions {
  std::vector<std::string> baselines = {"exponential", "weibull"};
  /// Largest subset size; 0 means no limit.
  int max_subset_size = 0;
  double tau = 0.05;
  SelectAlphaOptions alpha;
  /// Guard against 2^p blow-up.
  int max_covariates = 15;
  unsigned workers = 1;
};

/// Every (baseline, non-empty covariate subset) in a fixed order.
std::vector<CandidateModel> enumerate_candidates(const std::vector<std::string>& baselines,
                                                 const std::vector<std::string>& covariate_names,
                                                 int max_subset_size = 0);

DicReport model_search(const data::CensoredDataset& data, const ModelSearchOptions& options = {});

/// Header: candidate,baseline,subset,alpha_hat,dic,converged,winner
void write_dic_csv(std::ostream& out, const DicReport& report);

/// Ranked candidate table followed by the winner's coefficient table.
std::string format_dic_summary(const DicReport& report);

}  // namespace dpdsurv::selection
