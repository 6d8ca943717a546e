#include "dpdsurv/selection.hpp"

#include "dpdsurv/error.hpp"
#include "dpdsurv/parallel.hpp"
#include "dpdsurv/robust_inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace dpdsurv::selection {

namespace {

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("alpha grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw DomainError("alpha grid must lie in [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw DomainError("alpha grid must be strictly increasing");
    }
  }
}

std::string format_alpha(double a) {
  std::ostringstream s;
  s << a;
  return s.str();
}

}  // namespace

double dic(const mdpde::ModelSpec& spec, const data::CensoredDataset& data,
           const mdpde::FitResult& fit) {
  if (fit.J_hat.size() == 0 || fit.K_hat.size() == 0) {
    throw PreconditionError("DIC needs a fit with J and K populated");
  }
  const double h = mdpde::dpd_objective(spec, data, fit.theta_hat, fit.alpha);
  double penalty = 0.0;
  try {
    // tr(K J^{-1}) = tr(J^{-1} K)
    penalty = numerics::trace_solve(fit.J_hat, fit.K_hat);
  } catch (const NearSingularError& e) {
    throw DegenerateInformationError(std::string("DIC penalty: ") + e.what(), e.condition());
  }
  return h + (fit.alpha + 1.0) / static_cast<double>(data.size()) * penalty;
}

double amse_estimate(const mdpde::FitResult& fit_alpha, const mdpde::Theta& pilot) {
  const Vector diff = fit_alpha.theta_hat.stacked() - pilot.stacked();
  if (fit_alpha.sigma.size() == 0 || fit_alpha.n == 0) {
    throw PreconditionError("AMSE needs a fit with its covariance");
  }
  return diff.squaredNorm() + fit_alpha.sigma.trace() / static_cast<double>(fit_alpha.n);
}

std::vector<double> default_alpha_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw DomainError("grid step must lie in (0, 1]");
  const int count = static_cast<int>(std::floor(1.0 / step + 1e-9));
  std::vector<double> out;
  for (int i = 0; i <= count; ++i) out.push_back(std::round(i * step * 1e10) / 1e10);
  if (out.back() < 1.0 - 1e-12) out.push_back(1.0);
  return out;
}

AlphaSelection select_alpha(const mdpde::ModelSpec& spec, const data::CensoredDataset& data,
                            const SelectAlphaOptions& options) {
  validate_grid(options.grid);
  if (!(options.pilot_alpha >= 0.0 && options.pilot_alpha <= 1.0)) {
    throw DomainError("pilot alpha must lie in [0, 1]");
  }
  AlphaSelection out;
  out.grid = options.grid;

  mdpde::FitResult pilot_fit;
  try {
    pilot_fit = mdpde::fit_mdpde(spec, data, options.pilot_alpha);
  } catch (const std::exception& e) {
    throw PreconditionError(std::string("pilot fit failed: ") + e.what());
  }
  out.pilot = pilot_fit.theta_hat;

  const std::size_t m = options.grid.size();
  std::vector<mdpde::FitResult> fits(m);
  double previous = std::numeric_limits<double>::quiet_NaN();
  const int rounds = options.iterate ? std::max(1, options.max_rounds) : 1;
  for (int round = 1; round <= rounds; ++round) {
    out.rounds = round;
    out.amse.assign(m, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(m);
    parallel_for(
        m,
        [&](std::size_t i) {
          try {
            fits[i] = mdpde::fit_mdpde(spec, data, options.grid[i], out.pilot);
            if (!fits[i].converged) {
              errors[i] = "fit did not converge";
              return;
            }
            out.amse[i] = amse_estimate(fits[i], out.pilot);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        },
        options.workers);
    out.warnings.clear();
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < m; ++i) {
      if (!errors[i].empty()) {
        out.warnings.push_back("alpha = " + format_alpha(options.grid[i]) + " excluded: " +
                               errors[i]);
        continue;
      }
      if (!best || out.amse[i] < out.amse[*best]) best = i;
    }
    if (!best) throw PreconditionError("select_alpha: every grid fit failed");
    out.alpha_hat = options.grid[*best];
    out.fit = fits[*best];
    if (!options.iterate || out.alpha_hat == previous) break;
    previous = out.alpha_hat;
    out.pilot = out.fit.theta_hat;
  }
  return out;
}

std::vector<CandidateModel> enumerate_candidates(const std::vector<std::string>& baselines,
                                                 const std::vector<std::string>& covariate_names,
                                                 int max_subset_size) {
  const int p = static_cast<int>(covariate_names.size());
  if (p >= 31) throw DomainError("too many covariates to enumerate");
  std::vector<CandidateModel> out;
  for (const auto& b : baselines) {
    for (unsigned mask = 1; mask < (1u << p); ++mask) {
      CandidateModel c;
      c.baseline = b;
      for (int j = 0; j < p; ++j) {
        if (mask & (1u << j)) c.subset.push_back(j);
      }
      if (max_subset_size > 0 && static_cast<int>(c.subset.size()) > max_subset_size) continue;
      c.label = b + "(";
      for (std::size_t k = 0; k < c.subset.size(); ++k) {
        c.label += (k ? "+" : "") + covariate_names[c.subset[k]];
      }
      c.label += ")";
      out.push_back(std::move(c));
    }
  }
  return out;
}

DicReport model_search(const data::CensoredDataset& data, const ModelSearchOptions& options) {
  if (data.p() < 1) throw PreconditionError("model search needs at least one covariate");
  if (data.p() > options.max_covariates) {
    throw PreconditionError("model search over " + std::to_string(data.p()) +
                            " covariates exceeds the enumeration guard (" +
                            std::to_string(options.max_covariates) + ")");
  }
  if (options.baselines.empty()) throw DomainError("model search needs at least one baseline");
  for (const auto& b : options.baselines) hazards::make_baseline(b);

  DicReport report;
  const auto models = enumerate_candidates(options.baselines, data.covariate_names(),
                                           options.max_subset_size);
  report.candidates.resize(models.size());
  parallel_for(
      models.size(),
      [&](std::size_t i) {
        CandidateResult& c = report.candidates[i];
        c.model = models[i];
        try {
          const auto spec =
              mdpde::make_model(c.model.baseline, static_cast<int>(c.model.subset.size()));
          const auto sub = data::subset_covariates(data, c.model.subset);
          auto sel = select_alpha(spec, sub, options.alpha);
          c.alpha_hat = sel.alpha_hat;
          c.fit = std::move(sel.fit);
          c.dic = dic(spec, sub, c.fit);
          c.ok = std::isfinite(c.dic);
          if (!c.ok) c.error = "non-finite DIC";
        } catch (const std::exception& e) {
          c.ok = false;
          c.error = e.what();
        }
      },
      options.workers);

  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    if (report.candidates[i].ok) report.ranking.push_back(i);
  }
  std::sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t l, std::size_t r) {
    const auto& a = report.candidates[l];
    const auto& b = report.candidates[r];
    if (a.dic != b.dic) return a.dic < b.dic;
    if (a.model.subset.size() != b.model.subset.size()) {
      return a.model.subset.size() < b.model.subset.size();
    }
    return a.model.label < b.model.label;
  });
  if (report.ranking.empty()) return report;
  report.winner = report.ranking.front();

  const auto& w = report.candidates[*report.winner];
  const auto spec = mdpde::make_model(w.model.baseline, static_cast<int>(w.model.subset.size()));
  const Vector se = w.fit.standard_errors();
  for (int j = 1; j <= spec.p; ++j) {
    CoefficientRow row;
    row.label = data.covariate_names()[w.model.subset[j - 1]];
    row.estimate = w.fit.theta_hat.beta(j - 1);
    row.std_error = se.size() ? se(spec.q() + j - 1) : std::numeric_limits<double>::quiet_NaN();
    try {
      const auto t = inference::wald_test(w.fit, inference::coefficient_equals(spec, j, 0.0),
                                          options.tau);
      row.statistic = t.statistic;
      row.p_value = t.p_value;
    } catch (const std::exception&) {
      row.statistic = std::numeric_limits<double>::quiet_NaN();
      row.p_value = std::numeric_limits<double>::quiet_NaN();
    }
    report.winner_coefficients.push_back(row);
  }
  return report;
}

void write_dic_csv(std::ostream& out, const DicReport& report) {
  out << "candidate,baseline,subset,alpha_hat,dic,converged,winner\n";
  const auto old = out.precision(12);
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    out << '"' << c.model.label << "\"," << c.model.baseline << ",\"";
    for (std::size_t k = 0; k < c.model.subset.size(); ++k) {
      out << (k ? " " : "") << c.model.subset[k] + 1;
    }
    out << "\",";
    if (c.ok) {
      out << std::fixed << std::setprecision(2) << c.alpha_hat << std::defaultfloat
          << std::setprecision(12) << ',' << c.dic;
    } else {
      out << "NA,NA";
    }
    out << ',' << (c.ok && c.fit.converged ? 1 : 0) << ','
        << (report.winner && *report.winner == i ? 1 : 0) << '\n';
  }
  out.precision(old);
}

std::string format_dic_summary(const DicReport& report) {
  std::ostringstream out;
  std::size_t width = 9;
  for (const auto& c : report.candidates) width = std::max(width, c.model.label.size());
  const int w = static_cast<int>(width) + 2;
  out << std::left << std::setw(w) << "candidate" << std::right << std::setw(8) << "alpha"
      << std::setw(16) << "DIC" << "\n";
  for (const std::size_t i : report.ranking) {
    const auto& c = report.candidates[i];
    out << std::left << std::setw(w) << c.model.label << std::right << std::fixed
        << std::setprecision(2) << std::setw(8) << c.alpha_hat << std::setprecision(6)
        << std::setw(16) << c.dic << (report.winner && *report.winner == i ? "  *" : "") << "\n";
  }
  for (const auto& c : report.candidates) {
    if (!c.ok) out << "failed: " << c.model.label << ": " << c.error << "\n";
  }
  if (!report.winner) {
    out << "\nno candidate could be fitted\n";
    return out.str();
  }
  const auto& win = report.candidates[*report.winner];
  out << "\nselected " << win.model.label << " at alpha = " << std::fixed << std::setprecision(2)
      << win.alpha_hat << "\n";
  std::size_t lw = 8;
  for (const auto& r : report.winner_coefficients) lw = std::max(lw, r.label.size());
  const int l = static_cast<int>(lw) + 2;
  out << std::left << std::setw(l) << "covariate" << std::right << std::setw(12) << "estimate"
      << std::setw(12) << "std.error" << std::setw(12) << "p-value" << "\n";
  for (const auto& r : report.winner_coefficients) {
    out << std::left << std::setw(l) << r.label << std::right << std::setprecision(4)
        << std::setw(12) << r.estimate << std::setw(12) << r.std_error << std::setw(12)
        << r.p_value << "\n";
  }
  return out.str();
}

}  // namespace dpdsurv::selection
