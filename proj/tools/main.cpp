// dpdsurv: robust parametric survival regression from the command line.
//
// Exit codes: 0 success, 2 usage or parse error, 3 data validation,
// 4 numerical failure (non-convergence, singular information, quadrature).

#include "hypothesis_parser.hpp"

#include "dpdsurv/data_model.hpp"
#include "dpdsurv/error.hpp"
#include "dpdsurv/mdpde.hpp"
#include "dpdsurv/parallel.hpp"
#include "dpdsurv/robust_inference.hpp"
#include "dpdsurv/selection.hpp"
#include "dpdsurv/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::ordered_json;
using namespace dpdsurv;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not-converged fits surface as exit code 4 after their report is written.
class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data;
  std::string time_col = "time";
  std::string status_col = "status";
  std::string covariates;
  std::string status_true;
  std::string baseline = "exponential";
  std::string baselines = "exponential,weibull";
  double alpha = 0.0;
  std::string alpha_grid;
  std::string hypothesis;
  double tau = 0.05;
  std::string out;
  std::string format = "text";
  unsigned workers = 0;

  // influence
  double grid_min = 0.01;
  double grid_max = 1000.0;
  int grid_points = 60;
  std::string z_point;
  double drift = 0.001;

  // select / select-alpha
  double pilot = 0.5;
  bool iterate = false;
  int max_subset = 0;

  // simulate
  std::size_t n = 100;
  int reps = 100;
  std::uint64_t seed = 1;
  std::string gamma = "1";
  std::string beta = "1,1,1";
  double z_mean = 0.0;
  double z_sd = 1.0;
  std::string censoring = "0.05";
  std::string epsilon = "0";
  double contam_mean = 31.0;
  std::string contam_weibull;
  bool keep_status = false;
  double sim_drift = 0.0;
  std::string power_mode = "switched";
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw UsageError("empty entry in list '" + s + "'");
    out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("cannot read " + what + " from '" + s + "'");
  }
  return v;
}

std::vector<double> number_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item, what));
  return out;
}

// "0,0.1,0.5" or "lo:step:hi"
std::vector<double> parse_alpha_grid(const std::string& s, std::vector<double> fallback) {
  std::vector<double> grid;
  if (trim(s).empty()) {
    grid = std::move(fallback);
  } else if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw UsageError("alpha grid range must be lo:step:hi");
    const double lo = to_double(parts[0], "alpha grid");
    const double step = to_double(parts[1], "alpha grid");
    const double hi = to_double(parts[2], "alpha grid");
    if (!(step > 0.0) || hi < lo) throw UsageError("alpha grid range must be lo:step:hi with step > 0");
    const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= count; ++i) grid.push_back(std::round((lo + i * step) * 1e12) / 1e12);
  } else {
    grid = number_list(s, "alpha grid");
  }
  if (grid.empty()) throw UsageError("alpha grid is empty");
  for (const double a : grid) {
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError("alpha values must lie in [0, 1]");
  }
  return grid;
}

void check_common(const Options& o) {
  if (!(o.alpha >= 0.0 && o.alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
  if (!(o.tau > 0.0 && o.tau < 1.0)) throw UsageError("--tau must lie in (0, 1)");
}

unsigned workers(const Options& o) { return o.workers == 0 ? default_workers() : o.workers; }

data::CensoredDataset load(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  data::CsvColumns cols;
  cols.time = o.time_col;
  cols.status = o.status_col;
  cols.covariates = split_list(o.covariates);
  if (!o.status_true.empty()) cols.status_true = o.status_true;
  auto d = data::load_csv(o.data, cols);
  for (const auto& w : data::dataset_warnings(d)) std::cerr << "warning: " << w << "\n";
  return d;
}

mdpde::ModelSpec model(const std::string& baseline, int p) {
  try {
    return mdpde::make_model(baseline, p);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

inference::HypothesisSpec hypothesis(const Options& o, const mdpde::ModelSpec& spec,
                                     std::vector<cli::Restriction>* parsed = nullptr) {
  if (trim(o.hypothesis).empty()) throw UsageError("--hypothesis is required");
  auto restrictions = cli::parse_restrictions(o.hypothesis);
  try {
    auto h = cli::build_hypothesis(restrictions, spec, trim(o.hypothesis));
    if (parsed) *parsed = std::move(restrictions);
    return h;
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

void emit(const Options& o, const std::string& content) {
  if (o.out.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream file(o.out, std::ios::binary);
  if (!file) throw UsageError("cannot open output file " + o.out);
  file << content;
  if (!file) throw UsageError("failed writing " + o.out);
}

void require_format(const Options& o, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (o.format == a) return;
  }
  throw UsageError("unsupported --format '" + o.format + "' for this subcommand");
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

std::string round_trip(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json to_json(const numerics::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const numerics::Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(numerics::Vector(m.row(i).transpose())));
  return a;
}

json fit_record(const mdpde::ModelSpec& spec, const mdpde::FitResult& fit,
                const std::vector<std::string>& names) {
  const auto labels = mdpde::parameter_labels(spec, names);
  const auto theta = fit.theta_hat.stacked();
  const bool have_se = fit.sigma.size() > 0;
  const numerics::Vector se = have_se ? fit.standard_errors() : numerics::Vector();
  json params = json::array();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    params.push_back({{"name", labels[k]},
                      {"estimate", theta(i)},
                      {"std_error", have_se ? json(se(i)) : json(nullptr)}});
  }
  return {{"baseline", spec.family()},
          {"alpha", fit.alpha},
          {"n", fit.n},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"objective", fit.objective_value},
          {"residual_norm", fit.residual_norm},
          {"message", fit.message},
          {"parameters", params},
          {"theta", to_json(theta)},
          {"sigma", have_se ? to_json(fit.sigma) : json(nullptr)}};
}

// ---------------------------------------------------------------- fit

int cmd_fit(const Options& o) {
  check_common(o);
  require_format(o, {"text", "json", "csv"});
  const auto d = load(o);
  const auto spec = model(o.baseline, d.p());
  const auto fit = mdpde::fit_mdpde(spec, d, o.alpha);
  std::string content;
  if (o.format == "json") {
    content = json_text(fit_record(spec, fit, d.covariate_names()));
  } else if (o.format == "csv") {
    const auto labels = mdpde::parameter_labels(spec, d.covariate_names());
    const auto theta = fit.theta_hat.stacked();
    const auto se = fit.standard_errors();
    std::ostringstream os;
    os << "parameter,estimate,std_error\n";
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      os << labels[k] << "," << round_trip(theta(i)) << "," << round_trip(se(i)) << "\n";
    }
    content = os.str();
  } else {
    content = mdpde::format_fit_report(spec, fit, d.covariate_names());
  }
  emit(o, content);
  if (!fit.converged) throw ConvergenceFailure("fit did not converge: " + fit.message);
  return kOk;
}

// ---------------------------------------------------------------- test

int cmd_test(const Options& o) {
  check_common(o);
  require_format(o, {"text", "json", "csv"});
  const auto d = load(o);
  const auto spec = model(o.baseline, d.p());
  const auto h = hypothesis(o, spec);
  const auto fit = mdpde::fit_mdpde(spec, d, o.alpha);
  if (!fit.converged) throw ConvergenceFailure("fit did not converge: " + fit.message);
  const auto t = inference::wald_test(fit, h, o.tau);
  std::ostringstream os;
  if (o.format == "json") {
    json j = {{"hypothesis", t.label},
              {"alpha", t.alpha},
              {"statistic", t.statistic},
              {"df", t.r},
              {"p_value", t.p_value},
              {"critical_value", t.critical_value},
              {"tau", t.tau},
              {"reject", t.reject},
              {"fit", fit_record(spec, fit, d.covariate_names())}};
    os << json_text(j);
  } else if (o.format == "csv") {
    os << "hypothesis,alpha,statistic,df,p_value,critical_value,tau,reject\n"
       << "\"" << t.label << "\"," << t.alpha << "," << round_trip(t.statistic) << "," << t.r
       << "," << round_trip(t.p_value) << "," << round_trip(t.critical_value) << "," << t.tau
       << "," << (t.reject ? 1 : 0) << "\n";
  } else {
    os << "Wald-type test of " << t.label << " (alpha = " << t.alpha << ", n = " << fit.n
       << ")\n"
       << "  W_n            " << std::setprecision(6) << t.statistic << "\n"
       << "  df             " << t.r << "\n"
       << "  p-value        " << t.p_value << "\n"
       << "  critical value " << t.critical_value << " (tau = " << t.tau << ")\n"
       << "  decision       " << (t.reject ? "reject H0" : "do not reject H0") << "\n";
  }
  emit(o, os.str());
  return kOk;
}

// ---------------------------------------------------------------- influence

int cmd_influence(const Options& o) {
  check_common(o);
  require_format(o, {"text", "csv"});
  if (!(o.grid_min > 0.0) || !(o.grid_max > o.grid_min) || o.grid_points < 2) {
    throw UsageError("need 0 < --grid-min < --grid-max and --grid-points >= 2");
  }
  const auto d = load(o);
  const auto spec = model(o.baseline, d.p());
  std::vector<cli::Restriction> restrictions;
  const auto h = hypothesis(o, spec, &restrictions);
  const auto fit = mdpde::fit_mdpde(spec, d, o.alpha);
  if (!fit.converged) throw ConvergenceFailure("fit did not converge: " + fit.message);

  // Null parameter: the fit with the restricted coordinates set to their values.
  numerics::Vector theta0 = fit.theta_hat.stacked();
  numerics::Vector drift = numerics::Vector::Zero(spec.dim());
  for (const auto& r : restrictions) {
    const int c = cli::restriction_coordinate(r, spec);
    theta0(c) = r.value;
    drift(c) = o.drift;
  }
  mdpde::Theta null_theta;
  try {
    null_theta = mdpde::Theta::unstack(spec, theta0);
    mdpde::require_valid(spec, null_theta);
  } catch (const DomainError& e) {
    throw UsageError(std::string("null parameter is invalid: ") + e.what());
  }
  const auto ctx = inference::make_influence_context(spec, d, null_theta, o.alpha, h, o.tau);

  numerics::Vector z(d.p());
  if (!trim(o.z_point).empty()) {
    const auto values = number_list(o.z_point, "--z");
    if (static_cast<int>(values.size()) != d.p()) {
      throw UsageError("--z needs " + std::to_string(d.p()) + " values");
    }
    for (int j = 0; j < d.p(); ++j) z(j) = values[static_cast<std::size_t>(j)];
  } else {
    z.setZero();
    for (const auto& ob : d.observations()) z += ob.z;
    if (!d.empty()) z /= static_cast<double>(d.size());
  }
  const auto times = inference::log_grid(o.grid_min, o.grid_max, o.grid_points);
  const auto rows = inference::influence_sweep(ctx, drift, times, z);
  std::ostringstream os;
  inference::write_influence_csv(os, rows, mdpde::parameter_labels(spec, d.covariate_names()));
  emit(o, os.str());
  return kOk;
}

// ---------------------------------------------------------------- select

json coefficient_json(const std::vector<selection::CoefficientRow>& rows) {
  json a = json::array();
  for (const auto& c : rows) {
    a.push_back({{"name", c.label},
                 {"estimate", c.estimate},
                 {"std_error", c.std_error},
                 {"statistic", c.statistic},
                 {"p_value", c.p_value}});
  }
  return a;
}

int cmd_select(const Options& o) {
  check_common(o);
  require_format(o, {"text", "json", "csv"});
  const auto d = load(o);
  if (d.p() < 1) throw UsageError("select needs at least one covariate (--covariates)");
  selection::ModelSearchOptions opt;
  opt.baselines = split_list(o.baselines);
  for (const auto& b : opt.baselines) model(b, d.p());
  opt.max_subset_size = o.max_subset;
  opt.tau = o.tau;
  opt.alpha.grid = parse_alpha_grid(o.alpha_grid, selection::default_alpha_grid());
  opt.alpha.pilot_alpha = o.pilot;
  opt.alpha.iterate = o.iterate;
  opt.workers = workers(o);
  const auto report = selection::model_search(d, opt);
  for (const auto& c : report.candidates) {
    if (!c.ok) std::cerr << "warning: candidate " << c.model.label << " failed: " << c.error << "\n";
  }
  std::ostringstream os;
  if (o.format == "csv") {
    selection::write_dic_csv(os, report);
  } else if (o.format == "json") {
    json cands = json::array();
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
      const auto& c = report.candidates[i];
      cands.push_back({{"candidate", c.model.label},
                       {"baseline", c.model.baseline},
                       {"ok", c.ok},
                       {"alpha_hat", c.ok ? json(c.alpha_hat) : json(nullptr)},
                       {"dic", c.ok ? json(c.dic) : json(nullptr)},
                       {"converged", c.ok && c.fit.converged},
                       {"winner", report.winner && *report.winner == i},
                       {"error", c.error}});
    }
    json j = {{"candidates", cands},
              {"winner", report.winner ? json(report.candidates[*report.winner].model.label)
                                       : json(nullptr)},
              {"coefficients", coefficient_json(report.winner_coefficients)}};
    os << json_text(j);
  } else {
    os << selection::format_dic_summary(report);
  }
  emit(o, os.str());
  if (!report.winner) throw ConvergenceFailure("every candidate model failed");
  return kOk;
}

int cmd_select_alpha(const Options& o) {
  check_common(o);
  require_format(o, {"text", "json", "csv"});
  if (!(o.pilot >= 0.0 && o.pilot <= 1.0)) throw UsageError("--pilot must lie in [0, 1]");
  const auto d = load(o);
  const auto spec = model(o.baseline, d.p());
  selection::SelectAlphaOptions opt;
  opt.grid = parse_alpha_grid(o.alpha_grid, selection::default_alpha_grid());
  opt.pilot_alpha = o.pilot;
  opt.iterate = o.iterate;
  opt.workers = workers(o);
  const auto sel = selection::select_alpha(spec, d, opt);
  for (const auto& w : sel.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream os;
  if (o.format == "csv") {
    os << "alpha,amse,selected\n";
    for (std::size_t i = 0; i < sel.grid.size(); ++i) {
      os << sel.grid[i] << "," << (std::isnan(sel.amse[i]) ? std::string("NA") : round_trip(sel.amse[i]))
         << "," << (sel.grid[i] == sel.alpha_hat ? 1 : 0) << "\n";
    }
  } else if (o.format == "json") {
    json trace = json::array();
    for (std::size_t i = 0; i < sel.grid.size(); ++i) {
      trace.push_back({{"alpha", sel.grid[i]},
                       {"amse", std::isnan(sel.amse[i]) ? json(nullptr) : json(sel.amse[i])}});
    }
    json j = {{"alpha_hat", sel.alpha_hat},
              {"pilot_alpha", o.pilot},
              {"rounds", sel.rounds},
              {"amse", trace},
              {"fit", fit_record(spec, sel.fit, d.covariate_names())}};
    os << json_text(j);
  } else {
    os << "AMSE trace (pilot alpha = " << o.pilot << ", rounds = " << sel.rounds << ")\n";
    os << "  alpha      amse\n";
    for (std::size_t i = 0; i < sel.grid.size(); ++i) {
      os << "  " << std::fixed << std::setprecision(2) << std::setw(5) << sel.grid[i] << "  ";
      if (std::isnan(sel.amse[i])) {
        os << "failed";
      } else {
        os << std::scientific << std::setprecision(4) << sel.amse[i];
      }
      os << (sel.grid[i] == sel.alpha_hat ? "  *" : "") << "\n";
    }
    os << std::fixed << std::setprecision(2) << "optimal alpha: " << sel.alpha_hat << "\n\n";
    os.unsetf(std::ios::floatfield);
    os << mdpde::format_fit_report(spec, sel.fit, d.covariate_names());
  }
  emit(o, os.str());
  return kOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o) {
  check_common(o);
  require_format(o, {"text", "csv"});
  if (o.reps < 1) throw UsageError("--reps must be >= 1");
  if (o.n < 2) throw UsageError("--n must be >= 2");
  const auto beta = number_list(o.beta, "--beta");
  const auto gamma = number_list(o.gamma, "--gamma");
  const auto spec = model(o.baseline, static_cast<int>(beta.size()));
  if (static_cast<int>(gamma.size()) != spec.q()) {
    throw UsageError("--gamma needs " + std::to_string(spec.q()) + " values for " + o.baseline);
  }
  simulation::SimConfig cfg;
  cfg.n = o.n;
  cfg.spec = spec;
  cfg.theta_true.gamma = Eigen::Map<const numerics::Vector>(gamma.data(), spec.q());
  cfg.theta_true.beta = Eigen::Map<const numerics::Vector>(beta.data(), spec.p);
  cfg.covariates = {o.z_mean, o.z_sd};
  cfg.replications = o.reps;
  cfg.seed = o.seed;
  cfg.tau = o.tau;
  cfg.workers = workers(o);
  if (!trim(o.contam_weibull).empty()) {
    const auto w = number_list(o.contam_weibull, "--contam-weibull");
    if (w.size() != 2) throw UsageError("--contam-weibull needs gamma1,gamma2");
    cfg.scheme = simulation::ContaminationScheme::weibull(w[0], w[1]);
  } else {
    cfg.scheme = simulation::ContaminationScheme::exponential(o.contam_mean);
  }
  cfg.scheme.force_event = !o.keep_status;

  std::vector<cli::Restriction> restrictions;
  const auto h = hypothesis(o, spec, &restrictions);
  simulation::Alternative alt;
  if (o.sim_drift != 0.0) {
    if (o.power_mode == "switched") {
      alt.kind = simulation::Alternative::Kind::switched_null;
    } else if (o.power_mode == "drift") {
      alt.kind = simulation::Alternative::Kind::drift;
    } else {
      throw UsageError("--power-mode must be switched or drift");
    }
    alt.d = numerics::Vector::Zero(spec.dim());
    for (const auto& r : restrictions) alt.d(cli::restriction_coordinate(r, spec)) = o.sim_drift;
  }
  const auto alphas = parse_alpha_grid(o.alpha_grid, {0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5});
  const auto cens = number_list(o.censoring, "--censoring");
  const auto eps = number_list(o.epsilon, "--epsilon");
  if (cens.empty() || eps.empty()) throw UsageError("--censoring and --epsilon need values");

  std::vector<simulation::ExperimentResult> rows;
  for (const double c : cens) {
    for (const double e : eps) {
      cfg.censoring_target = c;
      cfg.epsilon = e;
      try {
        cfg.validate();
      } catch (const DomainError& err) {
        throw UsageError(err.what());
      } catch (const PreconditionError& err) {
        throw UsageError(err.what());
      }
      rows.push_back(simulation::level_power_experiment(cfg, h, alphas, alt));
      std::cerr << "censoring " << c << ", epsilon " << e << ": done\n";
    }
  }
  std::ostringstream os;
  simulation::write_experiment_csv(os, rows);
  emit(o, os.str());
  return kOk;
}

// ---------------------------------------------------------------- wiring

void data_flags(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "CSV file with a header row")->required();
  sub->add_option("--time-col", o.time_col, "observed time column")->capture_default_str();
  sub->add_option("--status-col", o.status_col, "event indicator column")->capture_default_str();
  sub->add_option("--status-true", o.status_true,
                  "token in the status column that marks an event (default: 0/1 coding)");
  sub->add_option("--covariates", o.covariates, "comma-separated covariate columns");
}

void model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--baseline", o.baseline, "exponential or weibull")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "DPD tuning parameter in [0, 1]")->capture_default_str();
}

void output_flags(CLI::App* sub, Options& o, const std::string& formats) {
  sub->add_option("--out", o.out, "write the result here instead of stdout");
  sub->add_option("--format", o.format, formats)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust density power divergence estimation and Wald-type tests for "
               "parametric proportional hazards models with right censoring"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "fit the model and report estimates with sandwich SEs");
  data_flags(fit, o);
  model_flags(fit, o);
  output_flags(fit, o, "text, json or csv");

  auto* test = app.add_subcommand("test", "Wald-type test of a linear coordinate hypothesis");
  data_flags(test, o);
  model_flags(test, o);
  test->add_option("--hypothesis", o.hypothesis, "e.g. beta[2]=1, beta[1,3]=0, gamma[2]=1")
      ->required();
  test->add_option("--tau", o.tau, "nominal level")->capture_default_str();
  output_flags(test, o, "text, json or csv");

  auto* infl = app.add_subcommand("influence", "IF, IF2 and PIF sweep over contamination times");
  data_flags(infl, o);
  model_flags(infl, o);
  infl->add_option("--hypothesis", o.hypothesis, "null hypothesis")->required();
  infl->add_option("--tau", o.tau, "nominal level")->capture_default_str();
  infl->add_option("--grid-min", o.grid_min, "smallest contamination time")->capture_default_str();
  infl->add_option("--grid-max", o.grid_max, "largest contamination time")->capture_default_str();
  infl->add_option("--grid-points", o.grid_points, "log-spaced grid size")->capture_default_str();
  infl->add_option("--z", o.z_point, "covariates of the contamination point (default: means)");
  infl->add_option("--drift", o.drift, "contiguous drift d on the restricted coordinates")
      ->capture_default_str();
  output_flags(infl, o, "csv (text is the same)");

  auto* sel = app.add_subcommand("select", "DIC model search over baselines and covariate subsets");
  data_flags(sel, o);
  sel->add_option("--baselines", o.baselines, "comma-separated baseline families")
      ->capture_default_str();
  sel->add_option("--alpha-grid", o.alpha_grid, "list a,b,c or range lo:step:hi (default 0:0.05:1)");
  sel->add_option("--pilot", o.pilot, "pilot alpha for the AMSE criterion")->capture_default_str();
  sel->add_flag("--iterate", o.iterate, "re-pilot at the selected alpha until stable");
  sel->add_option("--max-subset", o.max_subset, "largest covariate subset (0 = all)")
      ->capture_default_str();
  sel->add_option("--tau", o.tau, "level of the coefficient tests")->capture_default_str();
  sel->add_option("--workers", o.workers, "threads (0 = hardware)")->capture_default_str();
  output_flags(sel, o, "text, json or csv");

  auto* sa = app.add_subcommand("select-alpha", "choose alpha by minimum estimated AMSE");
  data_flags(sa, o);
  sa->add_option("--baseline", o.baseline, "exponential or weibull")->capture_default_str();
  sa->add_option("--alpha-grid", o.alpha_grid, "list a,b,c or range lo:step:hi (default 0:0.05:1)");
  sa->add_option("--pilot", o.pilot, "pilot alpha")->capture_default_str();
  sa->add_flag("--iterate", o.iterate, "re-pilot at the selected alpha until stable");
  sa->add_option("--workers", o.workers, "threads (0 = hardware)")->capture_default_str();
  output_flags(sa, o, "text, json or csv");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo level or power table");
  sim->add_option("--baseline", o.baseline, "exponential or weibull")->capture_default_str();
  sim->add_option("--n", o.n, "sample size")->capture_default_str();
  sim->add_option("--reps", o.reps, "replications")->capture_default_str();
  sim->add_option("--seed", o.seed, "random seed")->required();
  sim->add_option("--gamma", o.gamma, "true baseline parameters")->capture_default_str();
  sim->add_option("--beta", o.beta, "true regression coefficients")->capture_default_str();
  sim->add_option("--z-mean", o.z_mean, "covariate mean")->capture_default_str();
  sim->add_option("--z-sd", o.z_sd, "covariate standard deviation")->capture_default_str();
  sim->add_option("--censoring", o.censoring, "censoring proportions (list)")->capture_default_str();
  sim->add_option("--epsilon", o.epsilon, "contamination fractions (list)")->capture_default_str();
  sim->add_option("--contam-mean", o.contam_mean, "mean of exponential outliers")
      ->capture_default_str();
  sim->add_option("--contam-weibull", o.contam_weibull, "Weibull outliers gamma1,gamma2");
  sim->add_flag("--keep-status", o.keep_status, "contaminated units keep their censoring status");
  sim->add_option("--hypothesis", o.hypothesis, "null hypothesis")->required();
  sim->add_option("--tau", o.tau, "nominal level")->capture_default_str();
  sim->add_option("--alpha-grid", o.alpha_grid, "alpha columns (default 0,0.05,0.1,0.2,0.3,0.4,0.5)");
  sim->add_option("--drift", o.sim_drift, "d for contiguous alternatives (0 = level)");
  sim->add_option("--power-mode", o.power_mode, "switched (translate the null) or drift (move the truth)")
      ->capture_default_str();
  sim->add_option("--workers", o.workers, "threads (0 = hardware)")->capture_default_str();
  output_flags(sim, o, "csv (text is the same)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o);
    if (test->parsed()) return cmd_test(o);
    if (infl->parsed()) return cmd_influence(o);
    if (sel->parsed()) return cmd_select(o);
    if (sa->parsed()) return cmd_select_alpha(o);
    if (sim->parsed()) return cmd_simulate(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const cli::HypothesisSyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const PreconditionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const NearSingularError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const QuadratureError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
