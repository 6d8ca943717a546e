#include <doctest.h>

#include "dpdsurv/error.hpp"
#include "dpdsurv/selection.hpp"
#include "dpdsurv/simulation.hpp"

#include <cmath>
#include <sstream>

using namespace dpdsurv;
using namespace dpdsurv::selection;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

data::CensoredDataset sample(int p, std::size_t n, std::uint64_t seed, double cens = 0.1) {
  simulation::SimConfig cfg;
  cfg.n = n;
  cfg.spec = mdpde::make_model("exponential", p);
  cfg.theta_true.gamma = vec({1.0});
  cfg.theta_true.beta = Vector::Zero(p);
  cfg.theta_true.beta(0) = 1.0;
  cfg.censoring_target = cens;
  auto rng = simulation::replication_rng(seed, 0);
  return simulation::simulate_dataset(cfg, cfg.theta_true, rng);
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("dic decomposition") {
  const auto d = sample(2, 120, 1);
  const auto spec = mdpde::make_model("exponential", 2);
  for (double alpha : {0.0, 0.4}) {
    const auto fit = mdpde::fit_mdpde(spec, d, alpha);
    const double v = dic(spec, d, fit);
    CHECK(v == dic(spec, d, fit));
    const double penalty = v - fit.objective_value;
    CHECK(penalty > 0.0);
    CHECK(penalty == doctest::Approx((alpha + 1.0) / 120.0 *
                                     (fit.J_hat.inverse() * fit.K_hat).trace()));
  }
}

TEST_CASE("dic at tiny alpha is the TIC form") {
  const auto d = sample(1, 150, 2, 0.0);
  const auto spec = mdpde::make_model("exponential", 1);
  const auto fit = mdpde::fit_mdpde(spec, d, 1e-6);
  // Independent log-likelihood and TIC penalty.
  const double g = fit.theta_hat.gamma(0);
  const double b = fit.theta_hat.beta(0);
  double loglik = 0.0;
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
  for (const auto& o : d.observations()) {
    const double z = o.z(0);
    const double e = std::exp(b * z);
    loglik += o.delta * (std::log(g) + b * z) - g * o.x * e;
    Eigen::Vector2d u(o.delta / g - o.x * e, z * (o.delta - g * o.x * e));
    K += u * u.transpose();
    Eigen::Matrix2d h;
    h << o.delta / (g * g), z * o.x * e, z * o.x * e, z * z * g * o.x * e;
    J += h;
  }
  const double n = static_cast<double>(d.size());
  const double tic = -loglik / n + (J.inverse() * K).trace() / n;
  CHECK(std::abs(dic(spec, d, fit) - tic) < 1e-4);
}

TEST_CASE("amse") {
  const auto d = sample(1, 100, 3);
  const auto spec = mdpde::make_model("exponential", 1);
  const auto fit = mdpde::fit_mdpde(spec, d, 0.3);
  const double var = fit.sigma.trace() / 100.0;
  CHECK(amse_estimate(fit, fit.theta_hat) == doctest::Approx(var));
  mdpde::Theta pilot = fit.theta_hat;
  pilot.beta(0) += 0.2;
  pilot.gamma(0) -= 0.1;
  CHECK(amse_estimate(fit, pilot) == doctest::Approx(var + 0.05));
  CHECK(amse_estimate(fit, pilot) >= var);
}

TEST_CASE("alpha grid") {
  const auto g = default_alpha_grid();
  CHECK(g.size() == 21);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[7] == doctest::Approx(0.35));
}

TEST_CASE("select alpha") {
  const auto d = sample(1, 150, 4);
  const auto spec = mdpde::make_model("exponential", 1);
  SelectAlphaOptions single;
  single.grid = {0.35};
  CHECK(select_alpha(spec, d, single).alpha_hat == 0.35);

  SelectAlphaOptions opt;
  opt.grid = {0.0, 0.1, 0.2, 0.3, 0.5, 0.7};
  const auto sel = select_alpha(spec, d, opt);
  CHECK(sel.amse.size() == opt.grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < sel.amse.size(); ++i) {
    if (sel.amse[i] < sel.amse[best]) best = i;
  }
  CHECK(sel.alpha_hat == opt.grid[best]);
  CHECK(sel.fit.alpha == sel.alpha_hat);
  opt.workers = 3;
  const auto again = select_alpha(spec, d, opt);
  CHECK(again.alpha_hat == sel.alpha_hat);
  CHECK(again.amse == sel.amse);
  opt.iterate = true;
  CHECK(select_alpha(spec, d, opt).rounds >= 1);
}

TEST_CASE("enumeration") {
  CHECK(enumerate_candidates({"exponential", "weibull"}, {"a"}).size() == 2);
  const auto c = enumerate_candidates({"exponential", "weibull"}, {"a", "b"});
  CHECK(c.size() == 6);
  CHECK(enumerate_candidates({"exponential"}, {"a", "b", "c", "d"}).size() == 15);
  CHECK(enumerate_candidates({"exponential"}, {"a", "b", "c", "d"}, 2).size() == 10);
  for (const auto& m : c) CHECK_FALSE(m.subset.empty());
}

TEST_CASE("model search") {
  const auto d = sample(2, 150, 5);
  ModelSearchOptions opt;
  opt.alpha.grid = {0.0, 0.2, 0.4};
  const auto report = model_search(d, opt);
  REQUIRE(report.candidates.size() == 6);
  REQUIRE(report.winner.has_value());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : report.candidates) {
    if (c.ok) best = std::min(best, c.dic);
  }
  CHECK(report.candidates[*report.winner].dic == best);
  CHECK(report.ranking.front() == *report.winner);
  CHECK(report.winner_coefficients.size() ==
        report.candidates[*report.winner].model.subset.size());
  std::ostringstream csv;
  write_dic_csv(csv, report);
  CHECK(csv.str().rfind("candidate,baseline,subset,alpha_hat,dic,converged,winner\n", 0) == 0);
  int lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == 7);
  CHECK(format_dic_summary(report).find("p-value") != std::string::npos);
}

TEST_CASE("model search guards") {
  const auto d0 = sample(1, 50, 6);
  ModelSearchOptions opt;
  opt.alpha.grid = {0.0};
  opt.max_covariates = 0;
  CHECK_THROWS_AS(model_search(d0, opt), PreconditionError);
}

}
