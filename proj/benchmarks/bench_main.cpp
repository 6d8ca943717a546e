#include "dpdsurv/mdpde.hpp"
#include "dpdsurv/numerics.hpp"
#include "dpdsurv/simulation.hpp"

#include <benchmark/benchmark.h>

using namespace dpdsurv;

namespace {

data::CensoredDataset sample(const std::string& family, std::size_t n) {
  simulation::SimConfig cfg;
  cfg.n = n;
  cfg.spec = mdpde::make_model(family, 3);
  cfg.theta_true.gamma = Eigen::VectorXd::Constant(1, 1.0);
  if (family == "weibull") {
    cfg.theta_true.gamma.resize(2);
    cfg.theta_true.gamma << 1.0, 1.3;
  }
  cfg.theta_true.beta = Eigen::VectorXd::Constant(3, 0.5);
  cfg.censoring_target = 0.1;
  cfg.seed = 7;
  auto rng = simulation::replication_rng(cfg.seed, 0);
  return simulation::simulate_dataset(cfg, cfg.theta_true, rng);
}

void BM_Objective(benchmark::State& state, const std::string& family, bool quadrature) {
  auto spec = mdpde::make_model(family, 3);
  spec.integration.force_quadrature = quadrature;
  const auto d = sample(family, static_cast<std::size_t>(state.range(0)));
  const auto theta = mdpde::fit_mdpde(spec, d, 0.0).theta_hat;
  for (auto _ : state) benchmark::DoNotOptimize(mdpde::dpd_objective(spec, d, theta, 0.3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Objective, exponential, std::string("exponential"), false)->Arg(100)->Arg(1000);
BENCHMARK_CAPTURE(BM_Objective, weibull, std::string("weibull"), false)->Arg(100)->Arg(1000);
BENCHMARK_CAPTURE(BM_Objective, weibull_quadrature, std::string("weibull"), true)->Arg(100);

void BM_Fit(benchmark::State& state, const std::string& family) {
  const auto spec = mdpde::make_model(family, 3);
  const auto d = sample(family, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mdpde::fit_mdpde(spec, d, 0.3));
}
BENCHMARK_CAPTURE(BM_Fit, exponential, std::string("exponential"))->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Fit, weibull, std::string("weibull"))->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_NoncentralSf(benchmark::State& state) {
  const double ncp = static_cast<double>(state.range(0));
  const double c = numerics::chisq_quantile(0.95, 3);
  for (auto _ : state) benchmark::DoNotOptimize(numerics::noncentral_chisq_sf(c, 3, ncp));
}
BENCHMARK(BM_NoncentralSf)->Arg(1)->Arg(20)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
