// Microbenchmarks for the hot paths: Gram construction, the all-models fit,
// both bootstrap schemes, and data generation.

#include <benchmark/benchmark.h>

#include "pmax/bootstrap.hpp"
#include "pmax/dgp.hpp"
#include "pmax/maxtest.hpp"
#include "pmax/pols.hpp"

namespace {

pmax::Dataset make_data(Eigen::Index n, Eigen::Index k_delta, Eigen::Index k_theta) {
  pmax::dgp::CovariateSpec spec;
  spec.k_delta = k_delta;
  spec.k_theta = k_theta;
  spec.dependence = pmax::dgp::Dependence::CrossBlockDependent;
  spec.seed = 7;
  return pmax::dgp::generate(spec, pmax::dgp::AlternativeSpec::null(), n);
}

void BM_build_gram(benchmark::State& state) {
  const auto ds = make_data(state.range(0), 5, state.range(1));
  for (auto _ : state) {
    auto g = pmax::build_gram(ds);
    benchmark::DoNotOptimize(g.denom);
  }
}
BENCHMARK(BM_build_gram)->Args({250, 200})->Args({250, 1000});

void BM_fit_all(benchmark::State& state) {
  const auto ds = make_data(state.range(0), 5, state.range(1));
  const auto g = pmax::build_gram(ds);
  for (auto _ : state) {
    auto fs = pmax::fit_all(ds, g);
    benchmark::DoNotOptimize(fs.theta_hat);
  }
}
BENCHMARK(BM_fit_all)->Args({250, 200})->Args({250, 1000});

void BM_wild_bootstrap(benchmark::State& state) {
  const auto ds = make_data(100, 5, state.range(0));
  const auto g = pmax::build_gram(ds);
  const auto rf = pmax::fit_restricted(ds, g);
  const auto fs = pmax::fit_all(ds, g);
  const auto stat = pmax::max_statistic(fs, pmax::WeightMode::InvSE, ds.n());
  pmax::BootstrapSpec spec;
  spec.replicates = 100;
  spec.seed = 11;
  for (auto _ : state) {
    auto out = pmax::bootstrap_pvalue(ds, g, rf, fs, stat, spec);
    benchmark::DoNotOptimize(out.p_value);
  }
}
BENCHMARK(BM_wild_bootstrap)->Arg(200)->Arg(1000);

void BM_multiplier_bootstrap(benchmark::State& state) {
  const auto ds = make_data(100, 5, state.range(0));
  const auto g = pmax::build_gram(ds);
  const auto fs = pmax::fit_all(ds, g);
  const auto stat = pmax::max_statistic(fs, pmax::WeightMode::InvSE, ds.n());
  pmax::BootstrapSpec spec;
  spec.replicates = 100;
  spec.seed = 11;
  spec.mode = pmax::BootstrapMode::ScoreMultiplier;
  for (auto _ : state) {
    auto out = pmax::bootstrap_pvalue_multiplier(ds, g, fs, stat, spec);
    benchmark::DoNotOptimize(out.p_value);
  }
}
BENCHMARK(BM_multiplier_bootstrap)->Arg(200)->Arg(1000);

void BM_generate(benchmark::State& state) {
  pmax::dgp::CovariateSpec spec;
  spec.k_delta = 5;
  spec.k_theta = state.range(1);
  spec.dependence = pmax::dgp::Dependence::CrossBlockDependent;
  spec.seed = 7;
  for (auto _ : state) {
    auto ds = pmax::dgp::generate(spec, pmax::dgp::AlternativeSpec::null(), state.range(0));
    benchmark::DoNotOptimize(ds.y);
  }
}
BENCHMARK(BM_generate)->Args({250, 200})->Args({250, 500});

}  // namespace

BENCHMARK_MAIN();
