#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Dense>

#include "fincon/blockmodel.hpp"
#include "fincon/fsv.hpp"
#include "fincon/pvar.hpp"
#include "fincon/rng.hpp"
#include "fincon/samplers.hpp"
#include "fincon/spillover.hpp"

using namespace fincon;

namespace {

Eigen::MatrixXd random_panel(int t, int k, RngHandle& rng) {
  Eigen::MatrixXd y(t, k);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < t; ++i) {
    const double f = rng.normal();
    for (int j = 0; j < k; ++j) y(i, j) = 0.5 * prev[j] + 0.7 * f + 0.5 * rng.normal();
    prev = y.row(i).transpose();
  }
  return y;
}

void BM_Gfevd(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int horizon = static_cast<int>(state.range(1));
  RngHandle rng(1);
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(k, 1 + 2 * k);
  for (Eigen::Index i = 0; i < system.rows(); ++i) {
    for (Eigen::Index j = 1; j < system.cols(); ++j) system(i, j) = 0.3 * rng.normal() / k;
  }
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  const Eigen::MatrixXd sigma = a * a.transpose() + Eigen::MatrixXd::Identity(k, k);
  for (auto _ : state) {
    const auto ma = ma_coefficients(system, 2, horizon);
    benchmark::DoNotOptimize(gfevd(ma, sigma, horizon));
  }
}
BENCHMARK(BM_Gfevd)->Args({4, 1})->Args({4, 12})->Args({12, 12});

void BM_GibbsSweep(benchmark::State& state) {
  const int countries = static_cast<int>(state.range(0));
  RngHandle rng(2);
  const PvarDesign design = build_design(random_panel(200, countries, rng), countries, 1, 1);
  PvarConfig config;
  config.lags = 1;
  PvarState s = init_pvar_state(design, config);
  for (auto _ : state) {
    s = gibbs_sweep(std::move(s), design, config, rng);
    benchmark::DoNotOptimize(s.intensity);
  }
}
BENCHMARK(BM_GibbsSweep)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_FsvUpdate(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  RngHandle rng(3);
  const Eigen::MatrixXd resid = random_panel(200, k, rng);
  FsvState s = init_fsv_state(resid, 1);
  const FsvPriors priors;
  for (auto _ : state) {
    s = fsv_update(resid, std::move(s), priors, rng);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_FsvUpdate)->Arg(4)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_FitBlockmodel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngHandle rng(4);
  ValuedNetwork net;
  net.weights.resize(n, n);
  for (Eigen::Index i = 0; i < net.weights.size(); ++i) net.weights.data()[i] = rng.uniform();
  net.weights.diagonal().setZero();
  net.labels.assign(n, "c");
  for (auto _ : state) {
    RngHandle fit_rng(5);
    benchmark::DoNotOptimize(fit_blockmodel(net, 4, 100, fit_rng));
  }
}
BENCHMARK(BM_FitBlockmodel)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_SampleGig(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 10.0;
  RngHandle rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(sample_gig(p, 2.0, 0.5, rng));
}
BENCHMARK(BM_SampleGig)->Arg(-25)->Arg(5)->Arg(30);

}  // namespace

BENCHMARK_MAIN();
