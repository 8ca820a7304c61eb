#include <benchmark/benchmark.h>

#include "intrahost/integrate.hpp"
#include "intrahost/lyapunov.hpp"
#include "intrahost/outcome.hpp"

namespace {

using namespace intrahost;

ModelSpec bench_spec(int k, int n) {
  ModelSpec spec;
  spec.k = k;
  spec.n = n;
  spec.u = 1.0;
  spec.recruitment = RecruitmentModel::constant(1.0, 0.1);
  for (int i = 0; i < n; ++i) {
    StrainParams sp;
    sp.beta = 0.2 / (1.0 + i);
    sp.r = 16.0;
    sp.gammas.assign(k, 0.5);
    sp.alphas.assign(k, 0.5);
    sp.mu_m = 10.0;
    sp.delta = 0.2;
    sp.mu_g = 0.1;
    spec.strains.push_back(std::move(sp));
  }
  return spec;
}

void BM_VectorField(benchmark::State& state) {
  const ModelSpec spec = bench_spec(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(1)));
  std::vector<double> flat = pack(inoculated_dfe(spec));
  std::vector<double> deriv(flat.size());
  for (auto _ : state) {
    vector_field(spec, flat, deriv);
    benchmark::DoNotOptimize(deriv.data());
  }
}
BENCHMARK(BM_VectorField)->Args({1, 1})->Args({5, 3})->Args({10, 5});

void BM_ThresholdReport(benchmark::State& state) {
  const ModelSpec spec = bench_spec(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) {
    const ThresholdReport report = threshold_report(spec);
    benchmark::DoNotOptimize(report.r0);
  }
}
BENCHMARK(BM_ThresholdReport)->Arg(1)->Arg(5)->Arg(10);

void BM_Certificate(benchmark::State& state) {
  const ModelSpec spec = bench_spec(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    const LyapunovCertificate cert = certificate(spec, 0);
    benchmark::DoNotOptimize(cert.a);
  }
}
BENCHMARK(BM_Certificate)->Arg(1)->Arg(10);

void BM_Integrate(benchmark::State& state) {
  const ModelSpec spec = bench_spec(1, 1);
  IntegratorOptions opts;
  opts.t_end = 2000.0;
  opts.samples = 200;
  SystemState init = dfe(spec);
  init.strains[0].m = 0.01;
  for (auto _ : state) {
    const Trajectory traj = integrate(spec, init, opts);
    benchmark::DoNotOptimize(traj.terminal_state().data());
  }
}
BENCHMARK(BM_Integrate);

void BM_Predict(benchmark::State& state) {
  const ModelSpec spec = bench_spec(3, 2);
  for (auto _ : state) {
    const OutcomePrediction pred = predict(spec);
    benchmark::DoNotOptimize(pred.r0);
  }
}
BENCHMARK(BM_Predict);

}  // namespace

BENCHMARK_MAIN();
