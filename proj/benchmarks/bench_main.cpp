#include "hyperlr/hyperbolic_split.hpp"
#include "hyperlr/srb_response.hpp"
#include "hyperlr/symbolic_td.hpp"

#include <benchmark/benchmark.h>

using namespace hyperlr;

namespace {

const CatRoof kRoof{1.0, 0.3, 0.0};

VectorField bench_field() {
  return trig_window_field(kRoof, {{1, 1.0, 0, 1, -kTwoPi / 4}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
}

Vec start() {
  Vec p(3);
  p << 0.123, 0.456, 0.3;
  return p;
}

void BM_ExactOrbit(benchmark::State& state) {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_orbit(sys, start(), 100.0, 0.02));
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_ExactOrbit);

void BM_Rk4Orbit(benchmark::State& state) {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field()).with_parameter(0.02);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_orbit(sys, start(), 100.0, 0.02));
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_Rk4Orbit);

void BM_Clv(benchmark::State& state) {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof);
  const Trajectory tr = integrate_orbit(sys, start(), 200.0, 0.02);
  ClvOptions o;
  o.warmup = 30.0;
  for (auto _ : state) benchmark::DoNotOptimize(compute_clv(sys, tr, o));
}
BENCHMARK(BM_Clv);

void BM_PointFrame(benchmark::State& state) {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof);
  for (auto _ : state) benchmark::DoNotOptimize(frame_at(sys, start()));
}
BENCHMARK(BM_PointFrame);

void BM_ResponseKernel(benchmark::State& state) {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  const Observable A = trig_window_observable(kRoof, 1.0, 0, 1, 0.0, HeightWindow{4});
  KernelOptions k;
  k.T = 4.0;
  k.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(response_kernel(sys, A, bench_field(), k));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResponseKernel)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_BowenRoot(benchmark::State& state) {
  const SftSystem cat = cat_map_sft();
  const std::vector<double> phi{0.1, -0.2, 0.05, 0.3, -0.1};
  const std::vector<double> psi{0.9, 1.2, 1.0, 0.7, 1.4};
  for (auto _ : state) benchmark::DoNotOptimize(bowen_root(cat, phi, psi));
}
BENCHMARK(BM_BowenRoot);

void BM_ResonanceScan(benchmark::State& state) {
  const SftSystem full({{1, 1}, {1, 1}}, 1);
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> psi{1.0, 1.618033988749895};
  const double c = bowen_root(full, zero, psi);
  ScanStrip s;
  for (auto _ : state) benchmark::DoNotOptimize(resonance_scan(full, zero, psi, c, s));
}
BENCHMARK(BM_ResonanceScan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
