// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/engine.hpp"
#include "bbmlab/experiments.hpp"
#include "bbmlab/fkpp.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/pointproc.hpp"

namespace {

using namespace bbmlab;

double run_replica(std::size_t r) {
  SimConfig sim;
  sim.horizon = 6.0;
  sim.prune_gap = 8.0;
  sim.seed = 1;
  return max_displacement(simulate(sim, BranchingLaw::binary(), r).final_snapshot());
}

void BM_ReplicasParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(map_replicas(64, run_replica, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ReplicasParallel)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_ReplicasSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(map_replicas_serial(64, run_replica));
}
BENCHMARK(BM_ReplicasSerial)->Unit(benchmark::kMillisecond);

std::vector<double> front_v() {
  const Grid g{-40.0, 160.0, 0.02, 0.01, Frame::comoving};
  return heaviside_fields(g, {5.0}, Convention::v).back().values;
}

void BM_React(benchmark::State& state) {
  auto v = front_v();
  for (auto _ : state) {
    react(v, BranchingLaw::binary(), 0.005, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_React)->Arg(0)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_ReactSerial(benchmark::State& state) {
  auto v = front_v();
  for (auto _ : state) {
    react_serial(v, BranchingLaw::binary(), 0.005);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_ReactSerial)->Unit(benchmark::kMicrosecond);

const std::vector<PointConfiguration>& configs() {
  static const auto c = sample_extremal(6.0, 2000, 3, 8.0, 0);
  return c;
}

void BM_LaplacePanel(benchmark::State& state) {
  const auto panel = default_panel();
  const auto& c = configs();
  for (auto _ : state) benchmark::DoNotOptimize(laplace_panel(c, panel, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_LaplacePanel)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_LaplacePanelSerial(benchmark::State& state) {
  const auto panel = default_panel();
  const auto& c = configs();
  for (auto _ : state) benchmark::DoNotOptimize(laplace_panel_serial(c, panel));
}
BENCHMARK(BM_LaplacePanelSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
