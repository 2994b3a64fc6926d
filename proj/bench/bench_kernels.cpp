// SPDX-License-Identifier: Apache-2.0
// Serial reference kernel against the OpenMP kernel on a silver-wire scene.

#include <benchmark/benchmark.h>

#include "agwire/solver.hpp"
#include "agwire/sweeps.hpp"

namespace {

using namespace agwire;

void run_steps(benchmark::State& state, KernelVariant variant) {
  SceneParams p;
  p.kept_length_nm = 100.0;
  const Scene scene = build_scene(p);
  const GridSpec grid = make_grid(scene.bounding_box, 5.0);
  SolverSettings settings;
  settings.kernel = variant;
  settings.threads = static_cast<int>(state.range(0));
  Simulation sim(scene, grid, DipoleSource{}, settings);
  for (auto _ : state) sim.step();
  const double cells = double(grid.cells[0]) * grid.cells[1] * grid.cells[2];
  state.counters["cell_updates/s"] = benchmark::Counter(cells * state.iterations(), benchmark::Counter::kIsRate);
}

void BM_serial(benchmark::State& state) { run_steps(state, KernelVariant::Serial); }
void BM_parallel(benchmark::State& state) { run_steps(state, KernelVariant::Parallel); }

BENCHMARK(BM_serial)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
