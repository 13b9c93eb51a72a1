// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "redmap/problems.hpp"
#include "redmap/propcheck.hpp"
#include "redmap/spectral.hpp"

using namespace redmap;

namespace {

Region region(int n1, int samples) {
  Region r;
  r.center = Vec::Zero(n1);
  r.radius = 1.0;
  r.samples = samples;
  r.seed = 1;
  return r;
}

void scan(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const ProblemSpec spec = make_highdim_tanh(n, 10.0, 1.0, 42);
  const ReducedProblem p = spec.reduced("tanh");
  const Region r = region(n, 64);
  for (auto _ : state) benchmark::DoNotOptimize(scan_region(p, r, kDefaultMultTol, exec));
  state.SetItemsProcessed(state.iterations() * r.samples);
}

void BM_ScanSerial(benchmark::State& state) { scan(state, Exec::Serial); }
void BM_ScanParallel(benchmark::State& state) { scan(state, Exec::Parallel); }

void propcheck(benchmark::State& state, bool parallel) {
  PropOptions opts;
  opts.seed = 11;
  opts.count = static_cast<int>(state.range(0));
  opts.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(run_propcheck(opts));
  state.SetItemsProcessed(state.iterations() * opts.count * static_cast<int64_t>(all_families().size()));
}

void BM_PropcheckSerial(benchmark::State& state) { propcheck(state, false); }
void BM_PropcheckParallel(benchmark::State& state) { propcheck(state, true); }

}  // namespace

BENCHMARK(BM_ScanSerial)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScanParallel)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PropcheckSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PropcheckParallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
