#include <benchmark/benchmark.h>

#include "dwmpc/gp.hpp"
#include "dwmpc/rng.hpp"

namespace {

using namespace dwmpc;

ForceDataset random_data(int n) {
  ForceDataset d;
  Rng rng(11);
  for (int i = 0; i < n; ++i)
    d.append(Vec3{rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3),
                  rng.uniform(0.1, 0.55)},
             rng.uniform(-0.15, 0.0));
  return d;
}

Kernel default_kernel() {
  Kernel k;
  k.signal_var = 0.0025;
  k.length_scales = Vec3{0.1, 0.1, 0.15};
  return k;
}

void BM_GpFit(benchmark::State& state) {
  const ForceDataset d = random_data(static_cast<int>(state.range(0)));
  const Kernel k = default_kernel();
  for (auto _ : state) {
    GpModel gp = GpModel::fit(d, k, 4e-6);
    benchmark::DoNotOptimize(gp.weights());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->Arg(100)->Arg(200)->Arg(400)->Arg(800)->Complexity();

void BM_GpPredictMean(benchmark::State& state) {
  const GpModel gp =
      GpModel::fit(random_data(static_cast<int>(state.range(0))),
                   default_kernel(), 4e-6);
  Rng rng(3);
  for (auto _ : state) {
    const Vec3 x{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                 rng.uniform(0.15, 0.5)};
    benchmark::DoNotOptimize(gp.predict_mean(x));
  }
}
BENCHMARK(BM_GpPredictMean)->Arg(200)->Arg(800);

void BM_GpLinearize(benchmark::State& state) {
  const GpModel gp =
      GpModel::fit(random_data(static_cast<int>(state.range(0))),
                   default_kernel(), 4e-6);
  Rng rng(5);
  for (auto _ : state) {
    const Vec3 x{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                 rng.uniform(0.15, 0.5)};
    benchmark::DoNotOptimize(gp.linearize(x).gradient);
  }
}
BENCHMARK(BM_GpLinearize)->Arg(200)->Arg(800);

}  // namespace

BENCHMARK_MAIN();
