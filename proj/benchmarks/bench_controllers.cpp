#include <benchmark/benchmark.h>

#include "dwmpc/baselines.hpp"
#include "dwmpc/downwash.hpp"
#include "dwmpc/rng.hpp"

namespace {

using namespace dwmpc;

GpModel trained_gp() {
  Kernel k;
  k.signal_var = 0.0025;
  k.length_scales = Vec3{0.1, 0.1, 0.15};
  const DownwashTruthParams truth;
  ForceDataset d;
  Rng rng(7);
  for (int i = 0; i < 400; ++i) {
    const Vec3 x{rng.uniform(-0.45, 0.45), rng.uniform(-0.3, 0.3),
                 rng.uniform(0.12, 0.55)};
    d.append(x, true_force(x, truth).z() + rng.gaussian(0.0, 0.002));
  }
  return GpModel::fit(d, k, 4e-6);
}

struct Fixture {
  QuadrotorParams quad;
  MpcConfig cfg;
  GpModel gp = trained_gp();
  DroneState self;
  DroneState other;
  QuinticTrajectory ref;

  Fixture() {
    self.position = Vec3{0.0, 0.0, 0.5};
    other.position = Vec3{0.15, 0.0, 0.8};
    other.velocity = Vec3{-0.3, 0.0, 0.0};
    ref = QuinticTrajectory(self.position, Vec3{0.4, 0.0, 0.5}, 4.0);
  }
};

void step_loop(benchmark::State& state, Controller& ctrl, Fixture& f) {
  double t = 0.0;
  DroneState s = f.self;
  for (auto _ : state) {
    const auto d = ctrl.step(s, f.ref, t, f.other);
    benchmark::DoNotOptimize(d.input.motors);
    s = step_truth(s, d.input, Vec3::Zero(), f.cfg.dt, f.quad);
    t += f.cfg.dt;
    if (t > 3.5) {  // restart the pass so the wake stays in range
      t = 0.0;
      s = f.self;
      ctrl.reset();
    }
  }
}

void BM_PidStep(benchmark::State& state) {
  Fixture f;
  PidController ctrl(f.quad, PidGains{}, f.cfg.dt);
  step_loop(state, ctrl, f);
}
BENCHMARK(BM_PidStep);

void BM_LinMpcLinGpStep(benchmark::State& state) {
  Fixture f;
  DisturbanceModel dist;
  dist.gp = &f.gp;
  LinMpcController ctrl(f.quad, f.cfg, dist);
  step_loop(state, ctrl, f);
}
BENCHMARK(BM_LinMpcLinGpStep);

void BM_MpcLinGpStep(benchmark::State& state) {
  Fixture f;
  DisturbanceModel dist;
  dist.gp = &f.gp;
  SeqLinMpcController ctrl(f.quad, f.cfg, dist);
  step_loop(state, ctrl, f);
}
BENCHMARK(BM_MpcLinGpStep);

void BM_MpcFullGpStep(benchmark::State& state) {
  Fixture f;
  FullGpMpcController ctrl(f.quad, f.cfg, &f.gp);
  step_loop(state, ctrl, f);
}
BENCHMARK(BM_MpcFullGpStep);

}  // namespace

BENCHMARK_MAIN();
