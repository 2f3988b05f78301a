#include <benchmark/benchmark.h>

#include "dwmpc/dynamics.hpp"
#include "dwmpc/mpc.hpp"
#include "dwmpc/rng.hpp"

namespace {

using namespace dwmpc;

struct MpcProblem {
  DiscreteLinearModel model;
  CostSpec cost;
  BoxConstraints boxes;
  CondensedBuild build;

  MpcProblem() {
    const QuadrotorParams quad;
    MpcConfig cfg;
    model = linearize_hover(quad, cfg.dt);
    cost = cfg.cost_spec(model.A, model.B);
    boxes = cfg.deviation_boxes(quad);
    Vec12 x0 = Vec12::Zero();
    x0(2) = 0.05;
    x0(6) = 0.2;
    std::vector<Vec12> refs(cost.horizon, Vec12::Zero());
    build = build_condensed(model, cost, boxes, x0, refs, {});
  }
};

void BM_CondensedBuild(benchmark::State& state) {
  MpcProblem p;
  Vec12 x0 = Vec12::Zero();
  x0(6) = 0.3;
  const std::vector<Vec12> refs(p.cost.horizon, Vec12::Zero());
  for (auto _ : state) {
    CondensedBuild b =
        build_condensed(p.model, p.cost, p.boxes, x0, refs, {});
    benchmark::DoNotOptimize(b.qp.P);
  }
}
BENCHMARK(BM_CondensedBuild);

void BM_AdmmColdSolve(benchmark::State& state) {
  MpcProblem p;
  AdmmQpSolver solver;
  solver.setup(p.build.qp.P, p.build.qp.H, 1.0);
  for (auto _ : state) {
    QpSolution sol =
        solver.solve(p.build.qp.q, p.build.qp.b, nullptr, 500, 1e-5);
    benchmark::DoNotOptimize(sol.primal);
  }
}
BENCHMARK(BM_AdmmColdSolve);

void BM_AdmmWarmSolve(benchmark::State& state) {
  MpcProblem p;
  AdmmQpSolver solver;
  solver.setup(p.build.qp.P, p.build.qp.H, 1.0);
  const QpSolution warm =
      solver.solve(p.build.qp.q, p.build.qp.b, nullptr, 500, 1e-5);
  for (auto _ : state) {
    QpSolution sol =
        solver.solve(p.build.qp.q, p.build.qp.b, &warm, 500, 1e-5);
    benchmark::DoNotOptimize(sol.primal);
  }
}
BENCHMARK(BM_AdmmWarmSolve);

void BM_AdmmSetup(benchmark::State& state) {
  MpcProblem p;
  for (auto _ : state) {
    AdmmQpSolver solver;
    solver.setup(p.build.qp.P, p.build.qp.H, 1.0);
    benchmark::DoNotOptimize(solver.current_rho());
  }
}
BENCHMARK(BM_AdmmSetup);

}  // namespace

BENCHMARK_MAIN();
