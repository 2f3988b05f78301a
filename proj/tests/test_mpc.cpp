#include "dwmpc/mpc.hpp"

#include "dwmpc/downwash.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "dwmpc/rng.hpp"
#include "oracles.hpp"

using namespace dwmpc;

namespace {

Mat12 random_stable_a(Rng& rng, double spectral_target = 0.95) {
  Mat12 a;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) a(i, j) = 0.3 * rng.gaussian();
  const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 1e-9) a *= spectral_target / radius;
  return a;
}

Mat12x4 random_b(Rng& rng) {
  Mat12x4 b;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = 0.3 * rng.gaussian();
  return b;
}

CostSpec random_cost(Rng& rng, int horizon) {
  Mat12 m;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) m(i, j) = rng.gaussian();
  CostSpec c;
  c.Q = m * m.transpose() / 12.0 + 0.1 * Mat12::Identity();
  c.Qf = 2.0 * c.Q;
  Mat4 r4;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r4(i, j) = rng.gaussian();
  c.R = r4 * r4.transpose() / 4.0 + 0.2 * Mat4::Identity();
  c.horizon = horizon;
  return c;
}

BoxConstraints loose_boxes() {
  BoxConstraints b;
  b.x_max = Vec12::Constant(1e5);
  b.x_min = -b.x_max;
  b.u_max = Vec4::Constant(1e5);
  b.u_min = -b.u_max;
  return b;
}

double trajectory_cost(const CostSpec& cost, const Vec12& x0,
                       const std::vector<Vec12>& refs,
                       const std::vector<Vec12>& offsets, const Mat12& a,
                       const Mat12x4& b, const std::vector<Vec4>& inputs) {
  const int n = cost.horizon;
  double j = 0.0;
  Vec12 x = x0;
  for (int k = 0; k < n; ++k) {
    x = a * x + b * inputs[k] +
        (offsets.empty() ? Vec12::Zero().eval() : offsets[k]);
    const Mat12& qk = (k == n - 1) ? cost.Qf : cost.Q;
    j += (x - refs[k]).dot(qk * (x - refs[k])) + inputs[k].dot(cost.R * inputs[k]);
  }
  return j;
}

}  // namespace

TEST(Riccati, OneStepClosedForm) {
  Rng rng(2);
  const Mat12 a = random_stable_a(rng);
  const Mat12x4 b = random_b(rng);
  CostSpec cost = random_cost(rng, 1);
  const RiccatiSolution sol = riccati_lqr(a, b, cost);
  const Mat4 quu = cost.R + b.transpose() * cost.Qf * b;
  const Mat4x12 k_expected = quu.llt().solve(b.transpose() * cost.Qf * a);
  EXPECT_LT((sol.gains[0] - k_expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Riccati, ZeroLinearTermsGiveZeroFeedforward) {
  Rng rng(3);
  const Mat12 a = random_stable_a(rng);
  const Mat12x4 b = random_b(rng);
  const CostSpec cost = random_cost(rng, 10);
  const RiccatiSolution sol = riccati_lqr(a, b, cost);
  for (const auto& d : sol.feedforward)
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Riccati, CostToGoSymmetricPsd) {
  Rng rng(4);
  const Mat12 a = random_stable_a(rng);
  const Mat12x4 b = random_b(rng);
  const CostSpec cost = random_cost(rng, 12);
  const RiccatiSolution sol = riccati_lqr(a, b, cost);
  for (int k = 1; k <= cost.horizon; ++k) {
    const Mat12& p = sol.cost_to_go[k];
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat12> es(p);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Riccati, MatchesUnconstrainedQpOnRandomSystems) {
  Rng rng(7);
  QpSettings settings;
  settings.tol = 1e-9;
  settings.max_iters = 20000;
  for (int trial = 0; trial < 8; ++trial) {
    const Mat12 a = random_stable_a(rng);
    const Mat12x4 b = random_b(rng);
    const CostSpec cost = random_cost(rng, 15);
    const int n = cost.horizon;

    Vec12 x0;
    for (int i = 0; i < 12; ++i) x0(i) = rng.gaussian();
    std::vector<Vec12> refs(n), offsets(n);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < 12; ++i) {
        refs[k](i) = 0.5 * rng.gaussian();
        offsets[k](i) = 0.05 * rng.gaussian();
      }
    }

    // Route 1: backward recursion with linear terms q_k = -Q_k r_k.
    std::vector<Vec12> state_lin(n);
    for (int k = 0; k < n; ++k)
      state_lin[k] = (k == n - 1) ? Vec12(-cost.Qf * refs[k])
                                  : Vec12(-cost.Q * refs[k]);
    const RiccatiSolution lqr = riccati_lqr(a, b, cost, state_lin, {}, offsets);
    std::vector<Vec4> u_lqr(n);
    Vec12 x = x0;
    for (int k = 0; k < n; ++k) {
      u_lqr[k] = lqr.input(k, x);
      x = a * x + b * u_lqr[k] + offsets[k];
    }

    // Route 2: condensed QP with loose boxes through the ADMM path.
    std::vector<PredictionStep> steps(n);
    for (int k = 0; k < n; ++k) steps[k] = PredictionStep{a, b, offsets[k]};
    const CondensedBuild build = build_condensed_general(
        steps, Mat12x3::Zero(), cost, loose_boxes(), x0, refs, {}, {});
    QpSolution sol = solve_qp(build.qp, nullptr, settings);
    ASSERT_TRUE(sol.stats.converged) << "trial " << trial;

    double max_diff = 0.0;
    for (int k = 0; k < n; ++k)
      max_diff = std::max(
          max_diff,
          (sol.primal.segment<4>(4 * k) - u_lqr[k]).cwiseAbs().maxCoeff());
    EXPECT_LE(max_diff, 1e-5) << "trial " << trial;

    // Both routes must agree on achieved cost as well.
    std::vector<Vec4> u_qp(n);
    for (int k = 0; k < n; ++k) u_qp[k] = sol.primal.segment<4>(4 * k);
    const double j_lqr = trajectory_cost(cost, x0, refs, offsets, a, b, u_lqr);
    const double j_qp = trajectory_cost(cost, x0, refs, offsets, a, b, u_qp);
    EXPECT_NEAR(j_lqr, j_qp, 1e-6 * std::max(1.0, std::abs(j_qp)));
  }
}

TEST(PredictRelativeStack, ZeroVelocityHoldsPosition) {
  const Vec3 d0{0.1, -0.2, 0.35};
  const auto stack = predict_relative_stack(d0, Vec3::Zero(), 8, 0.02);
  ASSERT_EQ(stack.size(), 8u);
  for (const auto& d : stack) EXPECT_EQ((d - d0).norm(), 0.0);
}

TEST(PredictRelativeStack, ConstantVelocityArithmetic) {
  const Vec3 d0{0.0, 0.0, 0.3};
  const Vec3 v{1.0, 0.0, 0.0};
  const auto stack = predict_relative_stack(d0, v, 5, 0.1);
  EXPECT_NEAR(stack[3].x(), 0.3, 1e-15);
  EXPECT_NEAR(stack[3].z(), 0.3, 1e-15);
}

TEST(BuildCondensed, TwoStepScalarToyMatchesHandAlgebra) {
  // Scalar system A = 1, B = 1 embedded in the first state/input slot.
  CostSpec cost;
  const double qw = 3.0, qfw = 5.0, rw = 0.7;
  cost.Q = Mat12::Zero();
  cost.Q(0, 0) = qw;
  cost.Qf = Mat12::Zero();
  cost.Qf(0, 0) = qfw;
  cost.R = rw * Mat4::Identity();
  cost.horizon = 2;

  DiscreteLinearModel model;
  model.A = Mat12::Zero();
  model.A(0, 0) = 1.0;
  model.B = Mat12x4::Zero();
  model.B(0, 0) = 1.0;
  model.dt = 0.1;

  const double x = 0.8, r1 = 0.2, r2 = -0.4;
  Vec12 x0 = Vec12::Zero();
  x0(0) = x;
  std::vector<Vec12> refs(2, Vec12::Zero());
  refs[0](0) = r1;
  refs[1](0) = r2;

  const CondensedBuild build =
      build_condensed(model, cost, loose_boxes(), x0, refs, {});

  // J = qw (x + u00 - r1)^2 + qfw (x + u00 + u10 - r2)^2 + rw |u|^2.
  EXPECT_NEAR(build.qp.P(0, 0), 2.0 * (qw + qfw + rw), 1e-12);
  EXPECT_NEAR(build.qp.P(0, 4), 2.0 * qfw, 1e-12);
  EXPECT_NEAR(build.qp.P(4, 0), 2.0 * qfw, 1e-12);
  EXPECT_NEAR(build.qp.P(4, 4), 2.0 * (qfw + rw), 1e-12);
  EXPECT_NEAR(build.qp.P(1, 1), 2.0 * rw, 1e-12);
  EXPECT_NEAR(build.qp.q(0), 2.0 * (qw * (x - r1) + qfw * (x - r2)), 1e-12);
  EXPECT_NEAR(build.qp.q(4), 2.0 * qfw * (x - r2), 1e-12);
  EXPECT_NEAR(build.qp.q(1), 0.0, 1e-15);
}

TEST(BuildCondensed, ZeroDisturbanceStackMatchesDisturbanceFree) {
  const QuadrotorParams quad;
  const DiscreteLinearModel model = linearize_hover(quad, 0.02);
  MpcConfig cfg;
  const CostSpec cost = cfg.cost_spec(model.A, model.B);
  const BoxConstraints boxes = cfg.deviation_boxes(quad);

  Rng rng(9);
  Vec12 x0;
  for (int i = 0; i < 12; ++i) x0(i) = 0.02 * rng.gaussian();
  std::vector<Vec12> refs(cost.horizon, Vec12::Zero());
  const std::vector<double> zeros(cost.horizon, 0.0);

  const CondensedBuild with_zero =
      build_condensed(model, cost, boxes, x0, refs, zeros);
  const CondensedBuild without =
      build_condensed(model, cost, boxes, x0, refs, {});
  EXPECT_EQ((with_zero.qp.P - without.qp.P).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((with_zero.qp.q - without.qp.q).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((with_zero.qp.b - without.qp.b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildCondensed, HessianSymmetricPositiveDefinite) {
  const QuadrotorParams quad;
  const DiscreteLinearModel model = linearize_hover(quad, 0.02);
  MpcConfig cfg;
  const CostSpec cost = cfg.cost_spec(model.A, model.B);
  const BoxConstraints boxes = cfg.deviation_boxes(quad);
  const std::vector<Vec12> refs(cost.horizon, Vec12::Zero());

  const CondensedBuild build =
      build_condensed(model, cost, boxes, Vec12::Zero(), refs, {});
  EXPECT_LT((build.qp.P - build.qp.P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::LLT<Eigen::MatrixXd> llt(build.qp.P);
  EXPECT_EQ(llt.info(), Eigen::Success);

  // P - 2 lambda_min(R) I must stay PSD.
  Eigen::MatrixXd shifted = build.qp.P;
  shifted.diagonal().array() -= 2.0 * 0.1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
}

TEST(BuildCondensed, InactiveConstraintsAtLooseOptimum) {
  const QuadrotorParams quad;
  const DiscreteLinearModel model = linearize_hover(quad, 0.02);
  MpcConfig cfg;
  const CostSpec cost = cfg.cost_spec(model.A, model.B);
  Rng rng(10);
  Vec12 x0;
  for (int i = 0; i < 12; ++i) x0(i) = 0.01 * rng.gaussian();
  const std::vector<Vec12> refs(cost.horizon, Vec12::Zero());
  const CondensedBuild build =
      build_condensed(model, cost, loose_boxes(), x0, refs, {});

  QpSettings settings;
  settings.tol = 1e-8;
  settings.max_iters = 10000;
  const QpSolution sol = solve_qp(build.qp, nullptr, settings);
  ASSERT_TRUE(sol.stats.converged);
  EXPECT_LT((build.qp.H * sol.primal - build.qp.b).maxCoeff(), -1.0);
}

TEST(LinMpc, NoOtherDroneReducesToPlainTracking) {
  const QuadrotorParams quad;
  MpcConfig cfg;

  Kernel kernel;
  kernel.signal_var = 0.0025;
  ForceDataset data;
  data.append(Vec3{0.0, 0.0, 0.3}, -0.08);
  data.append(Vec3{0.1, 0.0, 0.3}, -0.05);
  data.append(Vec3{0.0, 0.1, 0.4}, -0.03);
  const GpModel gp = GpModel::fit(data, kernel, 1e-4);

  DisturbanceModel with_gp;
  with_gp.gp = &gp;
  LinMpcController ctrl_gp(quad, cfg, with_gp);
  LinMpcController ctrl_plain(quad, cfg, DisturbanceModel{});

  DroneState s;
  s.position = Vec3{0.1, 0.0, 0.5};
  const QuinticTrajectory ref(s.position, Vec3{-0.2, 0.1, 0.6}, 4.0);
  const auto d1 = ctrl_gp.step(s, ref, 0.0, std::nullopt);
  const auto d2 = ctrl_plain.step(s, ref, 0.0, std::nullopt);
  EXPECT_EQ((d1.input.motors - d2.input.motors).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d1.predicted_fz, 0.0);
}

TEST(LinMpc, FeedforwardCancelsConstantDisturbance) {
  // Exact affine disturbance model supplied; steady-state z error must
  // vanish without integral action.
  const QuadrotorParams quad;
  MpcConfig cfg;
  const double fz = -0.06;

  DisturbanceModel dist;
  LinGpModel affine;
  affine.gradient = RowVec3::Zero();
  affine.offset = fz;
  dist.fixed_affine = affine;
  LinMpcController ctrl(quad, cfg, dist);

  DroneState drone;
  drone.position = Vec3{0.0, 0.0, 0.5};
  DroneState other;  // static drone overhead activates the channel
  other.position = Vec3{0.0, 0.0, 0.8};
  const QuinticTrajectory hover_ref(drone.position, drone.position, 1.0);

  double t = 0.0;
  double err_after_2s = 0.0;
  while (t < 3.0 - 1e-9) {
    const auto d = ctrl.step(drone, hover_ref, t, other);
    drone = step_truth(drone, d.input, Vec3{0.0, 0.0, fz}, cfg.dt, quad);
    t += cfg.dt;
    if (t >= 2.0)
      err_after_2s =
          std::max(err_after_2s, std::abs(drone.position.z() - 0.5));
  }
  EXPECT_LT(err_after_2s, 1e-3);
}

TEST(PredictRelativeStack, TracksSimulatedSwapWithinTwoCentimeters) {
  // Constant-relative-velocity propagation against the integrated truth
  // over ten steps of a straight-line swap.
  const QuadrotorParams quad;
  MpcConfig cfg;
  const double dt = cfg.dt;
  const QuinticTrajectory upper_ref(Vec3{-0.5, 0, 0.9}, Vec3{0.5, 0, 0.9}, 6.0);
  const QuinticTrajectory lower_ref(Vec3{0.5, 0, 0.5}, Vec3{-0.5, 0, 0.5}, 6.0);
  LinMpcController upper(quad, cfg, DisturbanceModel{});
  LinMpcController lower(quad, cfg, DisturbanceModel{});

  DroneState a, b;
  a.position = upper_ref.position(0.0);
  b.position = lower_ref.position(0.0);
  std::vector<Vec3> rel_history;
  for (int i = 0; i < 300; ++i) {
    rel_history.push_back(a.position - b.position);
    const auto da = upper.step(a, upper_ref, i * dt, b);
    const auto db = lower.step(b, lower_ref, i * dt, a);
    a = step_truth(a, da.input, Vec3::Zero(), dt, quad);
    b = step_truth(b, db.input, Vec3::Zero(), dt, quad);
  }

  // Check mid-swap where relative speed peaks.
  for (int start : {100, 140, 150, 180}) {
    const Vec3 rel_pos = rel_history[start];
    const Vec3 rel_vel =
        (rel_history[start] - rel_history[start - 1]) / dt;
    const auto stack = predict_relative_stack(rel_pos, rel_vel, 10, dt);
    for (int k = 0; k < 10; ++k)
      EXPECT_LT((stack[k] - rel_history[start + k]).norm(), 0.02)
          << "start " << start << " k " << k;
  }
}

TEST(LinMpc, TrainedGpBeatsNoGpUnderSteadyDownwash) {
  // Hover under a stationary upper drone: the GP-equipped controller has
  // to reject the wake at least five times better at steady state.
  const QuadrotorParams quad;
  const DownwashTruthParams field;
  MpcConfig cfg;

  Kernel kernel;
  kernel.signal_var = 0.0025;
  kernel.length_scales = Vec3{0.1, 0.1, 0.15};
  ForceDataset data;
  Rng rng(3);
  for (int i = 0; i < 120; ++i) {
    const Vec3 x{rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15),
                 rng.uniform(0.2, 0.4)};
    data.append(x, true_force(x, field).z() + rng.gaussian(0.0, 0.002));
  }
  const GpModel gp = GpModel::fit(data, kernel, 4e-6);

  DroneState other;
  other.position = Vec3{0.0, 0.0, 0.8};
  const auto steady_error = [&](DisturbanceModel dist) {
    LinMpcController ctrl(quad, cfg, std::move(dist));
    DroneState drone;
    drone.position = Vec3{0.0, 0.0, 0.5};
    const QuinticTrajectory ref(drone.position, drone.position, 1.0);
    double worst = 0.0;
    for (double t = 0.0; t < 4.0 - 1e-9; t += cfg.dt) {
      const auto d = ctrl.step(drone, ref, t, other);
      const Vec3 f = true_force(other.position - drone.position, field);
      drone = step_truth(drone, d.input, f, cfg.dt, quad);
      if (t >= 2.0) worst = std::max(worst, std::abs(drone.position.z() - 0.5));
    }
    return worst;
  };

  DisturbanceModel with_gp;
  with_gp.gp = &gp;
  const double err_gp = steady_error(with_gp);
  const double err_plain = steady_error(DisturbanceModel{});
  EXPECT_GE(err_plain, 5.0 * err_gp);
}

TEST(LinMpc, StepConvergesAndRespectsBounds) {
  const QuadrotorParams quad;
  MpcConfig cfg;
  LinMpcController ctrl(quad, cfg, DisturbanceModel{});
  DroneState s;
  s.position = Vec3{0.3, -0.3, 0.4};
  s.velocity = Vec3{0.5, 0.2, -0.1};
  const QuinticTrajectory ref(s.position, Vec3{-0.3, 0.3, 0.8}, 3.0);
  for (int i = 0; i < 50; ++i) {
    const auto d = ctrl.step(s, ref, i * cfg.dt, std::nullopt);
    EXPECT_TRUE(d.stats.converged);
    EXPECT_GE(d.input.motors.minCoeff(), quad.motor_min);
    EXPECT_LE(d.input.motors.maxCoeff(), quad.motor_max);
    s = step_truth(s, d.input, Vec3::Zero(), cfg.dt, quad);
  }
  // The closed loop should be making clear progress toward the reference.
  EXPECT_LT((s.position - ref.position(50 * cfg.dt)).norm(), 0.08);
}
