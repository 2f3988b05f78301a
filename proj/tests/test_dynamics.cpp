#include "dwmpc/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dwmpc/rng.hpp"
#include "oracles.hpp"

using namespace dwmpc;

namespace {

QuadrotorParams default_params() { return QuadrotorParams{}; }

ControlInput hover_input(const QuadrotorParams& p) {
  ControlInput u;
  u.motors = p.hover_input();
  return u;
}

// Independent RK4 used as the reference flow; accepts negative steps.
Vec12 reference_flow(const Vec12& x0, const ControlInput& u, const Vec3& f_ext,
                     double t, const QuadrotorParams& p, int substeps) {
  Vec12 x = x0;
  const double h = t / substeps;
  for (int i = 0; i < substeps; ++i) {
    const auto f = [&](const Vec12& s) {
      return nonlinear_derivative(DroneState::from_vec(s), u, f_ext,
                                  Vec3::Zero(), p);
    };
    const Vec12 k1 = f(x);
    const Vec12 k2 = f(x + 0.5 * h * k1);
    const Vec12 k3 = f(x + 0.5 * h * k2);
    const Vec12 k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace

TEST(MotorToWrench, HoverEquilibrium) {
  const auto p = default_params();
  const Wrench w = motor_to_wrench(hover_input(p), p);
  EXPECT_NEAR(w.thrust, p.mass * p.gravity, 1e-12);
  EXPECT_NEAR(w.torque.norm(), 0.0, 1e-12);
}

TEST(MotorToWrench, ZeroInput) {
  const auto p = default_params();
  ControlInput u;
  const Wrench w = motor_to_wrench(u, p);
  EXPECT_EQ(w.thrust, 0.0);
  EXPECT_EQ(w.torque.norm(), 0.0);
}

TEST(MotorToWrench, UniformOffsetMatchesMixingOracle) {
  const auto p = default_params();
  const double delta = 0.07;
  ControlInput u = hover_input(p);
  u.motors.array() += delta;
  const Wrench w = motor_to_wrench(u, p);
  EXPECT_NEAR(w.thrust, p.mass * p.gravity + 4.0 * p.thrust_coeff * delta, 1e-12);
  EXPECT_NEAR(w.torque.norm(), 0.0, 1e-12);

  // Explicit mixing-matrix multiplication, written out by hand.
  const double kt = p.thrust_coeff, km = p.torque_coeff;
  const double d = p.arm_length / std::numbers::sqrt2;
  const Vec4& m = u.motors;
  EXPECT_DOUBLE_EQ(w.thrust, kt * (m(0) + m(1) + m(2) + m(3)));
  EXPECT_DOUBLE_EQ(w.torque.x(), kt * d * (-m(0) - m(1) + m(2) + m(3)));
  EXPECT_DOUBLE_EQ(w.torque.y(), kt * d * (-m(0) + m(1) + m(2) - m(3)));
  EXPECT_DOUBLE_EQ(w.torque.z(), km * (-m(0) + m(1) - m(2) + m(3)));
}

TEST(MotorToWrench, ExactLinearity) {
  const auto p = default_params();
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    ControlInput u1, u2;
    for (int i = 0; i < 4; ++i) {
      u1.motors(i) = rng.uniform(0.0, 1.0);
      u2.motors(i) = rng.uniform(0.0, 1.0);
    }
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    ControlInput combo;
    combo.motors = a * u1.motors + b * u2.motors;
    const Wrench wc = motor_to_wrench(combo, p);
    const Wrench w1 = motor_to_wrench(u1, p);
    const Wrench w2 = motor_to_wrench(u2, p);
    EXPECT_NEAR(wc.thrust, a * w1.thrust + b * w2.thrust, 1e-12);
    EXPECT_LT((wc.torque - (a * w1.torque + b * w2.torque)).norm(), 1e-12);
  }
}

TEST(MotorToWrench, InverseMixingRoundTrip) {
  const auto p = default_params();
  Wrench w;
  w.thrust = 0.41;
  w.torque = Vec3{1e-3, -2e-3, 4e-4};
  const ControlInput u = wrench_to_motor(w, p);
  const Wrench back = motor_to_wrench(u, p);
  EXPECT_NEAR(back.thrust, w.thrust, 1e-12);
  EXPECT_LT((back.torque - w.torque).norm(), 1e-12);
}

TEST(NonlinearDerivative, HoverEquilibriumIsFixedPoint) {
  const auto p = default_params();
  DroneState s;
  s.position = Vec3{0.3, -0.2, 1.0};
  const Vec12 dx =
      nonlinear_derivative(s, hover_input(p), Vec3::Zero(), Vec3::Zero(), p);
  EXPECT_LT(dx.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NonlinearDerivative, ExternalForceSuperposition) {
  const auto p = default_params();
  DroneState s;
  const Vec3 f_ext{0.0, 0.0, -0.0883};
  const Vec12 dx =
      nonlinear_derivative(s, hover_input(p), f_ext, Vec3::Zero(), p);
  EXPECT_NEAR(dx(kVelIdx + 2), -0.0883 / p.mass, 1e-12);
  Vec12 rest = dx;
  rest(kVelIdx + 2) = 0.0;
  EXPECT_LT(rest.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NonlinearDerivative, MatchesDifferentiatedReferenceFlow) {
  const auto p = default_params();
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    DroneState s;
    for (int i = 0; i < 3; ++i) {
      s.position(i) = rng.uniform(-0.5, 0.5);
      s.attitude(i) = rng.uniform(-0.1, 0.1);
      s.velocity(i) = rng.uniform(-0.3, 0.3);
      s.body_rates(i) = rng.uniform(-0.5, 0.5);
    }
    const ControlInput u = hover_input(p);
    const double h = 1e-4;
    const Vec12 fwd = reference_flow(s.to_vec(), u, Vec3::Zero(), h, p, 4);
    const Vec12 bwd = reference_flow(s.to_vec(), u, Vec3::Zero(), -h, p, 4);
    const Vec12 fd = (fwd - bwd) / (2.0 * h);
    const Vec12 dx = nonlinear_derivative(s, u, Vec3::Zero(), Vec3::Zero(), p);
    EXPECT_LT((dx - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(NonlinearDerivative, PitchSingularityThrows) {
  const auto p = default_params();
  DroneState s;
  s.attitude.y() = std::numbers::pi / 2.0 - 1e-9;
  EXPECT_THROW(
      nonlinear_derivative(s, hover_input(p), Vec3::Zero(), Vec3::Zero(), p),
      std::domain_error);
}

TEST(LinearizeHover, PositionVelocityBlockIsIdentityDt) {
  const auto p = default_params();
  const double dt = 0.02;
  const DiscreteLinearModel m = linearize_hover(p, dt);
  const Mat3 block = m.A.block<3, 3>(kPosIdx, kVelIdx);
  EXPECT_LT((block - dt * Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearizeHover, GravityTiltCoupling) {
  const auto p = default_params();
  Mat12 ac;
  Mat12x4 bc;
  hover_jacobians(p, ac, bc);
  EXPECT_DOUBLE_EQ(ac(kVelIdx + 0, kAttIdx + 1), p.gravity);
  EXPECT_DOUBLE_EQ(ac(kVelIdx + 1, kAttIdx + 0), -p.gravity);
}

TEST(LinearizeHover, JacobiansMatchCentralDifferences) {
  const auto p = default_params();
  Mat12 ac;
  Mat12x4 bc;
  hover_jacobians(p, ac, bc);

  const ControlInput u_h = hover_input(p);
  const DroneState hover;
  const double h = 1e-6;
  for (int i = 0; i < 12; ++i) {
    Vec12 xp = hover.to_vec(), xm = hover.to_vec();
    xp(i) += h;
    xm(i) -= h;
    const Vec12 col =
        (nonlinear_derivative(DroneState::from_vec(xp), u_h, Vec3::Zero(),
                              Vec3::Zero(), p) -
         nonlinear_derivative(DroneState::from_vec(xm), u_h, Vec3::Zero(),
                              Vec3::Zero(), p)) /
        (2.0 * h);
    EXPECT_LT((col - ac.col(i)).cwiseAbs().maxCoeff(), 1e-5) << "state column " << i;
  }
  for (int i = 0; i < 4; ++i) {
    ControlInput up = u_h, um = u_h;
    up.motors(i) += h;
    um.motors(i) -= h;
    const Vec12 col = (nonlinear_derivative(hover, up, Vec3::Zero(),
                                            Vec3::Zero(), p) -
                       nonlinear_derivative(hover, um, Vec3::Zero(),
                                            Vec3::Zero(), p)) /
                      (2.0 * h);
    EXPECT_LT((col - bc.col(i)).cwiseAbs().maxCoeff(), 1e-5) << "input column " << i;
  }
}

TEST(LinearizeHover, DisturbanceMapZeroOrderHoldStructure) {
  // Force -> velocity with gain dt/m, plus the dt^2/2m carry into
  // position; attitude and rate rows untouched.
  const auto p = default_params();
  const double dt = 0.02;
  const DiscreteLinearModel m = linearize_hover(p, dt);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 3; ++c) {
      const bool velocity_row = r >= kVelIdx && r < kVelIdx + 3;
      const bool position_row = r < kPosIdx + 3;
      if (velocity_row && r - kVelIdx == c) {
        EXPECT_NEAR(m.D(r, c), dt / p.mass, 1e-15);
      } else if (position_row && r - kPosIdx == c) {
        EXPECT_NEAR(m.D(r, c), 0.5 * dt * dt / p.mass, 1e-15);
      } else {
        EXPECT_NEAR(m.D(r, c), 0.0, 1e-18);
      }
    }
}

TEST(LinearizeHover, LinearModelPredictsEquilibrium) {
  const auto p = default_params();
  const DiscreteLinearModel m = linearize_hover(p, 0.02);
  Vec12 x = Vec12::Zero();
  for (int k = 0; k < 100; ++k) x = m.A * x;  // zero input deviation
  EXPECT_LT(x.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearizeHover, OneStepLinearValidity) {
  const auto p = default_params();
  const double dt = 0.02;
  const DiscreteLinearModel m = linearize_hover(p, dt);
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    Vec12 dx;
    for (int i = 0; i < 12; ++i) dx(i) = rng.uniform(-0.05, 0.05);
    Vec4 du;
    for (int i = 0; i < 4; ++i) du(i) = rng.uniform(-0.05, 0.05);

    ControlInput u;
    u.motors = m.u_hover + du;
    const DroneState truth = step_truth(DroneState::from_vec(dx), u,
                                        Vec3::Zero(), dt, p);
    const Vec12 lin = m.A * dx + m.B * du;
    EXPECT_LT((truth.to_vec() - lin).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(StepTruth, HoverIsFixedPoint) {
  const auto p = default_params();
  DroneState s;
  s.position = Vec3{0.0, 0.0, 0.7};
  for (double dt : {0.001, 0.02, 0.1}) {
    const DroneState next = step_truth(s, hover_input(p), Vec3::Zero(), dt, p);
    EXPECT_LT((next.to_vec() - s.to_vec()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StepTruth, FreeFallBallistic) {
  const auto p = default_params();
  DroneState s;
  s.position = Vec3{0.0, 0.0, 1.0};
  ControlInput u;  // motors off
  const double dt = 0.005;
  double t = 0.0;
  while (t < 0.1 - 1e-12) {
    s = step_truth(s, u, Vec3::Zero(), dt, p);
    t += dt;
  }
  EXPECT_NEAR(s.position.z(), 1.0 - 0.5 * p.gravity * t * t, 1e-6);
}

TEST(StepTruth, Rk4RichardsonRatio) {
  const auto p = default_params();
  DroneState s;
  s.attitude = Vec3{0.05, -0.04, 0.02};
  s.velocity = Vec3{0.2, -0.1, 0.1};
  s.body_rates = Vec3{0.4, 0.3, -0.2};
  ControlInput u = hover_input(p);
  u.motors += Vec4{0.02, -0.01, 0.015, -0.02};

  const double horizon = 0.16;
  const auto integrate = [&](double dt) {
    DroneState x = s;
    const int steps = static_cast<int>(std::llround(horizon / dt));
    for (int i = 0; i < steps; ++i)
      x = step_truth(x, u, Vec3{0.0, 0.0, -0.02}, dt, p);
    return x.to_vec();
  };

  const Vec12 ref = integrate(0.02 / 16.0);
  const double err_h = (integrate(0.02) - ref).norm();
  const double err_h2 = (integrate(0.01) - ref).norm();
  const double ratio = err_h / err_h2;
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}
