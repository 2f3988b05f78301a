#include "dwmpc/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace dwmpc {

namespace {

constexpr double kPitchSingularityMargin = 1e-6;

Vec4 clamp_motors(const Vec4& u, const QuadrotorParams& p) {
  return u.cwiseMax(p.motor_min).cwiseMin(p.motor_max);
}

}  // namespace

void QuadrotorParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("quadrotor mass must be positive");
  if (!(inertia.array() > 0.0).all())
    throw std::invalid_argument("inertia entries must be positive");
  if (!(thrust_coeff > 0.0))
    throw std::invalid_argument("thrust coefficient must be positive");
  if (!(arm_length > 0.0)) throw std::invalid_argument("arm length must be positive");
  if (motor_min < 0.0) throw std::invalid_argument("motor_min must be >= 0");
  if (!(motor_max > motor_min))
    throw std::invalid_argument("motor_max must exceed motor_min");
}

Vec4 QuadrotorParams::hover_input() const {
  return Vec4::Constant(mass * gravity / (4.0 * thrust_coeff));
}

Mat4 QuadrotorParams::mixing_matrix() const {
  const double kt = thrust_coeff;
  const double km = torque_coeff;
  const double d = arm_length / std::numbers::sqrt2;
  Mat4 m;
  m << kt, kt, kt, kt,
      -kt * d, -kt * d, kt * d, kt * d,
      -kt * d, kt * d, kt * d, -kt * d,
      -km, km, -km, km;
  return m;
}

Vec12 DroneState::to_vec() const {
  Vec12 x;
  x << position, attitude, velocity, body_rates;
  return x;
}

DroneState DroneState::from_vec(const Vec12& x) {
  DroneState s;
  s.position = x.segment<3>(kPosIdx);
  s.attitude = x.segment<3>(kAttIdx);
  s.velocity = x.segment<3>(kVelIdx);
  s.body_rates = x.segment<3>(kRateIdx);
  return s;
}

bool DroneState::is_finite() const { return to_vec().allFinite(); }

Mat3 rotation_rpy(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  const double cy = std::cos(attitude.z()), sy = std::sin(attitude.z());
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
      -sp, cp * sr, cp * cr;
  return r;
}

Mat3 euler_rate_matrix(const Vec3& attitude) {
  const double pitch = attitude.y();
  if (std::abs(pitch) >= std::numbers::pi / 2.0 - kPitchSingularityMargin)
    throw std::domain_error("euler rate kinematics singular: |pitch| near pi/2");
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(pitch), tp = std::tan(pitch);
  Mat3 w;
  w << 1.0, sr * tp, cr * tp,
      0.0, cr, -sr,
      0.0, sr / cp, cr / cp;
  return w;
}

Wrench motor_to_wrench(const ControlInput& u, const QuadrotorParams& params) {
  Vec4 eta = params.mixing_matrix() * u.motors;
  Wrench w;
  w.thrust = eta(0);
  w.torque = eta.tail<3>();
  return w;
}

ControlInput wrench_to_motor(const Wrench& w, const QuadrotorParams& params) {
  Vec4 eta;
  eta << w.thrust, w.torque;
  ControlInput u;
  u.motors = params.mixing_matrix().inverse() * eta;
  return u;
}

Vec12 nonlinear_derivative(const DroneState& state, const ControlInput& u,
                           const Vec3& f_ext, const Vec3& tau_ext,
                           const QuadrotorParams& params) {
  const Wrench wr = motor_to_wrench(u, params);
  const Mat3 r = rotation_rpy(state.attitude);
  const Mat3 w = euler_rate_matrix(state.attitude);

  const Vec3 gravity{0.0, 0.0, -params.gravity};
  const Vec3 thrust_body{0.0, 0.0, wr.thrust};
  const Vec3 j = params.inertia;
  const Vec3 j_omega = j.cwiseProduct(state.body_rates);

  Vec12 dx;
  dx.segment<3>(kPosIdx) = state.velocity;
  dx.segment<3>(kAttIdx) = w * state.body_rates;
  dx.segment<3>(kVelIdx) = gravity + (r * thrust_body + f_ext) / params.mass;
  // J w_dot = (J w) x w + tau; identical to the usual -w x (J w) form.
  dx.segment<3>(kRateIdx) =
      (j_omega.cross(state.body_rates) + wr.torque + tau_ext).cwiseQuotient(j);
  return dx;
}

void hover_jacobians(const QuadrotorParams& params, Mat12& a_c, Mat12x4& b_c) {
  const double g = params.gravity;
  a_c = Mat12::Zero();
  a_c.block<3, 3>(kPosIdx, kVelIdx) = Mat3::Identity();
  a_c.block<3, 3>(kAttIdx, kRateIdx) = Mat3::Identity();
  a_c(kVelIdx + 0, kAttIdx + 1) = g;   // pitch tilts thrust into +x
  a_c(kVelIdx + 1, kAttIdx + 0) = -g;  // roll tilts thrust into -y

  const Mat4 mix = params.mixing_matrix();
  b_c = Mat12x4::Zero();
  b_c.row(kVelIdx + 2) = mix.row(0) / params.mass;
  b_c.block<3, 4>(kRateIdx, 0) =
      params.inertia.cwiseInverse().asDiagonal() * mix.bottomRows<3>();
}

DiscreteLinearModel linearize_hover(const QuadrotorParams& params, double dt) {
  params.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

  Mat12 ac;
  Mat12x4 bc;
  hover_jacobians(params, ac, bc);

  // Force-to-acceleration input map; discretized alongside (A, B) so the
  // disturbance channel is the same zero-order hold as the input channel
  // (dt/m on the velocity rows plus the dt^2/2m carry into position).
  Mat12x3 bf = Mat12x3::Zero();
  bf.block<3, 3>(kVelIdx, 0) = Mat3::Identity() / params.mass;

  Eigen::Matrix<double, 19, 19> stacked = Eigen::Matrix<double, 19, 19>::Zero();
  stacked.topLeftCorner<12, 12>() = ac * dt;
  stacked.block<12, 4>(0, 12) = bc * dt;
  stacked.block<12, 3>(0, 16) = bf * dt;
  const Eigen::Matrix<double, 19, 19> expm = stacked.exp();

  DiscreteLinearModel m;
  m.A = expm.topLeftCorner<12, 12>();
  m.B = expm.block<12, 4>(0, 12);
  m.D = expm.block<12, 3>(0, 16);
  m.u_hover = params.hover_input();
  m.dt = dt;
  return m;
}

AffineDiscreteModel linearize_at(const DroneState& state,
                                 const ControlInput& u, const Vec3& f_ext,
                                 const QuadrotorParams& params, double dt) {
  const double h = 1e-6;
  const Vec12 x0 = state.to_vec();
  const Vec3 no_torque = Vec3::Zero();

  Mat12 ac;
  for (int i = 0; i < kStateDim; ++i) {
    Vec12 xp = x0, xm = x0;
    xp(i) += h;
    xm(i) -= h;
    ac.col(i) = (nonlinear_derivative(DroneState::from_vec(xp), u, f_ext,
                                      no_torque, params) -
                 nonlinear_derivative(DroneState::from_vec(xm), u, f_ext,
                                      no_torque, params)) /
                (2.0 * h);
  }
  Mat12x4 bc;
  for (int i = 0; i < kInputDim; ++i) {
    ControlInput up = u, um = u;
    up.motors(i) += h;
    um.motors(i) -= h;
    bc.col(i) =
        (nonlinear_derivative(state, up, f_ext, no_torque, params) -
         nonlinear_derivative(state, um, f_ext, no_torque, params)) /
        (2.0 * h);
  }
  const Vec12 f0 = nonlinear_derivative(state, u, f_ext, no_torque, params);
  const Vec12 rc = f0 - ac * x0 - bc * u.motors;

  // Exact discretization of x_dot = Ac x + Bc u + rc with u frozen.
  Eigen::Matrix<double, 17, 17> stacked = Eigen::Matrix<double, 17, 17>::Zero();
  stacked.topLeftCorner<12, 12>() = ac * dt;
  stacked.block<12, 4>(0, 12) = bc * dt;
  stacked.block<12, 1>(0, 16) = rc * dt;
  const Eigen::Matrix<double, 17, 17> expm = stacked.exp();

  AffineDiscreteModel m;
  m.A = expm.topLeftCorner<12, 12>();
  m.B = expm.block<12, 4>(0, 12);
  m.c = expm.block<12, 1>(0, 16);
  return m;
}

DroneState step_truth(const DroneState& state, const ControlInput& u,
                      const Vec3& f_ext, double dt,
                      const QuadrotorParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  ControlInput uc;
  uc.motors = clamp_motors(u.motors, params);
  const Vec3 no_torque = Vec3::Zero();

  const auto f = [&](const Vec12& x) {
    return nonlinear_derivative(DroneState::from_vec(x), uc, f_ext, no_torque,
                                params);
  };
  const Vec12 x0 = state.to_vec();
  const Vec12 k1 = f(x0);
  const Vec12 k2 = f(x0 + 0.5 * dt * k1);
  const Vec12 k3 = f(x0 + 0.5 * dt * k2);
  const Vec12 k4 = f(x0 + dt * k3);
  return DroneState::from_vec(x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace dwmpc
