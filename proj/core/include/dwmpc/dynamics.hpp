#pragma once

#include "dwmpc/types.hpp"

namespace dwmpc {

/// Physical parameters of one quadrotor. Motor inputs are squared motor
/// speeds in a normalized unit; thrust_coeff converts one unit to Newtons.
struct QuadrotorParams {
  double mass = 0.034;                          // kg
  Vec3 inertia{1.66e-5, 1.66e-5, 2.93e-5};      // kg m^2, diagonal
  double gravity = 9.81;                        // m/s^2
  double arm_length = 0.046;                    // m, center to motor
  double thrust_coeff = 0.18;                   // N per unit
  double torque_coeff = 1.08e-3;                // N m per unit
  double motor_min = 0.0;                       // per-motor input bounds
  double motor_max = 0.7;

  void validate() const;

  /// Per-motor input that balances weight with level attitude.
  Vec4 hover_input() const;

  /// X-configuration mixing matrix: wrench = M * u.
  /// Rows are [T, tau_x, tau_y, tau_z]; motors numbered
  /// 1:(+x,-y) 2:(-x,-y) 3:(-x,+y) 4:(+x,+y), spin pattern (-,+,-,+).
  Mat4 mixing_matrix() const;
};

struct DroneState {
  Vec3 position = Vec3::Zero();    // m, world frame
  Vec3 attitude = Vec3::Zero();    // rad, roll-pitch-yaw (ZYX)
  Vec3 velocity = Vec3::Zero();    // m/s, world frame
  Vec3 body_rates = Vec3::Zero();  // rad/s, body frame

  Vec12 to_vec() const;
  static DroneState from_vec(const Vec12& x);
  bool is_finite() const;
};

struct ControlInput {
  Vec4 motors = Vec4::Zero();  // squared motor speeds, one per rotor
};

struct Wrench {
  double thrust = 0.0;         // N, along body z
  Vec3 torque = Vec3::Zero();  // N m, body frame
};

/// Hover-linearized discrete model. The disturbance map D converts an
/// external force (N, world frame) into a one-step state increment,
/// discretized by the same zero-order hold as the input channel: dt/m on
/// the velocity rows and dt^2/2m on the position rows.
struct DiscreteLinearModel {
  Mat12 A = Mat12::Zero();
  Mat12x4 B = Mat12x4::Zero();
  Mat12x3 D = Mat12x3::Zero();
  Vec4 u_hover = Vec4::Zero();
  double dt = 0.0;
};

/// Linearization of the nonlinear model about an arbitrary operating
/// point, discretized exactly for the frozen affine ODE:
///   x+ = A x + B u + c  (absolute coordinates, not deviations).
struct AffineDiscreteModel {
  Mat12 A = Mat12::Zero();
  Mat12x4 B = Mat12x4::Zero();
  Vec12 c = Vec12::Zero();
};

/// World-from-body rotation for ZYX Euler angles (roll, pitch, yaw).
Mat3 rotation_rpy(const Vec3& attitude);

/// Euler-rate kinematics matrix W with rpy_dot = W * omega.
/// Throws std::domain_error when |pitch| >= pi/2 - 1e-6.
Mat3 euler_rate_matrix(const Vec3& attitude);

Wrench motor_to_wrench(const ControlInput& u, const QuadrotorParams& params);

/// Inverse mixing; result is not clamped.
ControlInput wrench_to_motor(const Wrench& w, const QuadrotorParams& params);

/// Time derivative of the 12-state under motor input u, external force
/// f_ext (N, world) and external torque tau_ext (N m, body).
Vec12 nonlinear_derivative(const DroneState& state, const ControlInput& u,
                           const Vec3& f_ext, const Vec3& tau_ext,
                           const QuadrotorParams& params);

/// Analytic continuous-time Jacobians of nonlinear_derivative evaluated
/// at the hover equilibrium (level attitude, zero rates, u_hover).
void hover_jacobians(const QuadrotorParams& params, Mat12& a_c, Mat12x4& b_c);

/// Analytic Jacobians of nonlinear_derivative at hover, discretized by
/// zero-order hold (matrix exponential of the stacked [Ac Bc; 0 0]).
DiscreteLinearModel linearize_hover(const QuadrotorParams& params, double dt);

/// Jacobians at an arbitrary operating point via central differences,
/// discretized for the frozen affine ODE. Used by the relinearizing
/// baselines; the hover path above stays analytic.
AffineDiscreteModel linearize_at(const DroneState& state,
                                 const ControlInput& u, const Vec3& f_ext,
                                 const QuadrotorParams& params, double dt);

/// One RK4 step of the truth model with f_ext held constant. Motor
/// inputs are clamped to [motor_min, motor_max] before integrating.
DroneState step_truth(const DroneState& state, const ControlInput& u,
                      const Vec3& f_ext, double dt,
                      const QuadrotorParams& params);

}  // namespace dwmpc
