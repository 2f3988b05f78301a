#include "dwmpc/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace dwmpc {

namespace {

BoxConstraints absolute_boxes(const MpcConfig& cfg, const QuadrotorParams& quad) {
  BoxConstraints b;
  b.x_max << cfg.pos_bound, cfg.att_bound, cfg.vel_bound, cfg.rate_bound;
  b.x_min = -b.x_max;
  b.u_min = Vec4::Constant(quad.motor_min);
  b.u_max = Vec4::Constant(quad.motor_max);
  return b;
}

Vec4 clamp_input(const Vec4& u, const QuadrotorParams& quad) {
  return u.cwiseMax(quad.motor_min).cwiseMin(quad.motor_max);
}

long long elapsed_ns(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "pid") return ControllerKind::Pid;
  if (name == "linmpc-lingp") return ControllerKind::LinMpcLinGp;
  if (name == "mpc-lingp") return ControllerKind::MpcLinGp;
  if (name == "mpc-fullgp") return ControllerKind::MpcFullGp;
  throw std::invalid_argument("unknown controller: " + name);
}

std::string controller_kind_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Pid: return "pid";
    case ControllerKind::LinMpcLinGp: return "linmpc-lingp";
    case ControllerKind::MpcLinGp: return "mpc-lingp";
    case ControllerKind::MpcFullGp: return "mpc-fullgp";
  }
  throw std::logic_error("unreachable controller kind");
}

void PidGains::validate() const {
  if ((kp_pos.array() < 0).any() || (ki_pos.array() < 0).any() ||
      (kd_pos.array() < 0).any() || kp_att < 0 || kd_att < 0)
    throw std::invalid_argument("pid gains must be nonnegative");
  if (!(integrator_limit.array() > 0).all())
    throw std::invalid_argument("integrator clamp must be positive");
}

PidController::PidController(const QuadrotorParams& quad, const PidGains& gains,
                             double dt)
    : quad_(quad), gains_(gains), dt_(dt) {
  gains.validate();
}

void PidController::reset() { integral_ = Vec3::Zero(); }

ControlDecision PidController::step(const DroneState& self,
                                    const QuinticTrajectory& ref, double t,
                                    const std::optional<DroneState>& /*other*/) {
  const auto t0 = std::chrono::steady_clock::now();
  const Vec3 e = ref.position(t) - self.position;
  const Vec3 ev = ref.velocity(t) - self.velocity;

  // Integral separation: accumulate only near the setpoint, clamp hard.
  for (int i = 0; i < 3; ++i)
    if (std::abs(e(i)) <= gains_.integration_band(i)) integral_(i) += e(i) * dt_;
  integral_ = integral_.cwiseMax(-gains_.integrator_limit)
                  .cwiseMin(gains_.integrator_limit);

  const Vec3 a_des = gains_.kp_pos.cwiseProduct(e) +
                     gains_.kd_pos.cwiseProduct(ev) +
                     gains_.ki_pos.cwiseProduct(integral_);

  Wrench w;
  w.thrust = std::max(0.0, quad_.mass * (quad_.gravity + a_des.z()));

  const double pitch_des =
      std::clamp(a_des.x() / quad_.gravity, -gains_.max_tilt, gains_.max_tilt);
  const double roll_des =
      std::clamp(-a_des.y() / quad_.gravity, -gains_.max_tilt, gains_.max_tilt);

  Vec3 ang_acc;
  ang_acc.x() = gains_.kp_att * (roll_des - self.attitude.x()) -
                gains_.kd_att * self.body_rates.x();
  ang_acc.y() = gains_.kp_att * (pitch_des - self.attitude.y()) -
                gains_.kd_att * self.body_rates.y();
  ang_acc.z() = gains_.kp_yaw * (0.0 - self.attitude.z()) -
                gains_.kd_yaw * self.body_rates.z();
  w.torque = quad_.inertia.cwiseProduct(ang_acc);

  ControlDecision d;
  d.input.motors = clamp_input(wrench_to_motor(w, quad_).motors, quad_);
  d.stats.converged = true;
  d.step_ns = elapsed_ns(t0);
  return d;
}

SeqLinMpcController::SeqLinMpcController(const QuadrotorParams& quad,
                                         const MpcConfig& cfg,
                                         DisturbanceModel disturbance,
                                         int inner_iters)
    : quad_(quad),
      cfg_(cfg),
      disturbance_(std::move(disturbance)),
      inner_iters_(inner_iters),
      boxes_(absolute_boxes(cfg, quad)),
      u_hover_(quad.hover_input()) {
  if (inner_iters_ < 1) throw std::invalid_argument("need >= 1 inner iteration");
  const DiscreteLinearModel hover = linearize_hover(quad, cfg.dt);
  cost_ = cfg.cost_spec(hover.A, hover.B);
  d_map_ = hover.D;
}

void SeqLinMpcController::seed_plan(const Vec12& x0) {
  state_guess_.assign(cfg_.horizon + 1, x0);
  input_guess_.assign(cfg_.horizon, u_hover_);
}

void SeqLinMpcController::reset() {
  has_plan_ = false;
  warm_.reset();
  last_applied_.reset();
}

ControlDecision SeqLinMpcController::step(
    const DroneState& self, const QuinticTrajectory& ref, double t,
    const std::optional<DroneState>& other) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg_.horizon;
  const Vec12 x0 = self.to_vec();

  if (!has_plan_) {
    seed_plan(x0);
  } else {
    // Shift the previous plan one step; relinearization stays close to
    // where the closed loop actually travels.
    for (int k = 0; k + 1 <= n; ++k) state_guess_[k] = state_guess_[k + 1];
    for (int k = 0; k + 1 < n; ++k) input_guess_[k] = input_guess_[k + 1];
    state_guess_[0] = x0;
  }

  std::vector<double> forces;
  if (other.has_value() && disturbance_.active()) {
    const Vec3 d0 = other->position - self.position;
    const Vec3 dv = other->velocity - self.velocity;
    const LinGpModel lin = disturbance_.fixed_affine.has_value()
                               ? *disturbance_.fixed_affine
                               : disturbance_.gp->linearize(d0);
    forces = affine_force_stack(lin, predict_relative_stack(d0, dv, n, cfg_.dt),
                                cfg_.max_predicted_force);
  }

  const std::vector<Vec12> refs = sample_reference_window(ref, t, n, cfg_.dt);
  std::vector<Vec4> input_refs(n, u_hover_);
  for (int k = 0; k < n && !forces.empty(); ++k)
    input_refs[k] += force_compensation_input(forces[k], quad_);

  std::vector<PredictionStep> steps(n);
  QpSolution sol;
  for (int iter = 0; iter < inner_iters_; ++iter) {
    for (int k = 0; k < n; ++k) {
      ControlInput uk;
      uk.motors = clamp_input(input_guess_[k], quad_);
      const AffineDiscreteModel m = linearize_at(
          DroneState::from_vec(state_guess_[k]), uk, Vec3::Zero(), quad_,
          cfg_.dt);
      steps[k] = PredictionStep{m.A, m.B, m.c};
    }
    CondensedBuild build = build_condensed_general(
        steps, d_map_, cost_, boxes_, x0, refs, forces, input_refs);
    AdmmQpSolver solver;
    solver.setup(build.qp.P, build.qp.H, cfg_.qp.rho);
    sol = solver.solve(build.qp.q, build.qp.b, warm_ ? &*warm_ : nullptr,
                       cfg_.qp.max_iters, cfg_.qp.tol);
    const Eigen::VectorXd x_pred =
        build.a_stack * x0 + build.b_stack * sol.primal + build.w_stack;
    for (int k = 0; k < n; ++k) {
      state_guess_[k + 1] = x_pred.segment<12>(12 * k);
      input_guess_[k] = sol.primal.segment<4>(4 * k);
    }
    warm_ = sol;
  }
  has_plan_ = true;

  ControlDecision d;
  d.stats = sol.stats;
  d.predicted_fz = forces.empty() ? 0.0 : forces[0];
  if (!sol.primal.allFinite() && last_applied_.has_value()) {
    d.input = *last_applied_;
  } else {
    d.input.motors = clamp_input(sol.primal.head<4>(), quad_);
  }
  last_applied_ = d.input;
  d.step_ns = elapsed_ns(t0);
  return d;
}

FullGpMpcController::FullGpMpcController(const QuadrotorParams& quad,
                                         const MpcConfig& cfg, const GpModel* gp,
                                         int max_outer_iters,
                                         double input_settle_tol)
    : quad_(quad),
      cfg_(cfg),
      gp_(gp),
      max_outer_iters_(max_outer_iters),
      input_settle_tol_(input_settle_tol),
      boxes_(absolute_boxes(cfg, quad)),
      u_hover_(quad.hover_input()) {
  if (max_outer_iters_ < 1) throw std::invalid_argument("need >= 1 outer iteration");
  const DiscreteLinearModel hover = linearize_hover(quad, cfg.dt);
  cost_ = cfg.cost_spec(hover.A, hover.B);
  d_map_ = hover.D;
}

void FullGpMpcController::seed_plan(const Vec12& x0) {
  state_guess_.assign(cfg_.horizon + 1, x0);
  input_guess_.assign(cfg_.horizon, u_hover_);
}

void FullGpMpcController::reset() {
  has_plan_ = false;
  warm_.reset();
  last_applied_.reset();
}

ControlDecision FullGpMpcController::step(
    const DroneState& self, const QuinticTrajectory& ref, double t,
    const std::optional<DroneState>& other) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg_.horizon;
  const Vec12 x0 = self.to_vec();

  if (!has_plan_) {
    seed_plan(x0);
  } else {
    for (int k = 0; k + 1 <= n; ++k) state_guess_[k] = state_guess_[k + 1];
    for (int k = 0; k + 1 < n; ++k) input_guess_[k] = input_guess_[k + 1];
    state_guess_[0] = x0;
  }

  const bool disturbed = other.has_value() && gp_ != nullptr && gp_->fitted();
  const std::vector<Vec12> refs = sample_reference_window(ref, t, n, cfg_.dt);

  std::vector<PredictionStep> steps(n);
  std::vector<double> forces;
  QpSolution sol;
  std::optional<Vec4> u0_prev;
  for (int outer = 0; outer < max_outer_iters_; ++outer) {
    if (disturbed) {
      // Full GP mean at the relative positions predicted by the current
      // plan; the other drone is propagated at constant velocity.
      forces.resize(n);
      for (int k = 0; k < n; ++k) {
        const Vec3 p_other = other->position + k * cfg_.dt * other->velocity;
        const Vec3 rel = p_other - state_guess_[k].segment<3>(kPosIdx);
        double f = gp_->predict_mean(rel);
        f = std::clamp(f, -cfg_.max_predicted_force, cfg_.max_predicted_force);
        forces[k] = f;
      }
    }
    std::vector<Vec4> input_refs(n, u_hover_);
    for (int k = 0; k < n && !forces.empty(); ++k)
      input_refs[k] += force_compensation_input(forces[k], quad_);
    for (int k = 0; k < n; ++k) {
      ControlInput uk;
      uk.motors = clamp_input(input_guess_[k], quad_);
      const AffineDiscreteModel m = linearize_at(
          DroneState::from_vec(state_guess_[k]), uk, Vec3::Zero(), quad_,
          cfg_.dt);
      steps[k] = PredictionStep{m.A, m.B, m.c};
    }
    CondensedBuild build = build_condensed_general(
        steps, d_map_, cost_, boxes_, x0, refs, forces, input_refs);
    AdmmQpSolver solver;
    solver.setup(build.qp.P, build.qp.H, cfg_.qp.rho);
    sol = solver.solve(build.qp.q, build.qp.b, warm_ ? &*warm_ : nullptr,
                       cfg_.qp.max_iters, cfg_.qp.tol);
    const Eigen::VectorXd x_pred =
        build.a_stack * x0 + build.b_stack * sol.primal + build.w_stack;
    for (int k = 0; k < n; ++k) {
      state_guess_[k + 1] = x_pred.segment<12>(12 * k);
      input_guess_[k] = sol.primal.segment<4>(4 * k);
    }
    warm_ = sol;

    const Vec4 u0 = sol.primal.head<4>();
    if (u0_prev.has_value() &&
        (u0 - *u0_prev).cwiseAbs().maxCoeff() < input_settle_tol_)
      break;
    u0_prev = u0;
  }
  has_plan_ = true;

  ControlDecision d;
  d.stats = sol.stats;
  d.predicted_fz = forces.empty() ? 0.0 : forces[0];
  if (!sol.primal.allFinite() && last_applied_.has_value()) {
    d.input = *last_applied_;
  } else {
    d.input.motors = clamp_input(sol.primal.head<4>(), quad_);
  }
  last_applied_ = d.input;
  d.step_ns = elapsed_ns(t0);
  return d;
}

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const QuadrotorParams& quad,
                                            const MpcConfig& mpc_cfg,
                                            const PidGains& pid_gains,
                                            const GpModel* gp) {
  DisturbanceModel dist;
  dist.gp = (gp != nullptr && gp->fitted()) ? gp : nullptr;
  switch (kind) {
    case ControllerKind::Pid:
      return std::make_unique<PidController>(quad, pid_gains, mpc_cfg.dt);
    case ControllerKind::LinMpcLinGp:
      return std::make_unique<LinMpcController>(quad, mpc_cfg, dist);
    case ControllerKind::MpcLinGp:
      return std::make_unique<SeqLinMpcController>(quad, mpc_cfg, dist);
    case ControllerKind::MpcFullGp:
      return std::make_unique<FullGpMpcController>(quad, mpc_cfg, dist.gp);
  }
  throw std::logic_error("unreachable controller kind");
}

}  // namespace dwmpc
