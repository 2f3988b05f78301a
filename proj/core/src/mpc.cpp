#include "dwmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace dwmpc {

namespace {

Eigen::VectorXd flatten_states(const std::vector<Vec12>& xs) {
  Eigen::VectorXd v(12 * static_cast<Eigen::Index>(xs.size()));
  for (std::size_t k = 0; k < xs.size(); ++k)
    v.segment<12>(12 * static_cast<Eigen::Index>(k)) = xs[k];
  return v;
}

}  // namespace

void CostSpec::validate_matrices() const {
  if (!Q.isApprox(Q.transpose(), 1e-12) || !Qf.isApprox(Qf.transpose(), 1e-12) ||
      !R.isApprox(R.transpose(), 1e-12))
    throw std::invalid_argument("cost matrices must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat12> es_q(Q), es_qf(Qf);
  if (es_q.eigenvalues().minCoeff() < -1e-9 ||
      es_qf.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument("Q and Qf must be positive semidefinite");
  Eigen::LLT<Mat4> llt_r(R);
  if (llt_r.info() != Eigen::Success)
    throw std::invalid_argument("R must be positive definite");
}

void CostSpec::validate() const {
  if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
  validate_matrices();
}

void BoxConstraints::validate() const {
  if (!((x_max - x_min).array() > 0.0).all() ||
      !((u_max - u_min).array() > 0.0).all())
    throw std::invalid_argument("box bounds must satisfy min < max");
  if (!(x_min.array() < 0.0).all() || !(x_max.array() > 0.0).all() ||
      !(u_min.array() < 0.0).all() || !(u_max.array() > 0.0).all())
    throw std::invalid_argument("zero deviation must be strictly feasible");
}

RiccatiSolution riccati_lqr(const Mat12& a, const Mat12x4& b,
                            const CostSpec& cost,
                            const std::vector<Vec12>& state_lin,
                            const std::vector<Vec4>& input_lin,
                            const std::vector<Vec12>& offsets) {
  cost.validate_matrices();
  if (cost.horizon < 1)
    throw std::invalid_argument("riccati horizon must be >= 1");
  const int n = cost.horizon;
  const auto check_size = [n](std::size_t s, const char* what) {
    if (s != 0 && s != static_cast<std::size_t>(n))
      throw std::invalid_argument(std::string("riccati: bad size for ") + what);
  };
  check_size(state_lin.size(), "state linear terms");
  check_size(input_lin.size(), "input linear terms");
  check_size(offsets.size(), "affine offsets");

  RiccatiSolution sol;
  sol.gains.resize(n);
  sol.feedforward.resize(n);
  sol.cost_to_go.resize(n + 1);
  sol.cost_to_go_lin.resize(n + 1);

  sol.cost_to_go[n] = cost.Qf;
  sol.cost_to_go_lin[n] =
      state_lin.empty() ? Vec12::Zero().eval() : state_lin[n - 1];

  for (int k = n - 1; k >= 0; --k) {
    const Mat12& p_next = sol.cost_to_go[k + 1];
    const Vec12 q_k = (k >= 1 && !state_lin.empty()) ? state_lin[k - 1]
                                                     : Vec12::Zero().eval();
    const Vec4 r_k = input_lin.empty() ? Vec4::Zero().eval() : input_lin[k];
    const Vec12 w_k = offsets.empty() ? Vec12::Zero().eval() : offsets[k];

    const Vec12 pw = sol.cost_to_go_lin[k + 1] + p_next * w_k;
    Mat4 quu = cost.R + b.transpose() * p_next * b;
    quu = 0.5 * (quu + quu.transpose());
    const Eigen::LLT<Mat4> llt(quu);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("riccati: R + B'PB not positive definite");
    const Mat4x12 qux = b.transpose() * p_next * a;
    const Vec4 qu = r_k + b.transpose() * pw;

    sol.gains[k] = llt.solve(qux);
    sol.feedforward[k] = llt.solve(qu);

    const Mat12 q_stage = (k >= 1) ? cost.Q : Mat12::Zero().eval();
    Mat12 p_k = q_stage + a.transpose() * p_next * a -
                qux.transpose() * sol.gains[k];
    sol.cost_to_go[k] = 0.5 * (p_k + p_k.transpose());
    sol.cost_to_go_lin[k] =
        q_k + a.transpose() * pw - qux.transpose() * sol.feedforward[k];
  }
  return sol;
}

Mat12 dare(const Mat12& a, const Mat12x4& b, const Mat12& q, const Mat4& r) {
  Mat12 p = q;
  for (int it = 0; it < 20000; ++it) {
    Mat4 quu = r + b.transpose() * p * b;
    quu = 0.5 * (quu + quu.transpose());
    const Eigen::LLT<Mat4> llt(quu);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("dare: R + B'PB not positive definite");
    const Mat4x12 k_gain = llt.solve(b.transpose() * p * a);
    Mat12 p_next =
        q + a.transpose() * p * a - (b.transpose() * p * a).transpose() * k_gain;
    p_next = 0.5 * (p_next + p_next.transpose());
    const double delta = (p_next - p).cwiseAbs().maxCoeff();
    p = p_next;
    if (delta < 1e-11 * std::max(1.0, p.cwiseAbs().maxCoeff())) return p;
  }
  throw std::runtime_error("dare: fixed-point iteration did not converge");
}

std::vector<Vec3> predict_relative_stack(const Vec3& rel_pos,
                                         const Vec3& rel_vel, int horizon,
                                         double dt) {
  if (!rel_pos.allFinite() || !rel_vel.allFinite())
    throw std::invalid_argument("relative state must be finite");
  std::vector<Vec3> stack(horizon);
  for (int k = 0; k < horizon; ++k) stack[k] = rel_pos + k * dt * rel_vel;
  return stack;
}

Vec4 force_compensation_input(double fz, const QuadrotorParams& quad) {
  return Vec4::Constant(-fz / (4.0 * quad.thrust_coeff));
}

CondensedBuild build_condensed_general(
    const std::vector<PredictionStep>& steps, const Mat12x3& d_map,
    const CostSpec& cost, const BoxConstraints& boxes, const Vec12& x0,
    const std::vector<Vec12>& refs, const std::vector<double>& forces,
    const std::vector<Vec4>& input_refs) {
  const int n = cost.horizon;
  if (static_cast<int>(steps.size()) != n)
    throw std::invalid_argument("condensed build: wrong number of model steps");
  if (static_cast<int>(refs.size()) != n)
    throw std::invalid_argument("condensed build: wrong reference stack size");
  if (!forces.empty() && static_cast<int>(forces.size()) != n)
    throw std::invalid_argument("condensed build: wrong disturbance stack size");
  if (!input_refs.empty() && static_cast<int>(input_refs.size()) != n)
    throw std::invalid_argument("condensed build: wrong input reference size");

  const Eigen::Index nx = 12 * n;
  const Eigen::Index nu = 4 * n;

  CondensedBuild out;
  out.a_stack.resize(nx, 12);
  out.b_stack.setZero(nx, nu);
  out.w_stack.setZero(nx);

  const Vec3 force_dir{0.0, 0.0, 1.0};
  Vec12 w_run = Vec12::Zero();
  for (int k = 0; k < n; ++k) {
    const auto& s = steps[k];
    out.a_stack.middleRows<12>(12 * k) =
        (k == 0) ? s.A : Mat12(s.A * out.a_stack.middleRows<12>(12 * (k - 1)));
    for (int j = 0; j < k; ++j)
      out.b_stack.block<12, 4>(12 * k, 4 * j) =
          s.A * out.b_stack.block<12, 4>(12 * (k - 1), 4 * j);
    out.b_stack.block<12, 4>(12 * k, 4 * k) = s.B;

    const double fz = forces.empty() ? 0.0 : forces[k];
    w_run = (k == 0) ? Vec12(s.c + d_map * (force_dir * fz))
                     : Vec12(s.A * w_run + s.c + d_map * (force_dir * fz));
    out.w_stack.segment<12>(12 * k) = w_run;
  }

  Eigen::MatrixXd q_blk = Eigen::MatrixXd::Zero(nx, nx);
  for (int k = 0; k < n - 1; ++k) q_blk.block<12, 12>(12 * k, 12 * k) = cost.Q;
  q_blk.bottomRightCorner<12, 12>() = cost.Qf;

  const Eigen::MatrixXd btq = out.b_stack.transpose() * q_blk;
  Eigen::MatrixXd p = 2.0 * (btq * out.b_stack);
  for (int k = 0; k < n; ++k) p.block<4, 4>(4 * k, 4 * k) += 2.0 * cost.R;
  p = 0.5 * (p + p.transpose()).eval();

  const Eigen::VectorXd axw = out.a_stack * x0 + out.w_stack;
  Eigen::VectorXd q_lin = 2.0 * (btq * (axw - flatten_states(refs)));
  if (!input_refs.empty())
    for (int k = 0; k < n; ++k)
      q_lin.segment<4>(4 * k) -= 2.0 * (cost.R * input_refs[k]);

  Eigen::MatrixXd h(2 * nx + 2 * nu, nu);
  h.topRows(nx) = out.b_stack;
  h.middleRows(nx, nx) = -out.b_stack;
  h.middleRows(2 * nx, nu) = Eigen::MatrixXd::Identity(nu, nu);
  h.bottomRows(nu) = -Eigen::MatrixXd::Identity(nu, nu);

  Eigen::VectorXd b(2 * nx + 2 * nu);
  for (int k = 0; k < n; ++k) {
    b.segment<12>(12 * k) = boxes.x_max - axw.segment<12>(12 * k);
    b.segment<12>(nx + 12 * k) = axw.segment<12>(12 * k) - boxes.x_min;
    b.segment<4>(2 * nx + 4 * k) = boxes.u_max;
    b.segment<4>(2 * nx + nu + 4 * k) = -boxes.u_min;
  }

  out.qp.P = std::move(p);
  out.qp.q = std::move(q_lin);
  out.qp.H = std::move(h);
  out.qp.b = std::move(b);
  return out;
}

CondensedBuild build_condensed(const DiscreteLinearModel& model,
                               const CostSpec& cost,
                               const BoxConstraints& boxes, const Vec12& x0,
                               const std::vector<Vec12>& refs,
                               const std::vector<double>& forces) {
  std::vector<PredictionStep> steps(cost.horizon);
  for (auto& s : steps) {
    s.A = model.A;
    s.B = model.B;
    s.c = Vec12::Zero();
  }
  return build_condensed_general(steps, model.D, cost, boxes, x0, refs, forces,
                                 {});
}

BoxConstraints MpcConfig::deviation_boxes(const QuadrotorParams& quad) const {
  BoxConstraints b;
  b.x_max << pos_bound, att_bound, vel_bound, rate_bound;
  b.x_min = -b.x_max;
  const Vec4 hover = quad.hover_input();
  b.u_min = Vec4::Constant(quad.motor_min) - hover;
  b.u_max = Vec4::Constant(quad.motor_max) - hover;
  b.validate();
  return b;
}

CostSpec MpcConfig::cost_spec(const Mat12& a, const Mat12x4& b) const {
  CostSpec c;
  c.Q = q_diag.asDiagonal();
  c.R = r_diag.asDiagonal();
  c.horizon = horizon;
  c.Qf = terminal_from_dare ? dare(a, b, c.Q, c.R) : Mat12(c.Q);
  return c;
}

std::vector<Vec12> sample_reference_window(const QuinticTrajectory& ref,
                                           double t, int horizon, double dt) {
  std::vector<Vec12> window(horizon);
  for (int k = 1; k <= horizon; ++k) {
    const double tk = t + k * dt;
    Vec12 r = Vec12::Zero();
    r.segment<3>(kPosIdx) = ref.position(tk);
    r.segment<3>(kVelIdx) = ref.velocity(tk);
    window[k - 1] = r;
  }
  return window;
}

std::vector<double> affine_force_stack(const LinGpModel& lin,
                                       const std::vector<Vec3>& rel_stack,
                                       double max_force) {
  // Magnitude cap only (keeps runaway tangent extrapolations out of the
  // QP); the linearization itself is left as naive as it is.
  std::vector<double> forces(rel_stack.size());
  for (std::size_t k = 0; k < rel_stack.size(); ++k)
    forces[k] = std::clamp(lin.predict(rel_stack[k]), -max_force, max_force);
  return forces;
}

LinMpcController::LinMpcController(const QuadrotorParams& quad,
                                   const MpcConfig& cfg,
                                   DisturbanceModel disturbance)
    : quad_(quad),
      cfg_(cfg),
      disturbance_(std::move(disturbance)),
      model_(linearize_hover(quad, cfg.dt)),
      cost_(cfg.cost_spec(model_.A, model_.B)),
      boxes_(cfg.deviation_boxes(quad)) {
  cost_.validate();
  const int n = cfg_.horizon;
  const Eigen::Index nx = 12 * n, nu = 4 * n;

  // Build the constant pieces once; only (q, b) change per step.
  const std::vector<Vec12> zero_refs(n, Vec12::Zero());
  CondensedBuild build = build_condensed(model_, cost_, boxes_,
                                         Vec12::Zero(), zero_refs, {});
  a_stack_ = std::move(build.a_stack);
  b_stack_ = std::move(build.b_stack);

  Eigen::MatrixXd q_blk = Eigen::MatrixXd::Zero(nx, nx);
  for (int k = 0; k < n - 1; ++k) q_blk.block<12, 12>(12 * k, 12 * k) = cost_.Q;
  q_blk.bottomRightCorner<12, 12>() = cost_.Qf;
  bt_q_ = b_stack_.transpose() * q_blk;

  b_const_.resize(2 * nu);
  for (int k = 0; k < n; ++k) {
    b_const_.segment<4>(4 * k) = boxes_.u_max;
    b_const_.segment<4>(nu + 4 * k) = -boxes_.u_min;
  }
  solver_.setup(build.qp.P, build.qp.H, cfg_.qp.rho);
}

void LinMpcController::reset() {
  warm_.reset();
  last_applied_.reset();
}

ControlDecision LinMpcController::step(const DroneState& self,
                                       const QuinticTrajectory& ref, double t,
                                       const std::optional<DroneState>& other) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg_.horizon;
  const Eigen::Index nx = 12 * n, nu = 4 * n;
  const Vec12 x0 = self.to_vec();

  std::vector<double> forces;
  if (other.has_value() && disturbance_.active()) {
    const Vec3 d0 = other->position - self.position;
    const Vec3 dv = other->velocity - self.velocity;
    const LinGpModel lin = disturbance_.fixed_affine.has_value()
                               ? *disturbance_.fixed_affine
                               : disturbance_.gp->linearize(d0);
    forces = affine_force_stack(
        lin, predict_relative_stack(d0, dv, n, cfg_.dt),
        cfg_.max_predicted_force);
  }

  const Vec12 dz_col = model_.D.col(2);
  Eigen::VectorXd axw = a_stack_ * x0;
  if (!forces.empty()) {
    Vec12 w_run = Vec12::Zero();
    for (int k = 0; k < n; ++k) {
      w_run = (k == 0) ? Vec12(dz_col * forces[0])
                       : Vec12(model_.A * w_run + dz_col * forces[k]);
      axw.segment<12>(12 * k) += w_run;
    }
  }

  const std::vector<Vec12> refs = sample_reference_window(ref, t, n, cfg_.dt);
  Eigen::VectorXd q_lin = 2.0 * (bt_q_ * (axw - flatten_states(refs)));
  if (!forces.empty()) {
    // Center the input cost on the force-compensated steady input so the
    // feedforward holds the setpoint without integral action.
    for (int k = 0; k < n; ++k)
      q_lin.segment<4>(4 * k) -=
          2.0 * (cost_.R * force_compensation_input(forces[k], quad_));
  }

  Eigen::VectorXd b(2 * nx + 2 * nu);
  for (int k = 0; k < n; ++k) {
    b.segment<12>(12 * k) = boxes_.x_max - axw.segment<12>(12 * k);
    b.segment<12>(nx + 12 * k) = axw.segment<12>(12 * k) - boxes_.x_min;
  }
  b.tail(2 * nu) = b_const_;

  QpSolution sol = solver_.solve(q_lin, b, warm_ ? &*warm_ : nullptr,
                                 cfg_.qp.max_iters, cfg_.qp.tol);

  ControlDecision d;
  d.stats = sol.stats;
  d.predicted_fz = forces.empty() ? 0.0 : forces[0];
  // A budget-limited iterate is still a feasible-to-clamp control; only a
  // non-finite solve falls back to holding the previous input.
  if (!sol.primal.allFinite() && last_applied_.has_value()) {
    d.input = *last_applied_;
  } else {
    d.input.motors = (model_.u_hover + sol.primal.head<4>())
                         .cwiseMax(quad_.motor_min)
                         .cwiseMin(quad_.motor_max);
  }
  warm_ = std::move(sol);
  last_applied_ = d.input;
  d.step_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return d;
}

}  // namespace dwmpc
