#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dwmpc/dynamics.hpp"
#include "dwmpc/gp.hpp"
#include "dwmpc/qp.hpp"
#include "dwmpc/trajectory.hpp"
#include "dwmpc/types.hpp"

namespace dwmpc {

struct CostSpec {
  Mat12 Q = Mat12::Identity();    // state stage cost, PSD
  Mat4 R = 0.1 * Mat4::Identity();  // input stage cost, PD
  Mat12 Qf = Mat12::Identity();   // terminal cost, PSD
  int horizon = 15;

  void validate_matrices() const;  // symmetry and definiteness only
  void validate() const;           // matrices plus horizon >= 2
};

/// Componentwise bounds. For the hover-linear controller these are
/// deviations from the operating point; zero must be strictly interior.
struct BoxConstraints {
  Vec12 x_min, x_max;
  Vec4 u_min, u_max;

  void validate() const;
};

struct RiccatiSolution {
  std::vector<Mat4x12> gains;        // K_k, k = 0..N-1
  std::vector<Vec4> feedforward;     // d_k
  std::vector<Mat12> cost_to_go;     // P_k, k = 0..N
  std::vector<Vec12> cost_to_go_lin; // p_k

  /// u_k = -K_k x_k - d_k.
  Vec4 input(int k, const Vec12& x) const {
    return -(gains[k] * x) - feedforward[k];
  }
};

/// Backward Riccati recursion for the affine-quadratic tracking problem
///   J = sum_{k=1}^{N} 1/2 x_k' Q_k x_k + q_k' x_k
///     + sum_{k=0}^{N-1} 1/2 u_k' R u_k + r_k' u_k,
///   x_{k+1} = A x_k + B u_k + w_k,
/// with Q_N = Qf. Linear terms and offsets may be empty (treated as
/// zero); sizes otherwise N (state terms are q_1..q_N).
RiccatiSolution riccati_lqr(const Mat12& a, const Mat12x4& b,
                            const CostSpec& cost,
                            const std::vector<Vec12>& state_lin = {},
                            const std::vector<Vec4>& input_lin = {},
                            const std::vector<Vec12>& offsets = {});

/// Infinite-horizon discrete Riccati fixed point (used for Qf).
Mat12 dare(const Mat12& a, const Mat12x4& b, const Mat12& q, const Mat4& r);

/// Constant-relative-velocity propagation of the relative position:
/// d_k = d0 + k dt v_rel for k = 0..N-1.
std::vector<Vec3> predict_relative_stack(const Vec3& rel_pos,
                                         const Vec3& rel_vel, int horizon,
                                         double dt);

/// Condensed QP together with the prediction stacks it was built from.
/// Decision variable is the stacked input sequence (4N); predicted
/// states satisfy X = a_stack x0 + b_stack U + w_stack.
struct CondensedBuild {
  CondensedQp qp;
  Eigen::MatrixXd a_stack;  // 12N x 12
  Eigen::MatrixXd b_stack;  // 12N x 4N
  Eigen::VectorXd w_stack;  // 12N
};

/// One step of a (possibly time-varying) affine prediction model.
struct PredictionStep {
  Mat12 A;
  Mat12x4 B;
  Vec12 c = Vec12::Zero();
};

/// General condensed construction. refs holds r_1..r_N; forces holds the
/// predicted z disturbance force (N) entering through d_map at steps
/// 0..N-1. input_refs (empty, or one per step) centers the input cost;
/// the controllers pass the disturbance-compensated steady input there
/// so a persistent predicted force leaves no cost gradient at the
/// zero-error trajectory (offset-free feedforward).
CondensedBuild build_condensed_general(
    const std::vector<PredictionStep>& steps, const Mat12x3& d_map,
    const CostSpec& cost, const BoxConstraints& boxes, const Vec12& x0,
    const std::vector<Vec12>& refs, const std::vector<double>& forces,
    const std::vector<Vec4>& input_refs);

/// Per-motor input offset that exactly balances a predicted z force
/// through the collective thrust channel.
Vec4 force_compensation_input(double fz, const QuadrotorParams& quad);

/// Hover-linear condensed QP in deviation coordinates, block-Toeplitz
/// prediction matrices built from the fixed (A, B) pair.
CondensedBuild build_condensed(const DiscreteLinearModel& model,
                               const CostSpec& cost,
                               const BoxConstraints& boxes, const Vec12& x0,
                               const std::vector<Vec12>& refs,
                               const std::vector<double>& forces);

/// Controller-facing disturbance source: either a fitted GP (linearized
/// online at the current relative position) or a fixed affine model
/// supplied directly (exact-model injection in tests).
struct DisturbanceModel {
  const GpModel* gp = nullptr;
  std::optional<LinGpModel> fixed_affine;

  bool active() const { return gp != nullptr || fixed_affine.has_value(); }
};

struct MpcConfig {
  int horizon = 15;
  double dt = 0.02;
  Vec12 q_diag = (Vec12() << 100, 100, 100, 10, 10, 10, 10, 10, 10, 1, 1, 1)
                     .finished();
  Vec4 r_diag = Vec4::Constant(0.1);
  bool terminal_from_dare = true;
  Vec3 pos_bound = Vec3::Constant(2.0);    // |p| box half-width
  Vec3 att_bound = Vec3::Constant(0.5);    // rad
  Vec3 vel_bound = Vec3::Constant(5.0);    // m/s
  Vec3 rate_bound = Vec3::Constant(20.0);  // rad/s
  double max_predicted_force = 0.5;        // N, sanity cap on GP extrapolation
  QpSettings qp;

  BoxConstraints deviation_boxes(const QuadrotorParams& quad) const;
  CostSpec cost_spec(const Mat12& a, const Mat12x4& b) const;
};

struct ControlDecision {
  ControlInput input;
  double predicted_fz = 0.0;  // first-step disturbance seen by the QP
  SolveStats stats;
  long long step_ns = 0;      // GP linearization + build + solve
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlDecision step(const DroneState& self,
                               const QuinticTrajectory& ref, double t,
                               const std::optional<DroneState>& other) = 0;
  virtual void reset() {}
};

/// Adaptive linear MPC on the hover-linearized model with the LinGP
/// disturbance folded into the prediction (LinMPC-LinGP). P and H never
/// change across steps, so the QP factorization is computed once and
/// every step only refreshes (q, b) and resolves warm-started.
class LinMpcController : public Controller {
 public:
  LinMpcController(const QuadrotorParams& quad, const MpcConfig& cfg,
                   DisturbanceModel disturbance);

  ControlDecision step(const DroneState& self, const QuinticTrajectory& ref,
                       double t, const std::optional<DroneState>& other) override;
  void reset() override;

  const DiscreteLinearModel& model() const { return model_; }
  const CostSpec& cost() const { return cost_; }

 private:
  QuadrotorParams quad_;
  MpcConfig cfg_;
  DisturbanceModel disturbance_;
  DiscreteLinearModel model_;
  CostSpec cost_;
  BoxConstraints boxes_;

  Eigen::MatrixXd a_stack_;   // 12N x 12
  Eigen::MatrixXd bt_q_;      // 4N x 12N, b_stack' blkdiag(Q..Qf)
  Eigen::MatrixXd b_stack_;
  Eigen::VectorXd b_const_;   // constant input-bound rows of b
  AdmmQpSolver solver_;
  std::optional<QpSolution> warm_;
  std::optional<ControlInput> last_applied_;
};

/// Horizon of reference states r_1..r_N sampled from a trajectory
/// (position and velocity rows populated, attitude and rates zero).
std::vector<Vec12> sample_reference_window(const QuinticTrajectory& ref,
                                           double t, int horizon, double dt);

/// Predicted disturbance forces along the horizon from an affine force
/// model and the constant-relative-velocity offset stack, clamped to
/// +-max_force.
std::vector<double> affine_force_stack(const LinGpModel& lin,
                                       const std::vector<Vec3>& rel_stack,
                                       double max_force);

}  // namespace dwmpc
