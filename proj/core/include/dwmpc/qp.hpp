#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace dwmpc {

/// Inequality-constrained QP in standard form:
///   min 1/2 u' P u + q' u   s.t.  H u <= b.
/// P must be symmetric positive definite.
struct CondensedQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd H;
  Eigen::VectorXd b;

  void validate() const;
};

struct QpSettings {
  double rho = 1.0;       // initial ADMM penalty
  int max_iters = 200;
  double tol = 1e-5;      // primal and dual residual target
};

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  long long solve_ns = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct QpSolution {
  Eigen::VectorXd primal;  // u
  Eigen::VectorXd dual;    // lambda >= 0 for H u <= b
  Eigen::VectorXd slack;   // consensus copy of H u
  SolveStats stats;
};

struct KktResiduals {
  double primal_feasibility = 0.0;   // ||(H u - b)_+||_inf
  double stationarity = 0.0;         // ||P u + q + H' lambda||_inf
  double complementarity = 0.0;      // max |lambda_i (H u - b)_i|
  double dual_feasibility = 0.0;     // max(0, -min lambda_i)
};

KktResiduals check_kkt(const CondensedQp& qp, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& lambda);

/// Operator-splitting (ADMM) solver. The factorization of P + rho H'H is
/// cached and reused across solves with new (q, b), which is what makes
/// the receding-horizon controller cheap per step. The penalty is
/// rebalanced against the primal/dual residual ratio every few dozen
/// iterations (with a refactorization); at a warm-started steady state
/// the cached factor never changes.
class AdmmQpSolver {
 public:
  AdmmQpSolver() = default;

  void setup(const Eigen::MatrixXd& p, const Eigen::MatrixXd& h, double rho);
  bool is_setup() const { return n_ > 0; }
  double current_rho() const { return rho_; }

  /// Solve for given linear terms and bounds. `warm` seeds (u, lambda,
  /// slack) from a previous solution; pass nullptr for a cold start.
  QpSolution solve(const Eigen::VectorXd& q, const Eigen::VectorXd& b,
                   const QpSolution* warm, int max_iters, double tol);

 private:
  void factorize();

  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  double rho_ = 0.0;
  Eigen::MatrixXd p_;
  Eigen::MatrixXd h_;
  Eigen::MatrixXd ht_;   // H' stored explicitly for the iteration products
  Eigen::MatrixXd hth_;
  Eigen::LLT<Eigen::MatrixXd> factor_;  // P + rho H'H

  // Iteration work buffers; solve() is hot inside the control loop.
  Eigen::VectorXd rhs_, hu_, z_new_, resid_, dual_work_;
};

/// One-shot convenience wrapper (setup + solve).
QpSolution solve_qp(const CondensedQp& qp, const QpSolution* warm,
                    const QpSettings& settings);

}  // namespace dwmpc
