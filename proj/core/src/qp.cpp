#include "dwmpc/qp.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace dwmpc {

namespace {

constexpr int kAdaptInterval = 25;
constexpr double kAdaptThreshold = 10.0;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

}  // namespace

void CondensedQp::validate() const {
  const auto n = P.rows();
  if (P.cols() != n || q.size() != n)
    throw std::invalid_argument("qp dimension mismatch between P and q");
  if (H.cols() != n || b.size() != H.rows())
    throw std::invalid_argument("qp dimension mismatch between H and b");
  if (!P.allFinite() || !q.allFinite() || !H.allFinite())
    throw std::invalid_argument("qp contains non-finite entries");
}

KktResiduals check_kkt(const CondensedQp& qp, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& lambda) {
  KktResiduals r;
  const Eigen::VectorXd violation = qp.H * u - qp.b;
  r.primal_feasibility = violation.cwiseMax(0.0).maxCoeff();
  r.stationarity =
      (qp.P * u + qp.q + qp.H.transpose() * lambda).cwiseAbs().maxCoeff();
  r.complementarity = (lambda.array() * violation.array()).abs().maxCoeff();
  r.dual_feasibility = std::max(0.0, -lambda.minCoeff());
  return r;
}

void AdmmQpSolver::setup(const Eigen::MatrixXd& p, const Eigen::MatrixXd& h,
                         double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  n_ = p.rows();
  m_ = h.rows();
  rho_ = rho;
  p_ = p;
  h_ = h;
  ht_ = h.transpose();
  hth_ = ht_ * h;
  rhs_.resize(n_);
  hu_.resize(m_);
  z_new_.resize(m_);
  resid_.resize(m_);
  dual_work_.resize(n_);
  factorize();
}

void AdmmQpSolver::factorize() {
  factor_.compute(p_ + rho_ * hth_);
  if (factor_.info() != Eigen::Success)
    throw std::runtime_error("ADMM setup: P + rho H'H not positive definite");
}

QpSolution AdmmQpSolver::solve(const Eigen::VectorXd& q,
                               const Eigen::VectorXd& b,
                               const QpSolution* warm, int max_iters,
                               double tol) {
  if (!is_setup()) throw std::logic_error("solver used before setup");
  const auto t0 = std::chrono::steady_clock::now();

  Eigen::VectorXd u, z, lambda;
  if (warm != nullptr && warm->primal.size() == n_ &&
      warm->dual.size() == m_ && warm->slack.size() == m_) {
    u = warm->primal;
    z = warm->slack;
    lambda = warm->dual;
  } else {
    u = Eigen::VectorXd::Zero(n_);
    lambda = Eigen::VectorXd::Zero(m_);
    z = (h_ * u).cwiseMin(b);
  }

  QpSolution sol;
  for (int it = 1; it <= max_iters; ++it) {
    resid_ = rho_ * z - lambda;
    rhs_.noalias() = ht_ * resid_;
    rhs_ -= q;
    u = factor_.solve(rhs_);
    hu_.noalias() = h_ * u;
    z_new_ = (hu_ + lambda / rho_).cwiseMin(b);
    lambda += rho_ * (hu_ - z_new_);

    const double primal_res = (hu_ - z_new_).cwiseAbs().maxCoeff();
    z_new_.swap(z);          // z <- z_new, z_new_ now holds the old z
    resid_ = z - z_new_;     // change in the consensus variable
    dual_work_.noalias() = ht_ * resid_;
    const double dual_res = rho_ * dual_work_.cwiseAbs().maxCoeff();
    sol.stats.iterations = it;
    sol.stats.primal_residual = primal_res;
    sol.stats.dual_residual = dual_res;
    if (primal_res <= tol && dual_res <= tol) {
      sol.stats.converged = true;
      break;
    }

    // Residual balancing: a penalty far off scale stalls one of the two
    // residuals; rescale and refactor, sticky across later solves.
    if (it % kAdaptInterval == 0) {
      const double ratio = (primal_res + 1e-300) / (dual_res + 1e-300);
      if (ratio > kAdaptThreshold || ratio < 1.0 / kAdaptThreshold) {
        const double new_rho =
            std::clamp(rho_ * std::sqrt(ratio), kRhoMin, kRhoMax);
        if (new_rho != rho_) {
          rho_ = new_rho;
          factorize();
        }
      }
    }
  }

  sol.primal = std::move(u);
  sol.slack = std::move(z);
  sol.dual = std::move(lambda);
  sol.stats.solve_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return sol;
}

QpSolution solve_qp(const CondensedQp& qp, const QpSolution* warm,
                    const QpSettings& settings) {
  qp.validate();
  AdmmQpSolver solver;
  solver.setup(qp.P, qp.H, settings.rho);
  return solver.solve(qp.q, qp.b, warm, settings.max_iters, settings.tol);
}

}  // namespace dwmpc
