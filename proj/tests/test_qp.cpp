#include "dwmpc/qp.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "dwmpc/rng.hpp"
#include "oracles.hpp"

using namespace dwmpc;

namespace {

CondensedQp random_strictly_convex_qp(Rng& rng, int n, int m) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.gaussian();
  CondensedQp qp;
  qp.P = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  qp.q.resize(n);
  for (int i = 0; i < n; ++i) qp.q(i) = rng.gaussian();
  qp.H.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) qp.H(i, j) = rng.gaussian();
  qp.b = Eigen::VectorXd::Constant(m, 2.0);
  return qp;
}

Eigen::VectorXd dense_unconstrained_solution(const CondensedQp& qp) {
  const auto n = qp.P.rows();
  oracle::Matrix a(n, std::vector<double>(n));
  std::vector<double> b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b[static_cast<std::size_t>(i)] = -qp.q(i);
    for (Eigen::Index j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = qp.P(i, j);
  }
  const auto x = oracle::gauss_solve(std::move(a), std::move(b));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = x[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

TEST(AdmmSolver, LooseConstraintsMatchDenseUnconstrainedSolve) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    CondensedQp qp = random_strictly_convex_qp(rng, 8, 12);
    qp.b = Eigen::VectorXd::Constant(12, 1e4);  // inactive box

    QpSettings settings;
    settings.tol = 1e-9;
    settings.max_iters = 4000;
    const QpSolution sol = solve_qp(qp, nullptr, settings);
    ASSERT_TRUE(sol.stats.converged);

    const Eigen::VectorXd ref = dense_unconstrained_solution(qp);
    EXPECT_LT((sol.primal - ref).cwiseAbs().maxCoeff(),
              1e-6 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}

TEST(AdmmSolver, SingleActiveBoxMatchesHandKkt) {
  // min (x0 - 2)^2 + (x1 + 1)^2 s.t. x0 <= 1.
  // Optimum clamps x0 at 1, x1 = -1; lambda = 2 (1 - 2) ... = 2.
  CondensedQp qp;
  qp.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.q.resize(2);
  qp.q << -4.0, 2.0;
  qp.H.resize(1, 2);
  qp.H << 1.0, 0.0;
  qp.b.resize(1);
  qp.b << 1.0;

  QpSettings settings;
  settings.tol = 1e-10;
  settings.max_iters = 5000;
  const QpSolution sol = solve_qp(qp, nullptr, settings);
  ASSERT_TRUE(sol.stats.converged);
  EXPECT_NEAR(sol.primal(0), 1.0, 1e-7);
  EXPECT_NEAR(sol.primal(1), -1.0, 1e-7);
  EXPECT_NEAR(sol.dual(0), 2.0, 1e-6);
}

TEST(AdmmSolver, WarmStartedResolveConvergesImmediately) {
  Rng rng(5);
  CondensedQp qp = random_strictly_convex_qp(rng, 10, 20);
  QpSettings settings;
  settings.tol = 1e-8;
  settings.max_iters = 5000;
  const QpSolution first = solve_qp(qp, nullptr, settings);
  ASSERT_TRUE(first.stats.converged);

  const QpSolution second = solve_qp(qp, &first, settings);
  ASSERT_TRUE(second.stats.converged);
  EXPECT_LE(second.stats.iterations, 2);
}

TEST(AdmmSolver, KktResidualsOnRandomProblems) {
  Rng rng(9);
  QpSettings settings;
  settings.tol = 1e-7;
  settings.max_iters = 20000;
  for (int trial = 0; trial < 20; ++trial) {
    const CondensedQp qp = random_strictly_convex_qp(rng, 12, 18);
    const QpSolution sol = solve_qp(qp, nullptr, settings);
    ASSERT_TRUE(sol.stats.converged) << "trial " << trial;
    const KktResiduals kkt = check_kkt(qp, sol.primal, sol.dual);
    EXPECT_LE(kkt.primal_feasibility, settings.tol);
    EXPECT_LE(kkt.stationarity, 10.0 * settings.tol);
    EXPECT_LE(kkt.complementarity, 10.0 * settings.tol);
    EXPECT_LE(kkt.dual_feasibility, 1e-12);
  }
}

TEST(AdmmSolver, ReportsNonConvergenceOnTinyBudget) {
  Rng rng(13);
  CondensedQp qp = random_strictly_convex_qp(rng, 10, 16);
  QpSettings settings;
  settings.tol = 1e-12;
  settings.max_iters = 2;
  const QpSolution sol = solve_qp(qp, nullptr, settings);
  EXPECT_FALSE(sol.stats.converged);
  EXPECT_EQ(sol.stats.iterations, 2);
  EXPECT_TRUE(sol.primal.allFinite());
}

TEST(AdmmSolver, DeterministicGivenInputs) {
  Rng rng(17);
  const CondensedQp qp = random_strictly_convex_qp(rng, 10, 16);
  QpSettings settings;
  const QpSolution a = solve_qp(qp, nullptr, settings);
  const QpSolution b = solve_qp(qp, nullptr, settings);
  EXPECT_EQ(a.stats.iterations, b.stats.iterations);
  EXPECT_EQ((a.primal - b.primal).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CondensedQp, ValidateCatchesDimensionMismatch) {
  CondensedQp qp;
  qp.P = Eigen::MatrixXd::Identity(3, 3);
  qp.q = Eigen::VectorXd::Zero(2);
  qp.H = Eigen::MatrixXd::Zero(1, 3);
  qp.b = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(qp.validate(), std::invalid_argument);
}
