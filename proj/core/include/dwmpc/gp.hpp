#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dwmpc/types.hpp"

namespace dwmpc {

enum class KernelKind { RationalQuadratic, SquaredExponential };

/// Stationary anisotropic kernel on 3-vectors. Scaled squared distance
/// s = sum_i ((a_i - b_i) / l_i)^2; rational quadratic evaluates
/// sigma_f^2 (1 + s / (2 alpha))^(-alpha), squared exponential its
/// alpha -> inf limit sigma_f^2 exp(-s / 2).
struct Kernel {
  KernelKind kind = KernelKind::RationalQuadratic;
  double signal_var = 0.0025;          // sigma_f^2
  Vec3 length_scales{0.1, 0.1, 0.15};  // per input dimension
  double alpha = 1.0;                  // rational quadratic shape

  void validate() const;
  double operator()(const Vec3& a, const Vec3& b) const;

  /// Gradient of k(a, x) with respect to the second argument at x = b.
  Vec3 grad_second(const Vec3& a, const Vec3& b) const;

  /// Evaluation restricted to the dimensions in `dims` (additive-GP
  /// component kernels act on a subset of the input).
  double eval_dims(const Vec3& a, const Vec3& b,
                   const std::vector<int>& dims) const;
};

/// Training data for the downwash force model: inputs are relative
/// positions d = p_upper - p_lower (m), targets the measured z-axis
/// disturbance force (N).
struct ForceDataset {
  std::vector<Vec3> inputs;
  std::vector<double> targets;

  std::size_t size() const { return inputs.size(); }
  void append(const Vec3& d, double fz);
  void validate() const;
};

/// Affine force model D d + c obtained by linearizing a GP mean at an
/// operating relative position d0. Exact at d0 by construction.
struct LinGpModel {
  Vec3 operating_point = Vec3::Zero();
  RowVec3 gradient = RowVec3::Zero();  // N per m
  double offset = 0.0;                 // N
  double validity_radius = 0.0;        // diagnostic only

  double predict(const Vec3& d) const { return gradient.dot(d) + offset; }
};

/// Exact GP posterior over a scalar output. Fitting factors K + sigma^2 I
/// once (Cholesky with jitter escalation); predictions are read-only.
class GpModel {
 public:
  GpModel() = default;

  static GpModel fit(ForceDataset dataset, const Kernel& kernel,
                     double noise_var);

  double predict_mean(const Vec3& d) const;
  double predict_var(const Vec3& d) const;
  LinGpModel linearize(const Vec3& d0) const;

  const ForceDataset& dataset() const { return data_; }
  const Kernel& kernel() const { return kernel_; }
  double noise_var() const { return noise_var_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double applied_jitter() const { return applied_jitter_; }
  bool fitted() const { return !data_.inputs.empty(); }

 private:
  Eigen::VectorXd cross_covariance(const Vec3& d) const;

  Kernel kernel_;
  ForceDataset data_;
  double noise_var_ = 0.0;
  double applied_jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
};

/// Additive GP: independent component priors on disjoint input dimension
/// groups, sharing one set of observations. The joint kernel matrix is
/// the sum of the component matrices; component posteriors reuse the
/// shared factorization.
class AdditiveGp {
 public:
  static AdditiveGp fit(ForceDataset dataset, std::vector<Kernel> kernels,
                        std::vector<std::vector<int>> groups, double noise_var);

  double component_mean(int m, const Vec3& x) const;
  double component_var(int m, const Vec3& x) const;
  double mean(const Vec3& x) const;  // sum of component means

  int num_components() const { return static_cast<int>(kernels_.size()); }
  const ForceDataset& dataset() const { return data_; }

 private:
  Eigen::VectorXd component_cross(int m, const Vec3& x) const;

  std::vector<Kernel> kernels_;
  std::vector<std::vector<int>> groups_;
  ForceDataset data_;
  double noise_var_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
};

/// Factor K + sigma^2 I, escalating jitter from 1e-10 to 1e-6 before
/// giving up. Returns the jitter that was applied.
double cholesky_with_jitter(const Eigen::MatrixXd& k, double noise_var,
                            Eigen::LLT<Eigen::MatrixXd>& out);

}  // namespace dwmpc
