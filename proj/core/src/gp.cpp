#include "dwmpc/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace dwmpc {

void Kernel::validate() const {
  if (!(signal_var > 0.0)) throw std::invalid_argument("signal variance must be > 0");
  if (!(length_scales.array() > 0.0).all())
    throw std::invalid_argument("length scales must be > 0");
  if (kind == KernelKind::RationalQuadratic && !(alpha > 0.0))
    throw std::invalid_argument("rational quadratic alpha must be > 0");
}

double Kernel::operator()(const Vec3& a, const Vec3& b) const {
  const Vec3 scaled = (a - b).cwiseQuotient(length_scales);
  const double s = scaled.squaredNorm();
  if (kind == KernelKind::SquaredExponential)
    return signal_var * std::exp(-0.5 * s);
  return signal_var * std::pow(1.0 + s / (2.0 * alpha), -alpha);
}

Vec3 Kernel::grad_second(const Vec3& a, const Vec3& b) const {
  const Vec3 diff_scaled = (b - a).cwiseQuotient(length_scales.cwiseAbs2());
  const double s = (a - b).cwiseQuotient(length_scales).squaredNorm();
  double factor;
  if (kind == KernelKind::SquaredExponential) {
    factor = -signal_var * std::exp(-0.5 * s);
  } else {
    factor = -signal_var * std::pow(1.0 + s / (2.0 * alpha), -alpha - 1.0);
  }
  return factor * diff_scaled;
}

double Kernel::eval_dims(const Vec3& a, const Vec3& b,
                         const std::vector<int>& dims) const {
  double s = 0.0;
  for (int i : dims) {
    const double d = (a(i) - b(i)) / length_scales(i);
    s += d * d;
  }
  if (kind == KernelKind::SquaredExponential)
    return signal_var * std::exp(-0.5 * s);
  return signal_var * std::pow(1.0 + s / (2.0 * alpha), -alpha);
}

void ForceDataset::append(const Vec3& d, double fz) {
  inputs.push_back(d);
  targets.push_back(fz);
}

void ForceDataset::validate() const {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("dataset inputs/targets size mismatch");
  for (const auto& x : inputs)
    if (!x.allFinite()) throw std::invalid_argument("non-finite dataset input");
  for (double y : targets)
    if (!std::isfinite(y)) throw std::invalid_argument("non-finite dataset target");
}

double cholesky_with_jitter(const Eigen::MatrixXd& k, double noise_var,
                            Eigen::LLT<Eigen::MatrixXd>& out) {
  const auto n = k.rows();
  Eigen::MatrixXd reg = k;
  reg.diagonal().array() += noise_var;
  out.compute(reg);
  if (out.info() == Eigen::Success) return 0.0;
  for (double jitter = 1e-10; jitter <= 1e-6; jitter *= 100.0) {
    Eigen::MatrixXd j = reg;
    j.diagonal().array() += jitter;
    out.compute(j);
    if (out.info() == Eigen::Success) return jitter;
  }
  throw std::runtime_error(
      "kernel matrix not positive definite after jitter escalation; "
      "check kernel parameters and noise variance (n=" + std::to_string(n) + ")");
}

GpModel GpModel::fit(ForceDataset dataset, const Kernel& kernel,
                     double noise_var) {
  dataset.validate();
  kernel.validate();
  if (dataset.inputs.empty())
    throw std::invalid_argument("cannot fit a GP on an empty dataset");
  if (!(noise_var > 0.0))
    throw std::invalid_argument("noise variance must be > 0");

  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      k(i, j) = k(j, i) = kernel(dataset.inputs[i], dataset.inputs[j]);

  GpModel gp;
  gp.applied_jitter_ = cholesky_with_jitter(k, noise_var, gp.chol_);
  gp.weights_ = gp.chol_.solve(
      Eigen::Map<const Eigen::VectorXd>(dataset.targets.data(), n));
  gp.kernel_ = kernel;
  gp.data_ = std::move(dataset);
  gp.noise_var_ = noise_var;
  return gp;
}

Eigen::VectorXd GpModel::cross_covariance(const Vec3& d) const {
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::VectorXd kt(n);
  for (Eigen::Index i = 0; i < n; ++i) kt(i) = kernel_(data_.inputs[i], d);
  return kt;
}

double GpModel::predict_mean(const Vec3& d) const {
  return cross_covariance(d).dot(weights_);
}

double GpModel::predict_var(const Vec3& d) const {
  const Eigen::VectorXd kt = cross_covariance(d);
  const double var = kernel_(d, d) - kt.dot(chol_.solve(kt));
  return var > 0.0 ? var : 0.0;
}

LinGpModel GpModel::linearize(const Vec3& d0) const {
  if (!d0.allFinite()) throw std::invalid_argument("non-finite operating point");
  LinGpModel lin;
  lin.operating_point = d0;
  Vec3 grad = Vec3::Zero();
  for (std::size_t i = 0; i < data_.size(); ++i)
    grad += weights_(static_cast<Eigen::Index>(i)) *
            kernel_.grad_second(data_.inputs[i], d0);
  lin.gradient = grad.transpose();
  lin.offset = predict_mean(d0) - lin.gradient.dot(d0);
  lin.validity_radius = kernel_.length_scales.minCoeff();
  return lin;
}

AdditiveGp AdditiveGp::fit(ForceDataset dataset, std::vector<Kernel> kernels,
                           std::vector<std::vector<int>> groups,
                           double noise_var) {
  dataset.validate();
  if (dataset.inputs.empty())
    throw std::invalid_argument("cannot fit an additive GP on an empty dataset");
  if (kernels.size() != groups.size() || kernels.empty())
    throw std::invalid_argument("need one kernel per dimension group");
  bool used[3] = {false, false, false};
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty dimension group");
    for (int d : g) {
      if (d < 0 || d > 2) throw std::invalid_argument("group dimension out of range");
      if (used[d]) throw std::invalid_argument("dimension groups must be disjoint");
      used[d] = true;
    }
  }
  for (const auto& k : kernels) k.validate();

  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd ksum = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 0; m < kernels.size(); ++m)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) {
        const double v =
            kernels[m].eval_dims(dataset.inputs[i], dataset.inputs[j], groups[m]);
        ksum(i, j) += v;
        if (j != i) ksum(j, i) += v;
      }

  AdditiveGp agp;
  cholesky_with_jitter(ksum, noise_var, agp.chol_);
  agp.weights_ = agp.chol_.solve(
      Eigen::Map<const Eigen::VectorXd>(dataset.targets.data(), n));
  agp.kernels_ = std::move(kernels);
  agp.groups_ = std::move(groups);
  agp.data_ = std::move(dataset);
  agp.noise_var_ = noise_var;
  return agp;
}

Eigen::VectorXd AdditiveGp::component_cross(int m, const Vec3& x) const {
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::VectorXd kt(n);
  for (Eigen::Index i = 0; i < n; ++i)
    kt(i) = kernels_[m].eval_dims(data_.inputs[i], x, groups_[m]);
  return kt;
}

double AdditiveGp::component_mean(int m, const Vec3& x) const {
  return component_cross(m, x).dot(weights_);
}

double AdditiveGp::component_var(int m, const Vec3& x) const {
  const Eigen::VectorXd kt = component_cross(m, x);
  const double var = kernels_[m].eval_dims(x, x, groups_[m]) -
                     kt.dot(chol_.solve(kt));
  return var > 0.0 ? var : 0.0;
}

double AdditiveGp::mean(const Vec3& x) const {
  double s = 0.0;
  for (int m = 0; m < num_components(); ++m) s += component_mean(m, x);
  return s;
}

}  // namespace dwmpc
