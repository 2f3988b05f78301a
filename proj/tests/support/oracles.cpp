#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

std::vector<double> gauss_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n) throw std::invalid_argument("gauss_solve: bad sizes");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300)
      throw std::runtime_error("gauss_solve: singular matrix");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
    x[ri] = s / a[ri][ri];
  }
  return x;
}

double rq_kernel(const dwmpc::Vec3& a, const dwmpc::Vec3& b, double signal_var,
                 const dwmpc::Vec3& ls, double alpha) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = (a(i) - b(i)) / ls(i);
    s += d * d;
  }
  return signal_var * std::pow(1.0 + s / (2.0 * alpha), -alpha);
}

double se_kernel(const dwmpc::Vec3& a, const dwmpc::Vec3& b, double signal_var,
                 const dwmpc::Vec3& ls) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = (a(i) - b(i)) / ls(i);
    s += d * d;
  }
  return signal_var * std::exp(-0.5 * s);
}

std::vector<double> gp_weights(
    const std::vector<dwmpc::Vec3>& xs, const std::vector<double>& ys,
    double noise_var,
    const std::function<double(const dwmpc::Vec3&, const dwmpc::Vec3&)>& kernel) {
  const std::size_t n = xs.size();
  Matrix k(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      k[i][j] = kernel(xs[i], xs[j]) + (i == j ? noise_var : 0.0);
  return gauss_solve(std::move(k), ys);
}

GpPosterior gp_posterior(
    const std::vector<dwmpc::Vec3>& xs, const std::vector<double>& ys,
    double noise_var, const dwmpc::Vec3& query,
    const std::function<double(const dwmpc::Vec3&, const dwmpc::Vec3&)>& kernel) {
  const std::size_t n = xs.size();
  std::vector<double> kt(n);
  for (std::size_t i = 0; i < n; ++i) kt[i] = kernel(xs[i], query);

  const std::vector<double> w = gp_weights(xs, ys, noise_var, kernel);
  Matrix k(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      k[i][j] = kernel(xs[i], xs[j]) + (i == j ? noise_var : 0.0);
  const std::vector<double> kinv_kt = gauss_solve(std::move(k), kt);

  GpPosterior p{0.0, kernel(query, query)};
  for (std::size_t i = 0; i < n; ++i) {
    p.mean += kt[i] * w[i];
    p.var -= kt[i] * kinv_kt[i];
  }
  return p;
}

dwmpc::Vec3 fd_gradient(const std::function<double(const dwmpc::Vec3&)>& f,
                        const dwmpc::Vec3& x, double step) {
  dwmpc::Vec3 g;
  for (int i = 0; i < 3; ++i) {
    dwmpc::Vec3 xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace oracle
