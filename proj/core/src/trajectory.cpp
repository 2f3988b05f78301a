#include "dwmpc/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace dwmpc {

QuinticTrajectory::QuinticTrajectory(const Vec3& start, const Vec3& goal,
                                     double duration, double start_time)
    : start_(start), goal_(goal), duration_(duration), start_time_(start_time) {
  if (!(duration > 0.0)) throw std::invalid_argument("trajectory duration must be > 0");
}

Vec3 QuinticTrajectory::position(double t) const {
  const double tau = std::clamp((t - start_time_) / duration_, 0.0, 1.0);
  const double s = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
  return start_ + s * (goal_ - start_);
}

Vec3 QuinticTrajectory::velocity(double t) const {
  const double tau = (t - start_time_) / duration_;
  if (tau <= 0.0 || tau >= 1.0) return Vec3::Zero();
  const double ds = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / duration_;
  return ds * (goal_ - start_);
}

Vec3 QuinticTrajectory::acceleration(double t) const {
  const double tau = (t - start_time_) / duration_;
  if (tau <= 0.0 || tau >= 1.0) return Vec3::Zero();
  const double dds =
      (60.0 * tau - 180.0 * tau * tau + 120.0 * tau * tau * tau) /
      (duration_ * duration_);
  return dds * (goal_ - start_);
}

}  // namespace dwmpc
