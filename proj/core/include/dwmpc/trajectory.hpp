#pragma once

#include "dwmpc/types.hpp"

namespace dwmpc {

/// Straight-line reference with quintic time scaling: zero velocity and
/// acceleration at both endpoints, clamped to the endpoints outside the
/// active window.
class QuinticTrajectory {
 public:
  QuinticTrajectory() = default;
  QuinticTrajectory(const Vec3& start, const Vec3& goal, double duration,
                    double start_time = 0.0);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;

  const Vec3& start() const { return start_; }
  const Vec3& goal() const { return goal_; }
  double duration() const { return duration_; }

 private:
  Vec3 start_ = Vec3::Zero();
  Vec3 goal_ = Vec3::Zero();
  double duration_ = 1.0;
  double start_time_ = 0.0;
};

}  // namespace dwmpc
