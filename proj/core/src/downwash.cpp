#include "dwmpc/downwash.hpp"

#include <cmath>
#include <stdexcept>

namespace dwmpc {

void DownwashTruthParams::validate() const {
  if (!(peak_force > 0.0)) throw std::invalid_argument("peak_force must be > 0");
  if (!(radial_width > 0.0)) throw std::invalid_argument("radial_width must be > 0");
  if (!(vertical_decay > 0.0))
    throw std::invalid_argument("vertical_decay must be > 0");
  if (!(reference_separation > 0.0))
    throw std::invalid_argument("reference_separation must be > 0");
}

Vec3 true_force(const Vec3& delta, const DownwashTruthParams& params) {
  if (delta.z() <= params.activation_threshold) return Vec3::Zero();
  const double r2 = delta.x() * delta.x() + delta.y() * delta.y();
  const double radial = std::exp(-r2 / (2.0 * params.radial_width * params.radial_width));
  const double vertical = std::exp(-(delta.z() - params.reference_separation) /
                                   params.vertical_decay);
  double fz = params.peak_force * radial * vertical;
  const double cap = params.clamp_ratio * params.peak_force;
  if (fz > cap) fz = cap;
  return Vec3{0.0, 0.0, -fz};
}

double measure_force(const DroneState& state, const ControlInput& input,
                     const Vec3& accel_observed, const QuadrotorParams& quad) {
  const Wrench w = motor_to_wrench(input, quad);
  const Vec3 thrust_world = rotation_rpy(state.attitude) * Vec3{0.0, 0.0, w.thrust};
  const Vec3 gravity{0.0, 0.0, -quad.gravity};
  const Vec3 f = quad.mass * accel_observed - quad.mass * gravity - thrust_world;
  return f.z();
}

}  // namespace dwmpc
