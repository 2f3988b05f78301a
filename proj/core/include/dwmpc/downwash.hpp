#pragma once

#include "dwmpc/dynamics.hpp"
#include "dwmpc/types.hpp"

namespace dwmpc {

/// Synthetic ground-truth downwash field: Gaussian radial profile times
/// exponential vertical decay, calibrated so a 0.30 m vertical
/// separation produces 9 gram-force (0.0883 N) of downward push.
struct DownwashTruthParams {
  double peak_force = 0.0883;      // N at reference separation, on axis
  double radial_width = 0.10;      // m
  double vertical_decay = 0.20;    // m
  double reference_separation = 0.30;  // m
  double activation_threshold = 0.05;  // m, force off when dz below this
  double clamp_ratio = 3.0;        // |fz| <= clamp_ratio * peak_force

  void validate() const;
};

/// Downwash force (world frame, N) on the lower drone given
/// delta = p_upper - p_lower. Zero when the other drone is not above.
Vec3 true_force(const Vec3& delta, const DownwashTruthParams& params);

/// z-component of the disturbance recovered from observed acceleration:
/// fz = (m a_obs - m g - R f_u) . e_z. Inverts the translational
/// dynamics; in simulation this equals the injected force plus any
/// measurement noise added by the caller.
double measure_force(const DroneState& state, const ControlInput& input,
                     const Vec3& accel_observed, const QuadrotorParams& quad);

}  // namespace dwmpc
