#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dwmpc/baselines.hpp"
#include "dwmpc/downwash.hpp"
#include "dwmpc/dynamics.hpp"
#include "dwmpc/gp.hpp"
#include "dwmpc/mpc.hpp"
#include "dwmpc/trajectory.hpp"

namespace dwmpc {

enum class DisturbMode {
  WhicheverLower,   // force follows the instantaneous vertical ordering
  DesignatedLower,  // only the drone that started lower is ever disturbed
  Off
};

/// Two-drone (or single-drone) episode description. Drone 0 is the upper
/// drone by convention; references must start at the initial positions.
struct Scenario {
  int num_drones = 2;
  std::array<DroneState, 2> initial{};
  std::array<QuinticTrajectory, 2> reference{};
  std::array<ControllerKind, 2> controller{ControllerKind::LinMpcLinGp,
                                           ControllerKind::LinMpcLinGp};
  double separation = 0.0;  // nominal height difference, m
  double duration = 6.0;    // s
  std::uint64_t seed = 0;

  void validate(double dt, int horizon) const;
};

struct DroneTrace {
  std::vector<double> t;
  std::vector<Vec3> position;
  std::vector<Vec3> ref_position;
  std::vector<double> fz_true;
  std::vector<double> fz_pred;
  std::vector<long long> solve_ns;
  std::vector<int> iterations;
  std::vector<char> converged;
};

struct TrackingSummary {
  double avg_abs_z_err = 0.0;
  double rms_3d_err = 0.0;
  double max_err = 0.0;
};

struct SimResult {
  std::vector<DroneTrace> traces;
  std::vector<TrackingSummary> summary;
  std::vector<double> mean_step_ns;
  double converged_fraction = 1.0;
  bool diverged = false;
  int steps = 0;
  int lower_index = 0;  // drone that started lower (error-metric drone)
};

/// Everything a scenario run needs besides the scenario itself.
struct SimConfig {
  QuadrotorParams quad;
  DownwashTruthParams downwash;
  MpcConfig mpc;
  PidGains pid;
  const GpModel* gp = nullptr;  // used by GP-based controllers
  DisturbMode disturb_mode = DisturbMode::WhicheverLower;
  double divergence_limit = 2.0;  // m, position error abort threshold
};

/// Lock-step closed-loop simulation: both controllers act on current
/// states, then the truth model advances every drone with the downwash
/// force applied per disturb_mode. Deterministic given the scenario.
SimResult run_scenario(const Scenario& scenario, const SimConfig& config);

/// Swap scenario of the evaluation protocol: drone 0 crosses from
/// (-0.5, 0, z0 + dd) to (0.5, 0, z0 + dd) while drone 1 mirrors it at
/// altitude z0, quintic time scaling over `duration`. The seed perturbs
/// the start positions (references start at the perturbed initials).
Scenario swap_scenario(double dd, double z0, double duration,
                       std::uint64_t seed, double init_perturb_std);

struct BenchmarkCell {
  ControllerKind controller;
  double dd = 0.0;
  double mean_error = 0.0;    // lower-drone average |z - z_ref|, m
  double mean_rms3d = 0.0;
  double mean_step_ns = 0.0;  // tested controller per-step wall time
  int failures = 0;           // diverged runs (recorded, not fatal)
  int runs = 0;
};

struct BenchmarkOptions {
  std::vector<double> dd_list{0.5, 0.4, 0.3, 0.2};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double z0 = 0.5;
  double duration = 6.0;
  double init_perturb_std = 0.005;
  ControllerKind upper_controller = ControllerKind::LinMpcLinGp;
};

/// Controller x separation grid of swap scenarios; the tested controller
/// flies the lower drone, the upper drone always uses the same fixed
/// controller so every row sees an identical disturbance source.
std::vector<BenchmarkCell> benchmark_grid(
    const std::vector<ControllerKind>& controllers,
    const BenchmarkOptions& options, const SimConfig& config);

}  // namespace dwmpc
