#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dwmpc/gp.hpp"
#include "dwmpc/rng.hpp"
#include "dwmpc/simulator.hpp"
#include "dwmpc/trajectory.hpp"

namespace dwmpc {

/// Box of admissible interaction offsets x = (dx, dy, dz), the relative
/// position of the upper drone over the lower one at crossing time.
struct BoRegion {
  Vec3 lo{-0.3, -0.3, 0.15};
  Vec3 hi{0.3, 0.3, 0.5};

  bool contains(const Vec3& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  void validate() const;
};

struct BoConfig {
  int episodes = 15;
  BoRegion region;
  int grid_resolution = 21;     // acquisition grid per axis
  double beta_delta = 0.6;      // beta_t = 2 log(t^2 pi^2 / beta_delta)
  double force_weight = 0.48;   // weight of the force mean in the score
  double force_sign = -1.0;     // -1: reward predicted force magnitude
  double force_sigma_weight = 0.0;  // optional exploration of force-map gaps
  Kernel perf_kernel;           // performance GP prior (unit-variance targets)
  double perf_noise_var = 2.5e-3;
  double penalty_cost = 10.0;   // J assigned to diverged episodes
  double measurement_noise_std = 0.002;  // N, force sampling noise
  int sample_stride = 1;        // keep every k-th in-region sample
  double episode_duration = 6.0;
  double z0 = 0.5;

  void validate() const;
};

/// Paired sampling state of the guided data-collection loop: every
/// episode appends all in-region force samples and exactly one
/// performance point.
struct BoState {
  ForceDataset force_data;
  ForceDataset perf_data;  // inputs: offsets; targets: episode cost J
  int episode = 0;
  std::uint64_t seed = 0;
};

/// GP-UCB confidence weight, beta_t = 2 log(t^2 pi^2 / delta).
double beta_schedule(int t, double delta);

/// Performance GP fit on normalized negated costs (-J z-scored), so the
/// posterior lives on a unit scale regardless of the cost magnitude.
GpModel fit_perf_gp(const ForceDataset& perf_data, const Kernel& kernel,
                    double noise_var);

/// Acquisition: argmax over a deterministic grid of
///   mu_perf(x) + w * sign * mu_force(x)/scale + beta * sigma_perf(x),
/// ties broken toward the lowest lexicographic grid point. With no
/// performance data yet, returns the region center (cold start).
Vec3 acquire_with_beta(const GpModel* force_gp, const GpModel* perf_gp,
                       double force_scale, const BoConfig& cfg, double beta);

/// Same with beta taken from the episode-indexed schedule.
Vec3 acquire(const GpModel* force_gp, const GpModel* perf_gp,
             double force_scale, const BoConfig& cfg, int t);

/// Straight-line swap pair arranged so the relative offset
/// p_upper - p_lower equals exactly `target` at mid-time. Both legs use
/// quintic time scaling (zero boundary velocity and acceleration).
std::pair<QuinticTrajectory, QuinticTrajectory> plan_swap_through(
    const Vec3& target, const BoConfig& cfg);

struct EpisodeResult {
  Vec3 target = Vec3::Zero();
  double cost = 0.0;
  bool diverged = false;
  std::vector<Vec3> offsets;        // in-region visited offsets, in order
  std::vector<double> measured_fz;  // paired noisy force measurements
  SimResult sim;
};

/// Fly one swap episode through `target` with the LinMPC-LinGP
/// controller on the lower drone using the current force GP (pass
/// nullptr before any data exists). Records a force sample at every
/// control step whose offset lies inside the region.
EpisodeResult run_episode(const Vec3& target, const GpModel* force_gp,
                          const BoConfig& cfg, const SimConfig& sim_cfg,
                          Rng& noise_rng);

/// Dataset update after an episode: append all force samples and the
/// single most informative performance point (max perf-GP variance among
/// visited offsets, evaluated before this episode's point is added).
void update_datasets(BoState& state, const EpisodeResult& episode,
                     const BoConfig& cfg);

struct CurvePoint {
  int episode = 0;
  double cost = 0.0;
  Vec3 target = Vec3::Zero();
};

struct BoRunResult {
  BoState state;
  std::vector<CurvePoint> curve;
  GpModel force_gp;  // trained artifact after the final episode
};

enum class TargetSampler { BayesOpt, UniformRandom };

/// Full loop: acquire -> plan -> run -> update, `episodes` times.
/// Deterministic given the seed; the random sampler draws targets
/// uniformly from the region using the same seed bank. Passing a
/// checkpointed state resumes after its episode index and reproduces
/// the uninterrupted run exactly.
BoRunResult bo_loop(const BoConfig& cfg, const SimConfig& sim_cfg,
                    const Kernel& force_kernel, double force_noise_var,
                    std::uint64_t seed,
                    TargetSampler sampler = TargetSampler::BayesOpt,
                    const BoState* resume_from = nullptr);

}  // namespace dwmpc
