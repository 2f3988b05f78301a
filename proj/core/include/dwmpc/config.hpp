#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwmpc/bo.hpp"
#include "dwmpc/simulator.hpp"

namespace dwmpc {

struct GpConfig {
  Kernel kernel;               // defaults set in RunConfig::defaults()
  double noise_std = 0.002;    // N

  double noise_var() const { return noise_std * noise_std; }
};

struct ScenarioConfig {
  double z0 = 0.5;
  double duration = 6.0;
  std::vector<double> dd_list{0.5, 0.4, 0.3, 0.2};
  int benchmark_seeds = 5;
  double init_perturb_std = 0.005;
  std::string upper_controller = "linmpc-lingp";
  std::string disturb_mode = "whichever-lower";
};

struct CollectConfig {
  std::string mode = "grid";  // grid | random
  std::vector<double> dz_values{0.20, 0.30, 0.40, 0.50};
  std::vector<double> dy_values{-0.15, 0.0, 0.15};
  int random_passes = 20;
  double noise_std = 0.002;
  int sample_stride = 2;
  bool export_truth_grid = false;
  // Recording window for scripted passes; wider than the interaction
  // region so the model also sees the near-zero approach tails.
  Vec3 window_lo{-0.5, -0.35, 0.10};
  Vec3 window_hi{0.5, 0.35, 0.58};
};

/// One structured configuration drives every subcommand; flags override
/// individual fields. Unknown keys in a config file are rejected so
/// typos cannot silently fall back to defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  bool timing = false;  // wall-time fields are written only when true
  QuadrotorParams quad;
  GpConfig gp;
  DownwashTruthParams downwash;
  MpcConfig mpc;
  PidGains pid;
  BoConfig bo;
  ScenarioConfig scenario;
  CollectConfig collect;

  static RunConfig defaults();
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  void validate() const;
  SimConfig sim_config(const GpModel* gp_model) const;
  BenchmarkOptions benchmark_options() const;
  DisturbMode disturb_mode() const;
};

}  // namespace dwmpc
