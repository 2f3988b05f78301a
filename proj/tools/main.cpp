#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dwmpc/commands.hpp"

namespace {

dwmpc::RunConfig load_config(const std::optional<std::string>& config_path,
                             const std::optional<std::uint64_t>& seed,
                             bool timing) {
  dwmpc::RunConfig cfg = config_path.has_value()
                             ? dwmpc::RunConfig::from_file(*config_path)
                             : dwmpc::RunConfig::defaults();
  if (seed.has_value()) cfg.seed = *seed;
  if (timing) cfg.timing = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downwash-adaptive linear MPC simulator and tooling"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool timing = false;
  app.add_option("--config", config_path, "JSON config file")->expected(1);
  app.add_option("--seed", seed, "root seed (overrides config)");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--timing", timing,
               "record wall times in outputs (not reproducible byte-for-byte)");

  auto* collect = app.add_subcommand("collect", "fly scripted passes and record force data");
  double collect_noise = -1.0;
  bool export_truth = false;
  collect->add_option("--noise", collect_noise, "measurement noise std in N (0 disables)");
  collect->add_flag("--export-truth", export_truth, "also export the gridded truth field");

  auto* fit = app.add_subcommand("fit", "fit the downwash GP from a force CSV");
  std::string dataset = "out/force_data.csv";
  fit->add_option("--data", dataset, "force dataset CSV (dx,dy,dz,fz)");

  auto* simulate = app.add_subcommand("simulate", "run one swap scenario");
  std::string controller = "linmpc-lingp";
  double dd = 0.4;
  std::optional<std::string> gp_path;
  simulate->add_option("--controller", controller,
                       "pid | linmpc-lingp | mpc-lingp | mpc-fullgp");
  simulate->add_option("--dd", dd, "vertical separation in m");
  simulate->add_option("--gp", gp_path, "trained GP artifact JSON");

  auto* benchmark = app.add_subcommand("benchmark", "controller x separation grid");
  std::optional<std::string> bench_gp;
  benchmark->add_option("--gp", bench_gp, "trained GP artifact JSON");

  auto* bo = app.add_subcommand("bo", "Bayesian-optimization guided sampling loop");
  std::string sampler = "bo";
  std::optional<int> episodes;
  std::optional<std::string> resume;
  bo->add_option("--sampler", sampler, "bo | random");
  bo->add_option("--episodes", episodes, "episode budget (overrides config)");
  bo->add_option("--resume", resume, "checkpoint JSON to continue from");

  CLI11_PARSE(app, argc, argv);

  try {
    dwmpc::RunConfig cfg = load_config(config_path, seed, timing);
    const std::filesystem::path out{out_dir};

    if (collect->parsed()) {
      if (collect_noise >= 0.0) cfg.collect.noise_std = collect_noise;
      if (export_truth) cfg.collect.export_truth_grid = true;
      return dwmpc::run_collect(cfg, out);
    }
    if (fit->parsed()) return dwmpc::run_fit(cfg, dataset, out);
    if (simulate->parsed()) {
      std::optional<std::filesystem::path> gp;
      if (gp_path.has_value()) gp = *gp_path;
      return dwmpc::run_simulate(cfg, controller, dd, gp, out);
    }
    if (benchmark->parsed()) {
      std::optional<std::filesystem::path> gp;
      if (bench_gp.has_value()) gp = *bench_gp;
      return dwmpc::run_benchmark(cfg, gp, out);
    }
    if (bo->parsed()) {
      if (episodes.has_value()) cfg.bo.episodes = *episodes;
      std::optional<std::filesystem::path> ckpt;
      if (resume.has_value()) ckpt = *resume;
      return dwmpc::run_bo(cfg, sampler, ckpt, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}" << std::endl;
    return 1;
  }
  return 1;
}
