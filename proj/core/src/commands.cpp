#include "dwmpc/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "dwmpc/io.hpp"
#include "dwmpc/rng.hpp"

namespace dwmpc {

namespace {

using nlohmann::json;

int fail(const std::string& what) {
  std::cerr << json{{"error", what}}.dump() << std::endl;
  return 1;
}

/// Fly one data-collection pass through `target` with GP-free
/// controllers and append the noisy measurements from the recording
/// window (a superset of the interaction region).
void collect_pass(const Vec3& target, const RunConfig& config,
                  ForceDataset& data, Rng& noise_rng) {
  BoConfig pass_cfg = config.bo;
  pass_cfg.z0 = config.scenario.z0;
  pass_cfg.episode_duration = config.scenario.duration;
  pass_cfg.sample_stride = config.collect.sample_stride;
  pass_cfg.measurement_noise_std = config.collect.noise_std;
  pass_cfg.region.lo = config.collect.window_lo;
  pass_cfg.region.hi = config.collect.window_hi;

  const SimConfig sim_cfg = config.sim_config(nullptr);
  const EpisodeResult ep =
      run_episode(target, nullptr, pass_cfg, sim_cfg, noise_rng);
  for (std::size_t i = 0; i < ep.offsets.size(); ++i)
    data.append(ep.offsets[i], ep.measured_fz[i]);
}

}  // namespace

int run_collect(const RunConfig& config, const std::filesystem::path& out_dir) {
  try {
    config.validate();
    std::filesystem::create_directories(out_dir);

    std::vector<Vec3> targets;
    if (config.collect.mode == "grid") {
      for (double dz : config.collect.dz_values)
        for (double dy : config.collect.dy_values)
          targets.emplace_back(0.0, dy, dz);
    } else {
      Rng rng = Rng::stream(config.seed, "collect.targets");
      const auto& r = config.bo.region;
      for (int i = 0; i < config.collect.random_passes; ++i)
        targets.emplace_back(rng.uniform(r.lo.x(), r.hi.x()),
                             rng.uniform(r.lo.y(), r.hi.y()),
                             rng.uniform(r.lo.z(), r.hi.z()));
    }

    ForceDataset data;
    int pass_index = 0;
    for (const Vec3& target : targets) {
      Rng noise = Rng::stream(config.seed,
                              "collect.noise." + std::to_string(pass_index++));
      collect_pass(target, config, data, noise);
    }

    io::write_force_csv(out_dir / "force_data.csv", data);
    if (config.collect.export_truth_grid)
      io::write_truth_grid_csv(out_dir / "truth_grid.csv", config.downwash);

    json summary;
    summary["schema_version"] = 1;
    summary["passes"] = targets.size();
    summary["samples"] = data.size();
    summary["config"] = config.to_json();
    io::write_json(out_dir / "collect_summary.json", summary);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_fit(const RunConfig& config, const std::filesystem::path& dataset_csv,
            const std::filesystem::path& out_dir) {
  try {
    config.validate();
    std::filesystem::create_directories(out_dir);
    const ForceDataset data = io::read_force_csv(dataset_csv);
    const GpModel gp = GpModel::fit(data, config.gp.kernel, config.gp.noise_var());
    io::save_gp_artifact(out_dir / "gp_model.json", gp);

    // Prediction surface in the dy = 0 plane for force-surface plots.
    {
      std::ofstream out(out_dir / "gp_surface.csv");
      out << "dx,dy,dz,fz\n";
      for (double dz = 0.10; dz <= 0.6001; dz += 0.025)
        for (double dx = -0.4; dx <= 0.4001; dx += 0.02)
          out << io::format_double(dx) << ",0," << io::format_double(dz) << ','
              << io::format_double(gp.predict_mean(Vec3{dx, 0.0, dz})) << '\n';
    }

    double train_rmse = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double r = gp.predict_mean(data.inputs[i]) - data.targets[i];
      train_rmse += r * r;
    }
    train_rmse = data.size() > 0 ? std::sqrt(train_rmse / data.size()) : 0.0;

    json summary;
    summary["schema_version"] = 1;
    summary["samples"] = data.size();
    summary["train_rmse"] = train_rmse;
    summary["applied_jitter"] = gp.applied_jitter();
    summary["config"] = config.to_json();
    io::write_json(out_dir / "fit_summary.json", summary);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_simulate(const RunConfig& config, const std::string& controller,
                 double dd,
                 const std::optional<std::filesystem::path>& gp_artifact,
                 const std::filesystem::path& out_dir) {
  try {
    config.validate();
    std::filesystem::create_directories(out_dir);
    const ControllerKind kind = parse_controller_kind(controller);

    GpModel gp;
    const bool needs_gp = kind != ControllerKind::Pid;
    if (needs_gp && gp_artifact.has_value())
      gp = io::load_gp_artifact(*gp_artifact);

    Scenario s = swap_scenario(dd, config.scenario.z0, config.scenario.duration,
                               config.seed, config.scenario.init_perturb_std);
    s.controller[0] = parse_controller_kind(config.scenario.upper_controller);
    s.controller[1] = kind;

    const SimConfig sim_cfg = config.sim_config(gp.fitted() ? &gp : nullptr);
    const SimResult result = run_scenario(s, sim_cfg);

    io::write_trace_csv(out_dir / "trace_drone0.csv", result.traces[0],
                        config.timing);
    io::write_trace_csv(out_dir / "trace_drone1.csv", result.traces[1],
                        config.timing);

    json summary;
    summary["schema_version"] = 1;
    summary["controller"] = controller;
    summary["dd"] = dd;
    summary["gp_trained"] = gp.fitted();
    summary["result"] = io::sim_result_json(result, config.timing);
    summary["config"] = config.to_json();
    io::write_json(out_dir / "sim_summary.json", summary);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_benchmark(const RunConfig& config,
                  const std::optional<std::filesystem::path>& gp_artifact,
                  const std::filesystem::path& out_dir) {
  try {
    config.validate();
    std::filesystem::create_directories(out_dir);

    GpModel gp;
    if (gp_artifact.has_value()) gp = io::load_gp_artifact(*gp_artifact);
    if (!gp.fitted())
      return fail("benchmark requires a trained GP artifact (--gp PATH)");

    const std::vector<ControllerKind> controllers{
        ControllerKind::LinMpcLinGp, ControllerKind::Pid,
        ControllerKind::MpcLinGp, ControllerKind::MpcFullGp};
    const SimConfig sim_cfg = config.sim_config(&gp);
    const BenchmarkOptions options = config.benchmark_options();
    const auto cells = benchmark_grid(controllers, options, sim_cfg);

    io::write_benchmark_csv(out_dir / "benchmark.csv", cells, options.dd_list,
                            config.timing);
    std::cout << io::benchmark_table_text(cells, options.dd_list, config.timing);

    json summary;
    summary["schema_version"] = 1;
    json cell_rows = json::array();
    for (const auto& c : cells) {
      cell_rows.push_back({{"controller", controller_kind_name(c.controller)},
                           {"dd", c.dd},
                           {"mean_error", c.mean_error},
                           {"mean_rms3d", c.mean_rms3d},
                           {"mean_step_ns", config.timing ? c.mean_step_ns : 0.0},
                           {"failures", c.failures},
                           {"runs", c.runs}});
    }
    summary["cells"] = std::move(cell_rows);
    summary["config"] = config.to_json();
    io::write_json(out_dir / "benchmark_summary.json", summary);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_bo(const RunConfig& config, const std::string& sampler,
           const std::optional<std::filesystem::path>& resume_checkpoint,
           const std::filesystem::path& out_dir) {
  try {
    config.validate();
    std::filesystem::create_directories(out_dir);

    TargetSampler mode;
    if (sampler == "bo") {
      mode = TargetSampler::BayesOpt;
    } else if (sampler == "random") {
      mode = TargetSampler::UniformRandom;
    } else {
      return fail("unknown sampler: " + sampler + " (expected bo|random)");
    }

    std::optional<BoState> resume;
    if (resume_checkpoint.has_value())
      resume = io::load_bo_checkpoint(*resume_checkpoint);

    const SimConfig sim_cfg = config.sim_config(nullptr);
    const BoRunResult run =
        bo_loop(config.bo, sim_cfg, config.gp.kernel, config.gp.noise_var(),
                config.seed, mode, resume.has_value() ? &*resume : nullptr);

    io::write_learning_curve_csv(out_dir / "bo_learning_curve.csv", run.curve);
    io::write_force_csv(out_dir / "bo_force_data.csv", run.state.force_data);
    io::save_bo_checkpoint(out_dir / "bo_checkpoint.json", run.state);
    if (run.force_gp.fitted())
      io::save_gp_artifact(out_dir / "bo_gp_model.json", run.force_gp);

    json summary;
    summary["schema_version"] = 1;
    summary["sampler"] = sampler;
    summary["episodes"] = run.state.episode;
    summary["force_samples"] = run.state.force_data.size();
    summary["final_cost"] = run.curve.empty() ? 0.0 : run.curve.back().cost;
    summary["config"] = config.to_json();
    io::write_json(out_dir / "bo_summary.json", summary);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace dwmpc
