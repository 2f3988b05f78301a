#include "dwmpc/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "dwmpc/rng.hpp"

namespace dwmpc {

void Scenario::validate(double dt, int horizon) const {
  if (num_drones < 1 || num_drones > 2)
    throw std::invalid_argument("scenario supports one or two drones");
  if (!(duration >= horizon * dt))
    throw std::invalid_argument("episode shorter than one MPC horizon");
  for (int i = 0; i < num_drones; ++i) {
    if (!initial[i].is_finite())
      throw std::invalid_argument("non-finite initial state");
    if ((reference[i].position(0.0) - initial[i].position).norm() > 1e-9)
      throw std::invalid_argument("reference must start at the initial position");
  }
  if (num_drones == 2 && !(separation > 0.0))
    throw std::invalid_argument("two-drone scenario needs positive separation");
}

SimResult run_scenario(const Scenario& scenario, const SimConfig& config) {
  scenario.validate(config.mpc.dt, config.mpc.horizon);
  const int n_drones = scenario.num_drones;
  const double dt = config.mpc.dt;
  const int steps = static_cast<int>(std::llround(scenario.duration / dt));

  std::array<std::unique_ptr<Controller>, 2> controllers;
  for (int i = 0; i < n_drones; ++i)
    controllers[i] = make_controller(scenario.controller[i], config.quad,
                                     config.mpc, config.pid, config.gp);

  SimResult result;
  result.traces.resize(n_drones);
  result.summary.resize(n_drones);
  result.mean_step_ns.assign(n_drones, 0.0);
  result.lower_index =
      (n_drones == 2 &&
       scenario.initial[1].position.z() < scenario.initial[0].position.z())
          ? 1
          : 0;

  std::array<DroneState, 2> states = scenario.initial;
  std::vector<double> sq_err_sum(n_drones, 0.0);
  long long mpc_total = 0, mpc_converged = 0;

  for (int step = 0; step < steps; ++step) {
    const double t = step * dt;

    std::array<ControlDecision, 2> decisions;
    try {
      for (int i = 0; i < n_drones; ++i) {
        std::optional<DroneState> other;
        if (n_drones == 2) other = states[1 - i];
        decisions[i] =
            controllers[i]->step(states[i], scenario.reference[i], t, other);
        if (scenario.controller[i] != ControllerKind::Pid) {
          ++mpc_total;
          if (decisions[i].stats.converged) ++mpc_converged;
        }
      }
    } catch (const std::domain_error&) {
      // Attitude left the valid chart (flip); that is a divergence, not
      // a crash of the experiment harness.
      result.diverged = true;
      break;
    }

    std::array<Vec3, 2> forces{Vec3::Zero(), Vec3::Zero()};
    if (n_drones == 2 && config.disturb_mode != DisturbMode::Off) {
      for (int i = 0; i < n_drones; ++i) {
        if (config.disturb_mode == DisturbMode::DesignatedLower &&
            i != result.lower_index)
          continue;
        // Activation inside true_force keeps this zero unless the other
        // drone is actually above drone i.
        forces[i] = true_force(states[1 - i].position - states[i].position,
                               config.downwash);
      }
    }

    bool diverged_now = false;
    for (int i = 0; i < n_drones; ++i) {
      auto& tr = result.traces[i];
      const Vec3 ref_p = scenario.reference[i].position(t);
      const Vec3 err = states[i].position - ref_p;
      tr.t.push_back(t);
      tr.position.push_back(states[i].position);
      tr.ref_position.push_back(ref_p);
      tr.fz_true.push_back(forces[i].z());
      tr.fz_pred.push_back(decisions[i].predicted_fz);
      tr.solve_ns.push_back(decisions[i].step_ns);
      tr.iterations.push_back(decisions[i].stats.iterations);
      tr.converged.push_back(decisions[i].stats.converged ? 1 : 0);

      result.summary[i].avg_abs_z_err += std::abs(err.z());
      sq_err_sum[i] += err.squaredNorm();
      result.summary[i].max_err = std::max(result.summary[i].max_err, err.norm());
      result.mean_step_ns[i] += static_cast<double>(decisions[i].step_ns);
      if (err.norm() > config.divergence_limit) diverged_now = true;
    }
    if (diverged_now) {
      result.diverged = true;
      break;
    }

    try {
      for (int i = 0; i < n_drones; ++i)
        states[i] = step_truth(states[i], decisions[i].input, forces[i], dt,
                               config.quad);
    } catch (const std::domain_error&) {
      result.diverged = true;
      break;
    }
  }

  const int recorded = static_cast<int>(result.traces[0].t.size());
  result.steps = recorded;
  for (int i = 0; i < n_drones; ++i) {
    if (recorded > 0) {
      result.summary[i].avg_abs_z_err /= recorded;
      result.summary[i].rms_3d_err = std::sqrt(sq_err_sum[i] / recorded);
      result.mean_step_ns[i] /= recorded;
    }
  }
  result.converged_fraction =
      mpc_total > 0 ? static_cast<double>(mpc_converged) / mpc_total : 1.0;
  return result;
}

Scenario swap_scenario(double dd, double z0, double duration,
                       std::uint64_t seed, double init_perturb_std) {
  if (!(dd > 0.0)) throw std::invalid_argument("separation must be positive");
  Rng rng = Rng::stream(seed, "scenario.init");
  const auto perturb = [&]() {
    return Vec3{rng.gaussian(0.0, init_perturb_std),
                rng.gaussian(0.0, init_perturb_std),
                rng.gaussian(0.0, init_perturb_std)};
  };

  Scenario s;
  s.separation = dd;
  s.duration = duration;
  s.seed = seed;

  const Vec3 start_upper = Vec3{-0.5, 0.0, z0 + dd} + perturb();
  const Vec3 goal_upper{0.5, 0.0, z0 + dd};
  const Vec3 start_lower = Vec3{0.5, 0.0, z0} + perturb();
  const Vec3 goal_lower{-0.5, 0.0, z0};

  s.reference[0] = QuinticTrajectory(start_upper, goal_upper, duration);
  s.reference[1] = QuinticTrajectory(start_lower, goal_lower, duration);
  s.initial[0].position = start_upper;
  s.initial[1].position = start_lower;
  return s;
}

std::vector<BenchmarkCell> benchmark_grid(
    const std::vector<ControllerKind>& controllers,
    const BenchmarkOptions& options, const SimConfig& config) {
  std::vector<BenchmarkCell> cells;
  for (ControllerKind kind : controllers) {
    for (double dd : options.dd_list) {
      BenchmarkCell cell;
      cell.controller = kind;
      cell.dd = dd;
      for (std::uint64_t seed : options.seeds) {
        Scenario s = swap_scenario(dd, options.z0, options.duration, seed,
                                   options.init_perturb_std);
        s.controller[0] = options.upper_controller;
        s.controller[1] = kind;
        const SimResult r = run_scenario(s, config);
        ++cell.runs;
        if (r.diverged) {
          ++cell.failures;
        }
        cell.mean_error += r.summary[1].avg_abs_z_err;
        cell.mean_rms3d += r.summary[1].rms_3d_err;
        cell.mean_step_ns += r.mean_step_ns[1];
      }
      if (cell.runs > 0) {
        cell.mean_error /= cell.runs;
        cell.mean_rms3d /= cell.runs;
        cell.mean_step_ns /= cell.runs;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace dwmpc
