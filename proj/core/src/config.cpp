#include "dwmpc/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dwmpc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object())
    throw std::invalid_argument("config section '" + context + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (allowed.find(key) == allowed.end())
      throw std::invalid_argument("unknown config key '" + context + "." + key + "'");
}

template <typename Vec>
Vec get_vec(const json& j, const char* key, Vec fallback) {
  if (!j.contains(key)) return fallback;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(fallback.size()))
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be an array of size " +
                                std::to_string(fallback.size()));
  Vec out = fallback;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = arr[i].get<double>();
  return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template <typename Vec>
json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "rational-quadratic") return KernelKind::RationalQuadratic;
  if (s == "squared-exponential") return KernelKind::SquaredExponential;
  throw std::invalid_argument("unknown kernel kind: " + s);
}

std::string kernel_kind_name(KernelKind k) {
  return k == KernelKind::RationalQuadratic ? "rational-quadratic"
                                            : "squared-exponential";
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.gp.kernel.kind = KernelKind::RationalQuadratic;
  c.gp.kernel.signal_var = 0.05 * 0.05;
  c.gp.kernel.length_scales = Vec3{0.1, 0.1, 0.15};
  c.gp.kernel.alpha = 1.0;

  c.bo.perf_kernel.kind = KernelKind::RationalQuadratic;
  c.bo.perf_kernel.signal_var = 1.0;
  c.bo.perf_kernel.length_scales = Vec3{0.3, 0.3, 0.18};
  c.bo.perf_kernel.alpha = 1.0;
  c.bo.perf_noise_var = 2.5e-3;
  c.bo.measurement_noise_std = c.gp.noise_std;
  return c;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c = defaults();
  check_keys(j, {"schema_version", "seed", "timing", "quadrotor", "gp",
                 "downwash", "mpc", "pid", "bo", "scenario", "collect"},
             "config");
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("unsupported config schema_version");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.timing = get_or<bool>(j, "timing", c.timing);

  if (j.contains("quadrotor")) {
    const auto& q = j.at("quadrotor");
    check_keys(q, {"mass", "inertia", "gravity", "arm_length", "thrust_coeff",
                   "torque_coeff", "motor_min", "motor_max"}, "quadrotor");
    c.quad.mass = get_or(q, "mass", c.quad.mass);
    c.quad.inertia = get_vec(q, "inertia", c.quad.inertia);
    c.quad.gravity = get_or(q, "gravity", c.quad.gravity);
    c.quad.arm_length = get_or(q, "arm_length", c.quad.arm_length);
    c.quad.thrust_coeff = get_or(q, "thrust_coeff", c.quad.thrust_coeff);
    c.quad.torque_coeff = get_or(q, "torque_coeff", c.quad.torque_coeff);
    c.quad.motor_min = get_or(q, "motor_min", c.quad.motor_min);
    c.quad.motor_max = get_or(q, "motor_max", c.quad.motor_max);
  }

  if (j.contains("gp")) {
    const auto& g = j.at("gp");
    check_keys(g, {"kernel", "signal_std", "length_scales", "alpha", "noise_std"},
               "gp");
    c.gp.kernel.kind = parse_kernel_kind(
        get_or<std::string>(g, "kernel", kernel_kind_name(c.gp.kernel.kind)));
    if (g.contains("signal_std")) {
      const double s = g.at("signal_std").get<double>();
      c.gp.kernel.signal_var = s * s;
    }
    c.gp.kernel.length_scales =
        get_vec(g, "length_scales", c.gp.kernel.length_scales);
    c.gp.kernel.alpha = get_or(g, "alpha", c.gp.kernel.alpha);
    c.gp.noise_std = get_or(g, "noise_std", c.gp.noise_std);
  }

  if (j.contains("downwash")) {
    const auto& d = j.at("downwash");
    check_keys(d, {"peak_force", "radial_width", "vertical_decay",
                   "reference_separation", "activation_threshold", "clamp_ratio"},
               "downwash");
    c.downwash.peak_force = get_or(d, "peak_force", c.downwash.peak_force);
    c.downwash.radial_width = get_or(d, "radial_width", c.downwash.radial_width);
    c.downwash.vertical_decay =
        get_or(d, "vertical_decay", c.downwash.vertical_decay);
    c.downwash.reference_separation =
        get_or(d, "reference_separation", c.downwash.reference_separation);
    c.downwash.activation_threshold =
        get_or(d, "activation_threshold", c.downwash.activation_threshold);
    c.downwash.clamp_ratio = get_or(d, "clamp_ratio", c.downwash.clamp_ratio);
  }

  if (j.contains("mpc")) {
    const auto& m = j.at("mpc");
    check_keys(m, {"horizon", "dt", "q_diag", "r_diag", "terminal_from_dare",
                   "pos_bound", "att_bound", "vel_bound", "rate_bound",
                   "max_predicted_force", "qp"}, "mpc");
    c.mpc.horizon = get_or(m, "horizon", c.mpc.horizon);
    c.mpc.dt = get_or(m, "dt", c.mpc.dt);
    c.mpc.q_diag = get_vec(m, "q_diag", c.mpc.q_diag);
    c.mpc.r_diag = get_vec(m, "r_diag", c.mpc.r_diag);
    c.mpc.terminal_from_dare =
        get_or(m, "terminal_from_dare", c.mpc.terminal_from_dare);
    c.mpc.pos_bound = get_vec(m, "pos_bound", c.mpc.pos_bound);
    c.mpc.att_bound = get_vec(m, "att_bound", c.mpc.att_bound);
    c.mpc.vel_bound = get_vec(m, "vel_bound", c.mpc.vel_bound);
    c.mpc.rate_bound = get_vec(m, "rate_bound", c.mpc.rate_bound);
    c.mpc.max_predicted_force =
        get_or(m, "max_predicted_force", c.mpc.max_predicted_force);
    if (m.contains("qp")) {
      const auto& s = m.at("qp");
      check_keys(s, {"rho", "max_iters", "tol"}, "mpc.qp");
      c.mpc.qp.rho = get_or(s, "rho", c.mpc.qp.rho);
      c.mpc.qp.max_iters = get_or(s, "max_iters", c.mpc.qp.max_iters);
      c.mpc.qp.tol = get_or(s, "tol", c.mpc.qp.tol);
    }
  }

  if (j.contains("pid")) {
    const auto& p = j.at("pid");
    check_keys(p, {"kp_pos", "ki_pos", "kd_pos", "integrator_limit",
                   "integration_band", "kp_att", "kd_att", "kp_yaw", "kd_yaw",
                   "max_tilt"}, "pid");
    c.pid.kp_pos = get_vec(p, "kp_pos", c.pid.kp_pos);
    c.pid.ki_pos = get_vec(p, "ki_pos", c.pid.ki_pos);
    c.pid.kd_pos = get_vec(p, "kd_pos", c.pid.kd_pos);
    c.pid.integrator_limit = get_vec(p, "integrator_limit", c.pid.integrator_limit);
    c.pid.integration_band = get_vec(p, "integration_band", c.pid.integration_band);
    c.pid.kp_att = get_or(p, "kp_att", c.pid.kp_att);
    c.pid.kd_att = get_or(p, "kd_att", c.pid.kd_att);
    c.pid.kp_yaw = get_or(p, "kp_yaw", c.pid.kp_yaw);
    c.pid.kd_yaw = get_or(p, "kd_yaw", c.pid.kd_yaw);
    c.pid.max_tilt = get_or(p, "max_tilt", c.pid.max_tilt);
  }

  if (j.contains("bo")) {
    const auto& b = j.at("bo");
    check_keys(b, {"episodes", "region_lo", "region_hi", "grid_resolution",
                   "beta_delta", "force_weight", "force_sign",
                   "force_sigma_weight",
                   "perf_length_scales", "perf_signal_std", "perf_noise_std",
                   "perf_alpha", "penalty_cost", "measurement_noise_std",
                   "sample_stride", "episode_duration", "z0"}, "bo");
    c.bo.episodes = get_or(b, "episodes", c.bo.episodes);
    c.bo.region.lo = get_vec(b, "region_lo", c.bo.region.lo);
    c.bo.region.hi = get_vec(b, "region_hi", c.bo.region.hi);
    c.bo.grid_resolution = get_or(b, "grid_resolution", c.bo.grid_resolution);
    c.bo.beta_delta = get_or(b, "beta_delta", c.bo.beta_delta);
    c.bo.force_weight = get_or(b, "force_weight", c.bo.force_weight);
    c.bo.force_sign = get_or(b, "force_sign", c.bo.force_sign);
    c.bo.force_sigma_weight =
        get_or(b, "force_sigma_weight", c.bo.force_sigma_weight);
    c.bo.perf_kernel.length_scales =
        get_vec(b, "perf_length_scales", c.bo.perf_kernel.length_scales);
    if (b.contains("perf_signal_std")) {
      const double s = b.at("perf_signal_std").get<double>();
      c.bo.perf_kernel.signal_var = s * s;
    }
    if (b.contains("perf_noise_std")) {
      const double s = b.at("perf_noise_std").get<double>();
      c.bo.perf_noise_var = s * s;
    }
    c.bo.perf_kernel.alpha = get_or(b, "perf_alpha", c.bo.perf_kernel.alpha);
    c.bo.penalty_cost = get_or(b, "penalty_cost", c.bo.penalty_cost);
    c.bo.measurement_noise_std =
        get_or(b, "measurement_noise_std", c.bo.measurement_noise_std);
    c.bo.sample_stride = get_or(b, "sample_stride", c.bo.sample_stride);
    c.bo.episode_duration = get_or(b, "episode_duration", c.bo.episode_duration);
    c.bo.z0 = get_or(b, "z0", c.bo.z0);
  }

  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    check_keys(s, {"z0", "duration", "dd_list", "benchmark_seeds",
                   "init_perturb_std", "upper_controller", "disturb_mode"},
               "scenario");
    c.scenario.z0 = get_or(s, "z0", c.scenario.z0);
    c.scenario.duration = get_or(s, "duration", c.scenario.duration);
    if (s.contains("dd_list"))
      c.scenario.dd_list = s.at("dd_list").get<std::vector<double>>();
    c.scenario.benchmark_seeds =
        get_or(s, "benchmark_seeds", c.scenario.benchmark_seeds);
    c.scenario.init_perturb_std =
        get_or(s, "init_perturb_std", c.scenario.init_perturb_std);
    c.scenario.upper_controller =
        get_or(s, "upper_controller", c.scenario.upper_controller);
    c.scenario.disturb_mode = get_or(s, "disturb_mode", c.scenario.disturb_mode);
  }

  if (j.contains("collect")) {
    const auto& s = j.at("collect");
    check_keys(s, {"mode", "dz_values", "dy_values", "random_passes",
                   "noise_std", "sample_stride", "export_truth_grid",
                   "window_lo", "window_hi"},
               "collect");
    c.collect.window_lo = get_vec(s, "window_lo", c.collect.window_lo);
    c.collect.window_hi = get_vec(s, "window_hi", c.collect.window_hi);
    c.collect.mode = get_or(s, "mode", c.collect.mode);
    if (s.contains("dz_values"))
      c.collect.dz_values = s.at("dz_values").get<std::vector<double>>();
    if (s.contains("dy_values"))
      c.collect.dy_values = s.at("dy_values").get<std::vector<double>>();
    c.collect.random_passes = get_or(s, "random_passes", c.collect.random_passes);
    c.collect.noise_std = get_or(s, "noise_std", c.collect.noise_std);
    c.collect.sample_stride = get_or(s, "sample_stride", c.collect.sample_stride);
    c.collect.export_truth_grid =
        get_or(s, "export_truth_grid", c.collect.export_truth_grid);
  }

  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file: " + file.string());
  json j;
  in >> j;
  return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["timing"] = timing;
  j["quadrotor"] = {{"mass", quad.mass},
                    {"inertia", vec_to_json(quad.inertia)},
                    {"gravity", quad.gravity},
                    {"arm_length", quad.arm_length},
                    {"thrust_coeff", quad.thrust_coeff},
                    {"torque_coeff", quad.torque_coeff},
                    {"motor_min", quad.motor_min},
                    {"motor_max", quad.motor_max}};
  j["gp"] = {{"kernel", kernel_kind_name(gp.kernel.kind)},
             {"signal_std", std::sqrt(gp.kernel.signal_var)},
             {"length_scales", vec_to_json(gp.kernel.length_scales)},
             {"alpha", gp.kernel.alpha},
             {"noise_std", gp.noise_std}};
  j["downwash"] = {{"peak_force", downwash.peak_force},
                   {"radial_width", downwash.radial_width},
                   {"vertical_decay", downwash.vertical_decay},
                   {"reference_separation", downwash.reference_separation},
                   {"activation_threshold", downwash.activation_threshold},
                   {"clamp_ratio", downwash.clamp_ratio}};
  j["mpc"] = {{"horizon", mpc.horizon},
              {"dt", mpc.dt},
              {"q_diag", vec_to_json(mpc.q_diag)},
              {"r_diag", vec_to_json(mpc.r_diag)},
              {"terminal_from_dare", mpc.terminal_from_dare},
              {"pos_bound", vec_to_json(mpc.pos_bound)},
              {"att_bound", vec_to_json(mpc.att_bound)},
              {"vel_bound", vec_to_json(mpc.vel_bound)},
              {"rate_bound", vec_to_json(mpc.rate_bound)},
              {"max_predicted_force", mpc.max_predicted_force},
              {"qp", {{"rho", mpc.qp.rho},
                      {"max_iters", mpc.qp.max_iters},
                      {"tol", mpc.qp.tol}}}};
  j["pid"] = {{"kp_pos", vec_to_json(pid.kp_pos)},
              {"ki_pos", vec_to_json(pid.ki_pos)},
              {"kd_pos", vec_to_json(pid.kd_pos)},
              {"integrator_limit", vec_to_json(pid.integrator_limit)},
              {"integration_band", vec_to_json(pid.integration_band)},
              {"kp_att", pid.kp_att},
              {"kd_att", pid.kd_att},
              {"kp_yaw", pid.kp_yaw},
              {"kd_yaw", pid.kd_yaw},
              {"max_tilt", pid.max_tilt}};
  j["bo"] = {{"episodes", bo.episodes},
             {"region_lo", vec_to_json(bo.region.lo)},
             {"region_hi", vec_to_json(bo.region.hi)},
             {"grid_resolution", bo.grid_resolution},
             {"beta_delta", bo.beta_delta},
             {"force_weight", bo.force_weight},
             {"force_sign", bo.force_sign},
             {"force_sigma_weight", bo.force_sigma_weight},
             {"perf_length_scales", vec_to_json(bo.perf_kernel.length_scales)},
             {"perf_signal_std", std::sqrt(bo.perf_kernel.signal_var)},
             {"perf_noise_std", std::sqrt(bo.perf_noise_var)},
             {"perf_alpha", bo.perf_kernel.alpha},
             {"penalty_cost", bo.penalty_cost},
             {"measurement_noise_std", bo.measurement_noise_std},
             {"sample_stride", bo.sample_stride},
             {"episode_duration", bo.episode_duration},
             {"z0", bo.z0}};
  j["scenario"] = {{"z0", scenario.z0},
                   {"duration", scenario.duration},
                   {"dd_list", scenario.dd_list},
                   {"benchmark_seeds", scenario.benchmark_seeds},
                   {"init_perturb_std", scenario.init_perturb_std},
                   {"upper_controller", scenario.upper_controller},
                   {"disturb_mode", scenario.disturb_mode}};
  j["collect"] = {{"mode", collect.mode},
                  {"dz_values", collect.dz_values},
                  {"dy_values", collect.dy_values},
                  {"random_passes", collect.random_passes},
                  {"noise_std", collect.noise_std},
                  {"sample_stride", collect.sample_stride},
                  {"export_truth_grid", collect.export_truth_grid},
                  {"window_lo", vec_to_json(collect.window_lo)},
                  {"window_hi", vec_to_json(collect.window_hi)}};
  return j;
}

void RunConfig::validate() const {
  quad.validate();
  gp.kernel.validate();
  if (!(gp.noise_std > 0.0))
    throw std::invalid_argument("gp noise_std must be > 0");
  downwash.validate();
  pid.validate();
  bo.validate();
  bo.perf_kernel.validate();
  if (mpc.horizon < 2) throw std::invalid_argument("mpc horizon must be >= 2");
  if (!(mpc.dt > 0.0)) throw std::invalid_argument("mpc dt must be > 0");
  if (collect.mode != "grid" && collect.mode != "random")
    throw std::invalid_argument("collect mode must be grid or random");
  if (collect.sample_stride < 1)
    throw std::invalid_argument("collect sample_stride must be >= 1");
  parse_controller_kind(scenario.upper_controller);
  disturb_mode();
}

SimConfig RunConfig::sim_config(const GpModel* gp_model) const {
  SimConfig s;
  s.quad = quad;
  s.downwash = downwash;
  s.mpc = mpc;
  s.pid = pid;
  s.gp = gp_model;
  s.disturb_mode = disturb_mode();
  return s;
}

BenchmarkOptions RunConfig::benchmark_options() const {
  BenchmarkOptions o;
  o.dd_list = scenario.dd_list;
  o.seeds.clear();
  for (int i = 1; i <= scenario.benchmark_seeds; ++i)
    o.seeds.push_back(seed * 1000003ull + static_cast<std::uint64_t>(i));
  o.z0 = scenario.z0;
  o.duration = scenario.duration;
  o.init_perturb_std = scenario.init_perturb_std;
  o.upper_controller = parse_controller_kind(scenario.upper_controller);
  return o;
}

DisturbMode RunConfig::disturb_mode() const {
  if (scenario.disturb_mode == "whichever-lower") return DisturbMode::WhicheverLower;
  if (scenario.disturb_mode == "designated-lower") return DisturbMode::DesignatedLower;
  if (scenario.disturb_mode == "off") return DisturbMode::Off;
  throw std::invalid_argument("unknown disturb_mode: " + scenario.disturb_mode);
}

}  // namespace dwmpc
