#include "dwmpc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dwmpc::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  return Vec3{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json dataset_json(const ForceDataset& data) {
  json inputs = json::array(), targets = json::array();
  for (const auto& x : data.inputs) inputs.push_back(vec3_json(x));
  for (double y : data.targets) targets.push_back(y);
  return json{{"inputs", std::move(inputs)}, {"targets", std::move(targets)}};
}

ForceDataset dataset_from_json(const json& j) {
  ForceDataset d;
  for (const auto& x : j.at("inputs")) d.inputs.push_back(vec3_from_json(x));
  for (const auto& y : j.at("targets")) d.targets.push_back(y.get<double>());
  d.validate();
  return d;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_force_csv(const std::filesystem::path& path, const ForceDataset& data) {
  auto out = open_out(path);
  out << "dx,dy,dz,fz\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec3& x = data.inputs[i];
    out << format_double(x.x()) << ',' << format_double(x.y()) << ','
        << format_double(x.z()) << ',' << format_double(data.targets[i]) << '\n';
  }
}

ForceDataset read_force_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "dx,dy,dz,fz")
    throw std::runtime_error("bad force CSV header in " + path.string());
  ForceDataset d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw std::runtime_error("bad force CSV row: " + line);
    d.append(Vec3{std::stod(fields[0]), std::stod(fields[1]), std::stod(fields[2])},
             std::stod(fields[3]));
  }
  d.validate();
  return d;
}

void write_trace_csv(const std::filesystem::path& path, const DroneTrace& trace,
                     bool timing) {
  auto out = open_out(path);
  out << "t,x,y,z,xref,yref,zref,fz_true,fz_pred,solve_ns,converged\n";
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    out << format_double(trace.t[i]) << ',' << format_double(trace.position[i].x())
        << ',' << format_double(trace.position[i].y()) << ','
        << format_double(trace.position[i].z()) << ','
        << format_double(trace.ref_position[i].x()) << ','
        << format_double(trace.ref_position[i].y()) << ','
        << format_double(trace.ref_position[i].z()) << ','
        << format_double(trace.fz_true[i]) << ','
        << format_double(trace.fz_pred[i]) << ','
        << (timing ? trace.solve_ns[i] : 0) << ','
        << static_cast<int>(trace.converged[i]) << '\n';
  }
}

void write_learning_curve_csv(const std::filesystem::path& path,
                              const std::vector<CurvePoint>& curve) {
  auto out = open_out(path);
  out << "episode,J,target_dx,target_dy,target_dz\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << format_double(p.cost) << ','
        << format_double(p.target.x()) << ',' << format_double(p.target.y())
        << ',' << format_double(p.target.z()) << '\n';
  }
}

namespace {

std::string cell_label(double dd) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "dd_%.3f", dd);
  return buf;
}

const BenchmarkCell* find_cell(const std::vector<BenchmarkCell>& cells,
                               ControllerKind kind, double dd) {
  for (const auto& c : cells)
    if (c.controller == kind && c.dd == dd) return &c;
  return nullptr;
}

std::vector<ControllerKind> cell_controllers(const std::vector<BenchmarkCell>& cells) {
  std::vector<ControllerKind> kinds;
  for (const auto& c : cells) {
    bool seen = false;
    for (ControllerKind k : kinds) seen = seen || k == c.controller;
    if (!seen) kinds.push_back(c.controller);
  }
  return kinds;
}

}  // namespace

void write_benchmark_csv(const std::filesystem::path& path,
                         const std::vector<BenchmarkCell>& cells,
                         const std::vector<double>& dd_list, bool timing) {
  auto out = open_out(path);
  out << "controller";
  for (double dd : dd_list) out << ',' << cell_label(dd);
  out << ",time_s\n";
  for (ControllerKind kind : cell_controllers(cells)) {
    out << controller_kind_name(kind);
    double time_s = 0.0;
    for (double dd : dd_list) {
      const BenchmarkCell* c = find_cell(cells, kind, dd);
      out << ',' << (c != nullptr ? format_double(c->mean_error) : "nan");
      if (c != nullptr) time_s += c->mean_step_ns * 1e-9 / dd_list.size();
    }
    out << ',' << (timing ? format_double(time_s) : "0") << '\n';
  }
}

std::string benchmark_table_text(const std::vector<BenchmarkCell>& cells,
                                 const std::vector<double>& dd_list,
                                 bool timing) {
  std::ostringstream out;
  out << "average |z - z_ref| (m) on the lower drone\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-14s", "controller");
  out << buf;
  for (double dd : dd_list) {
    std::snprintf(buf, sizeof(buf), "  dd=%-8.2f", dd);
    out << buf;
  }
  if (timing) out << "  time/step";
  out << '\n';
  for (ControllerKind kind : cell_controllers(cells)) {
    std::snprintf(buf, sizeof(buf), "%-14s", controller_kind_name(kind).c_str());
    out << buf;
    double time_s = 0.0;
    for (double dd : dd_list) {
      const BenchmarkCell* c = find_cell(cells, kind, dd);
      std::snprintf(buf, sizeof(buf), "  %-11.5f", c != nullptr ? c->mean_error : 0.0);
      out << buf;
      if (c != nullptr) time_s += c->mean_step_ns * 1e-9 / dd_list.size();
    }
    if (timing) {
      std::snprintf(buf, sizeof(buf), "  %.6f s", time_s);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

void write_truth_grid_csv(const std::filesystem::path& path,
                          const DownwashTruthParams& params) {
  auto out = open_out(path);
  out << "dx,dy,dz,fz\n";
  for (double dz = 0.10; dz <= 0.6001; dz += 0.025)
    for (double dx = -0.4; dx <= 0.4001; dx += 0.02) {
      const Vec3 delta{dx, 0.0, dz};
      out << format_double(dx) << ",0," << format_double(dz) << ','
          << format_double(true_force(delta, params).z()) << '\n';
    }
}

void save_gp_artifact(const std::filesystem::path& path, const GpModel& gp) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = gp.kernel().kind == KernelKind::RationalQuadratic
                  ? "rational-quadratic"
                  : "squared-exponential";
  j["signal_var"] = gp.kernel().signal_var;
  j["length_scales"] = vec3_json(gp.kernel().length_scales);
  j["alpha"] = gp.kernel().alpha;
  j["noise_var"] = gp.noise_var();
  j["data"] = dataset_json(gp.dataset());
  json w = json::array();
  for (Eigen::Index i = 0; i < gp.weights().size(); ++i)
    w.push_back(gp.weights()(i));
  j["weights"] = std::move(w);
  write_json(path, j);
}

GpModel load_gp_artifact(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("unsupported gp artifact schema in " + path.string());
  Kernel k;
  k.kind = j.at("kind").get<std::string>() == "rational-quadratic"
               ? KernelKind::RationalQuadratic
               : KernelKind::SquaredExponential;
  k.signal_var = j.at("signal_var").get<double>();
  k.length_scales = vec3_from_json(j.at("length_scales"));
  k.alpha = j.at("alpha").get<double>();
  // Refitting from the stored data reproduces the saved weights exactly;
  // the stored weights are informational.
  return GpModel::fit(dataset_from_json(j.at("data")), k,
                      j.at("noise_var").get<double>());
}

void save_bo_checkpoint(const std::filesystem::path& path, const BoState& state) {
  json j;
  j["schema_version"] = 1;
  j["episode"] = state.episode;
  j["seed"] = state.seed;
  j["force_data"] = dataset_json(state.force_data);
  j["perf_data"] = dataset_json(state.perf_data);
  write_json(path, j);
}

BoState load_bo_checkpoint(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint schema in " + path.string());
  BoState s;
  s.episode = j.at("episode").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.force_data = dataset_from_json(j.at("force_data"));
  s.perf_data = dataset_from_json(j.at("perf_data"));
  return s;
}

nlohmann::json sim_result_json(const SimResult& result, bool timing) {
  json j;
  j["steps"] = result.steps;
  j["diverged"] = result.diverged;
  j["lower_index"] = result.lower_index;
  j["converged_fraction"] = result.converged_fraction;
  json drones = json::array();
  for (std::size_t i = 0; i < result.summary.size(); ++i) {
    json d;
    d["avg_abs_z_err"] = result.summary[i].avg_abs_z_err;
    d["rms_3d_err"] = result.summary[i].rms_3d_err;
    d["max_err"] = result.summary[i].max_err;
    d["mean_step_ns"] = timing ? result.mean_step_ns[i] : 0.0;
    json stats;
    stats["iterations"] = result.traces[i].iterations;
    json conv = json::array();
    for (char c : result.traces[i].converged) conv.push_back(c != 0);
    stats["converged"] = std::move(conv);
    json ns = json::array();
    for (long long v : result.traces[i].solve_ns) ns.push_back(timing ? v : 0);
    stats["solve_ns"] = std::move(ns);
    d["solve_stats"] = std::move(stats);
    drones.push_back(std::move(d));
  }
  j["drones"] = std::move(drones);
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  json j;
  in >> j;
  return j;
}

}  // namespace dwmpc::io
