#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwmpc/bo.hpp"
#include "dwmpc/gp.hpp"
#include "dwmpc/simulator.hpp"

namespace dwmpc::io {

/// Round-trip-exact decimal rendering of a double.
std::string format_double(double v);

void write_force_csv(const std::filesystem::path& path, const ForceDataset& data);
ForceDataset read_force_csv(const std::filesystem::path& path);

/// Header: t,x,y,z,xref,yref,zref,fz_true,fz_pred,solve_ns,converged.
/// Wall times are written as 0 unless `timing` is set; everything else
/// is reproducible from config + seed.
void write_trace_csv(const std::filesystem::path& path, const DroneTrace& trace,
                     bool timing);

/// Header: episode,J,target_dx,target_dy,target_dz.
void write_learning_curve_csv(const std::filesystem::path& path,
                              const std::vector<CurvePoint>& curve);

void write_benchmark_csv(const std::filesystem::path& path,
                         const std::vector<BenchmarkCell>& cells,
                         const std::vector<double>& dd_list, bool timing);
std::string benchmark_table_text(const std::vector<BenchmarkCell>& cells,
                                 const std::vector<double>& dd_list, bool timing);

/// Gridded truth field export (dx,dy,dz,fz) for surface plots.
void write_truth_grid_csv(const std::filesystem::path& path,
                          const DownwashTruthParams& params);

void save_gp_artifact(const std::filesystem::path& path, const GpModel& gp);
GpModel load_gp_artifact(const std::filesystem::path& path);

void save_bo_checkpoint(const std::filesystem::path& path, const BoState& state);
BoState load_bo_checkpoint(const std::filesystem::path& path);

nlohmann::json sim_result_json(const SimResult& result, bool timing);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace dwmpc::io
