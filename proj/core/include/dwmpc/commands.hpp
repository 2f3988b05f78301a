#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dwmpc/config.hpp"

namespace dwmpc {

/// Subcommand entry points shared by the CLI binary and the tests.
/// Every command is reproducible from config + seed; outputs land only
/// under `out_dir` and embed the resolved configuration.

int run_collect(const RunConfig& config, const std::filesystem::path& out_dir);

int run_fit(const RunConfig& config, const std::filesystem::path& dataset_csv,
            const std::filesystem::path& out_dir);

int run_simulate(const RunConfig& config, const std::string& controller,
                 double dd,
                 const std::optional<std::filesystem::path>& gp_artifact,
                 const std::filesystem::path& out_dir);

int run_benchmark(const RunConfig& config,
                  const std::optional<std::filesystem::path>& gp_artifact,
                  const std::filesystem::path& out_dir);

int run_bo(const RunConfig& config, const std::string& sampler,
           const std::optional<std::filesystem::path>& resume_checkpoint,
           const std::filesystem::path& out_dir);

}  // namespace dwmpc
