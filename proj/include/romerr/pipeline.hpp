#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace romerr {

// Exit codes shared by the CLI subcommands: 0 success, 2 validation/config,
// 3 solver, 4 training, 5 compatibility.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitTraining = 4;
inline constexpr int kExitCompatibility = 5;

struct CommandOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

// Runs the surrogate/FOM campaign and writes per-instance dataset CSVs,
// trajectory summaries, reduction artifacts, and the manifest.
int run_generate(const std::string& config_path, const std::string& out_dir,
                 const CommandOverrides& overrides = {});

// Grid-searches one family on a generated dataset and writes the model
// checkpoint (selected hyperparameters, parameters, noise fits).
int run_train(const std::string& data_dir, const std::string& family,
              const std::string& feature_kind, const std::string& response,
              const std::string& config_path, const std::string& out_path,
              const CommandOverrides& overrides = {});

// Scores a checkpoint on the test split and writes metrics JSON plus
// per-instance prediction CSVs.
int run_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& out_dir);

// Merges evaluation outputs into the report grid (CSV + JSON).
int run_report(const std::vector<std::string>& evaluation_dirs, const std::string& out_path);

} // namespace romerr
