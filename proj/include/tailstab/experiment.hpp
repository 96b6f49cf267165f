#pragma once

#include "tailstab/processes.hpp"
#include "tailstab/report.hpp"
#include "tailstab/tas.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tailstab {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { TasCurve, TailStats, Verify, Full };
std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct TailStatsConfig {
    std::size_t path_length = 100'000;
    double tail_quantile = 0.99;
    std::size_t k_max = 10;
    std::size_t bootstrap = 500;
    std::size_t block_length = 0;  // 0: ceil(n^{1/3})
    std::optional<std::string> data_path;
};

struct VerifyConfig {
    std::size_t path_length = 1'000'000;
    double tail_quantile = 0.999;
    std::size_t ks_samples = 100'000;
    std::size_t mc_reps = 200'000;  // Case II moment draws
};

struct ExperimentConfig {
    Mode mode = Mode::TasCurve;
    ProcessSpec process;
    nlohmann::json process_json;  // normalized echo
    std::size_t reps = 0;
    std::vector<std::size_t> lags;
    double y_quantile = 0.95;
    double q = 2.0;
    std::uint64_t seed = 0;
    double epsilon = 0.01;
    std::optional<double> eta;
    double decay_tolerance = 0.2;
    GridPolicy grid;
    TailStatsConfig tailstats;
    VerifyConfig verify;
    std::string outputs = "out";
    bool export_draws = false;

    nlohmann::json to_json() const;
};

/// Field-level validation; throws Error(Config) with a message naming the JSON path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses process / law / coefficient blocks; `where` prefixes diagnostics.
TailLaw parse_law(const nlohmann::json& j, const std::string& where);
ProcessSpec parse_process(const nlohmann::json& j, const std::string& where = "process");

struct ExperimentResult {
    RunReport report;
    std::optional<ThetaEstimate> theta;
    std::optional<CoupledDraws> draws;
};

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// report.json, theta.csv, tailstats.csv, plotdata/*.csv and, when requested, draws.csv + draws.json.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

/// CSV of (replication, lag, x, x_star) plus a JSON sidecar with the process and seed.
void write_coupled_draws(const CoupledDraws& draws, const nlohmann::json& process_json,
                         const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path);

}  // namespace tailstab
