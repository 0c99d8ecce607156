#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convoy/scenario.hpp"

namespace convoy {

enum class Subcommand { run, batch, seed_pool, replay };

struct CliConfig {
    Subcommand subcommand = Subcommand::run;
    ScenarioConfig scenario;
    int seeds = 50;
    int workers = 0;  // 0: hardware concurrency
    std::filesystem::path out;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> experience_pool;
    std::filesystem::path trace_in;  // replay input
    int per_task = 24;               // seed-pool: experiences kept per task area
    int verbosity = 0;
};

/// Applies a JSON config object onto `cfg`. Unknown keys raise ConfigError.
void apply_config_json(const nlohmann::json& j, CliConfig& cfg);

/// Curated pool from labeled runs: per task area, at most `per_task` successful experiences,
/// spread over the decision kinds and over time.
ExperiencePool curate_seed_pool(std::span<const RunSummary> runs, int per_task);

/// Entry point of convoy_cli. Exit codes: 0 completed, 1 usage or configuration error, 2 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace convoy
