#pragma once

#include "s2s/dataset.hpp"
#include "s2s/eval.hpp"
#include "s2s/loss.hpp"
#include "s2s/net.hpp"
#include "s2s/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace s2s {

struct EvalConfig {
    Split split = Split::val;
    /// Method specs as accepted by method_from_json.
    std::vector<nlohmann::json> methods;
    EvalRegions regions;
};

struct BenchConfig {
    unsigned warmups = 1;
    unsigned reps = 5;
    std::vector<nlohmann::json> methods;
};

/// Shared configuration for every subcommand. Each command reads the sections it needs.
struct RunConfig {
    std::uint64_t seed = 1;
    DatasetConfig dataset;
    net::NetworkSpec network;
    LossConfig loss;
    TrainingConfig training;
    EvalConfig eval;
    BenchConfig bench;

    void validate() const;
};

/// identity plus the five classical filters with their reference parameters.
std::vector<nlohmann::json> default_method_specs();

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg);
/// Missing keys keep their defaults; unknown keys raise ConfigError. When the phantom
/// section omits its extent, the extent is taken from the grid.
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

nlohmann::json loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Parses a JSON file; syntax errors and schema violations raise ConfigError, unreadable files IoError.
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace s2s
