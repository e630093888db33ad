#pragma once

#include "s2s/config.hpp"

#include <json.hpp>

#include <exception>
#include <filesystem>
#include <optional>
#include <string>

namespace s2s {

inline constexpr const char* kResolvedConfig = "resolved_config.json";

/// 0 success, 2 configuration, 3 I/O or data, 4 numeric divergence, 1 anything else.
int exit_code_for(const std::exception& e);

/// Generates the corpus described by cfg.dataset under `out_dir`; returns the manifest path.
std::filesystem::path cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, unsigned threads);

/// Trains on the manifest's train split; returns the final checkpoint path.
std::filesystem::path cmd_train(const RunConfig& cfg, const std::filesystem::path& manifest,
                                const std::filesystem::path& out_dir, bool resume = false);

/// Accepts a JSON object, a path to a JSON file or a bare method type ("identity", "median", ...).
/// A net spec without its own checkpoint takes `checkpoint`.
nlohmann::json parse_method_argument(const std::string& arg, const std::optional<std::string>& checkpoint = {});

/// output = (1 - alpha) * method(input) + alpha * input, written in the input's format.
void cmd_apply(const std::filesystem::path& input, const nlohmann::json& method_spec,
               const std::filesystem::path& output, double alpha);

struct EvaluateOutputs {
    std::filesystem::path report_json;
    std::filesystem::path rows_csv;
    std::filesystem::path histogram_csv;
    EvalReport report;
};

/// Runs cfg.eval.methods (plus a network method when `checkpoint` is given) on the configured split.
EvaluateOutputs cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& manifest,
                             const std::filesystem::path& out_dir, unsigned threads,
                             const std::optional<std::filesystem::path>& checkpoint = {});

/// Times cfg.bench.methods (plus the network when `checkpoint` is given) on one image; returns the report path.
std::filesystem::path cmd_bench(const RunConfig& cfg, const std::filesystem::path& image,
                                const std::filesystem::path& out_json,
                                const std::optional<std::filesystem::path>& checkpoint = {});

} // namespace s2s
