#include "s2s/commands.hpp"
#include "s2s/config.hpp"
#include "s2s/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace {

s2s::RunConfig load_config(const std::string& path) {
    return path.empty() ? s2s::run_config_from_json(nlohmann::json::object()) : s2s::load_run_config(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speckle2Speckle: paired speckle simulation, despeckling network training and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;
    app.add_option("--threads", threads, "Worker threads for dataset generation and evaluation")
        ->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    std::string config_path;
    std::string out_dir;
    std::string manifest;
    std::string checkpoint;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;

    auto* simulate = app.add_subcommand("simulate", "Generate a paired speckle corpus");
    simulate->add_option("-c,--config", config_path, "JSON run configuration");
    simulate->add_option("-o,--out", out_dir, "Output directory")->required();
    simulate->add_option("--seed", seed, "Root seed (overrides the config)");

    bool resume = false;
    auto* train = app.add_subcommand("train", "Train the despeckling network");
    train->add_option("-c,--config", config_path, "JSON run configuration");
    train->add_option("-m,--manifest", manifest, "Dataset manifest or directory")->required();
    train->add_option("-o,--out", out_dir, "Output directory")->required();
    train->add_option("--epochs", epochs, "Epochs (overrides the config)");
    train->add_flag("--resume", resume, "Continue from the output directory's last checkpoint");

    std::string input;
    std::string output;
    std::string method = "net";
    double alpha = 0.0;
    auto* apply = app.add_subcommand("apply", "Despeckle one image, optionally blending with the original");
    apply->add_option("-i,--input", input, "Input image (.s2sf or .pgm)")->required();
    apply->add_option("-o,--output", output, "Output image, written in the input's format")->required();
    apply->add_option("-m,--method", method, "Method: type name, JSON object or JSON file");
    apply->add_option("--checkpoint", checkpoint, "Network checkpoint for method 'net'");
    apply->add_option("-a,--alpha", alpha, "Blend weight of the original image in [0, 1]");

    auto* evaluate = app.add_subcommand("evaluate", "Score methods on a validation or test split");
    evaluate->add_option("-c,--config", config_path, "JSON run configuration");
    evaluate->add_option("-m,--manifest", manifest, "Dataset manifest or directory")->required();
    evaluate->add_option("-o,--out", out_dir, "Report directory")->required();
    evaluate->add_option("--checkpoint", checkpoint, "Add the network from this checkpoint");

    std::string image;
    std::string out_json;
    auto* bench = app.add_subcommand("bench", "Time methods on one image");
    bench->add_option("-c,--config", config_path, "JSON run configuration");
    bench->add_option("-i,--image", image, "Image to process")->required();
    bench->add_option("-o,--out", out_json, "Report JSON path")->required();
    bench->add_option("--checkpoint", checkpoint, "Add the network from this checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (simulate->parsed()) {
            auto cfg = load_config(config_path);
            if (seed) {
                cfg.seed = *seed;
            }
            std::cout << s2s::cmd_simulate(cfg, out_dir, threads).string() << '\n';
        } else if (train->parsed()) {
            auto cfg = load_config(config_path);
            if (epochs) {
                cfg.training.epochs = *epochs;
            }
            std::cout << s2s::cmd_train(cfg, manifest, out_dir, resume).string() << '\n';
        } else if (apply->parsed()) {
            const auto ckpt = checkpoint.empty() ? std::nullopt : std::optional<std::string>(checkpoint);
            s2s::cmd_apply(input, s2s::parse_method_argument(method, ckpt), output, alpha);
        } else if (evaluate->parsed()) {
            const auto cfg = load_config(config_path);
            const auto ckpt = checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint);
            std::cout << s2s::cmd_evaluate(cfg, manifest, out_dir, threads, ckpt).report_json.string() << '\n';
        } else if (bench->parsed()) {
            const auto cfg = load_config(config_path);
            const auto ckpt = checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint);
            std::cout << s2s::cmd_bench(cfg, image, out_json, ckpt).string() << '\n';
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return s2s::exit_code_for(e);
    }
    return 0;
}
