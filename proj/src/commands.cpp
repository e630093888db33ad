#include "s2s/commands.hpp"

#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <set>

namespace s2s {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
        dynamic_cast<const DomainError*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const InputError*>(&e)) {
        return 3;
    }
    if (dynamic_cast<const DivergenceError*>(&e)) {
        return 4;
    }
    return 1;
}

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    }
}

void write_resolved(const fs::path& path, const std::string& command, const json& body) {
    json j = body;
    j["command"] = command;
    write_file_atomic(path, j.dump(2) + "\n");
}

// Rough pixel budget above which a corpus takes hours on a desktop.
constexpr double kLargeCorpusPixels = 5e7;

} // namespace

fs::path cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, unsigned threads) {
    cfg.validate();
    const DatasetPlan plan = plan_dataset(cfg.dataset);
    const double pixels = static_cast<double>(plan.instance_images) * cfg.dataset.grid.width_px * cfg.dataset.grid.height_px;
    if (pixels > kLargeCorpusPixels) {
        spdlog::warn("simulating {} images of {}x{} px; this will take a long time", plan.instance_images,
                     cfg.dataset.grid.width_px, cfg.dataset.grid.height_px);
    }
    ensure_dir(out_dir);
    json resolved = run_config_to_json(cfg);
    resolved["threads"] = threads;
    write_resolved(out_dir / kResolvedConfig, "simulate", resolved);
    spdlog::info("simulating {} phantoms ({} instance images) into {}", plan.geometry_files, plan.instance_images,
                 out_dir.string());
    generate_dataset(cfg.dataset, cfg.seed, out_dir, threads);
    return out_dir / kManifestName;
}

fs::path cmd_train(const RunConfig& cfg, const fs::path& manifest, const fs::path& out_dir, bool resume) {
    cfg.validate();
    const DatasetManifest m = load_manifest(manifest);
    ensure_dir(out_dir);
    json resolved = run_config_to_json(cfg);
    resolved["manifest"] = fs::absolute(manifest).string();
    resolved["resume"] = resume;
    write_resolved(out_dir / kResolvedConfig, "train", resolved);
    TrainOptions opts{cfg.network, cfg.loss, cfg.training, resume};
    return train_network(m, opts, out_dir).checkpoint;
}

json parse_method_argument(const std::string& arg, const std::optional<std::string>& checkpoint) {
    json spec;
    if (!arg.empty() && arg.front() == '{') {
        try {
            spec = json::parse(arg);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed method JSON: ") + e.what());
        }
    } else if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") {
        const auto bytes = read_file(arg);
        try {
            spec = json::parse(bytes.begin(), bytes.end());
        } catch (const json::parse_error& e) {
            throw ConfigError("malformed method file '" + arg + "': " + e.what());
        }
    } else {
        spec = {{"type", arg}};
    }
    if (checkpoint && spec.is_object() && spec.value("type", "") == "net" && !spec.contains("checkpoint")) {
        spec["checkpoint"] = *checkpoint;
    }
    return spec;
}

void cmd_apply(const fs::path& input, const json& method_spec, const fs::path& output, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1]");
    }
    const Method method = method_from_json(method_spec);
    ImageFormat format = ImageFormat::s2sf;
    const ImageGrid img = read_image(input, &format);
    if (output.has_parent_path()) {
        ensure_dir(output.parent_path());
    }
    write_resolved(fs::path(output.string() + ".resolved.json"), "apply",
                   {{"input", input.string()}, {"method", method_spec}, {"alpha", alpha}, {"output", output.string()}});
    const ImageGrid filtered = method.run(img);
    write_image(output, blend(filtered, img, alpha), format);
}

EvaluateOutputs cmd_evaluate(const RunConfig& cfg, const fs::path& manifest, const fs::path& out_dir,
                             unsigned threads, const std::optional<fs::path>& checkpoint) {
    cfg.validate();
    const DatasetManifest m = load_manifest(manifest);
    std::vector<json> specs = cfg.eval.methods;
    if (checkpoint) {
        specs.push_back({{"type", "net"}, {"checkpoint", fs::absolute(*checkpoint).string()}});
    }
    std::vector<Method> methods;
    for (const auto& s : specs) {
        methods.push_back(method_from_json(s));
    }
    ensure_dir(out_dir);
    json resolved = run_config_to_json(cfg);
    resolved["manifest"] = fs::absolute(manifest).string();
    resolved["threads"] = threads;
    resolved["eval"]["methods"] = specs;
    write_resolved(out_dir / kResolvedConfig, "evaluate", resolved);

    EvaluateOutputs out;
    out.report = evaluate_corpus(m, cfg.eval.split, methods, cfg.eval.regions, threads);
    out.report_json = out_dir / "report.json";
    out.rows_csv = out_dir / "per_image.csv";
    out.histogram_csv = out_dir / "histograms.csv";
    write_file_atomic(out.report_json, report_to_json(out.report).dump(2) + "\n");
    write_file_atomic(out.rows_csv, rows_to_csv(out.report.rows));
    write_file_atomic(out.histogram_csv, histograms_to_csv(out.report));
    std::set<std::string> region_names;
    for (const auto& mr : out.report.methods) {
        for (const auto& [name, agg] : mr.regions) {
            region_names.insert(name);
        }
    }
    for (const auto& name : region_names) {
        write_pgm(out_dir / ("violin_" + name + ".pgm"), violin_strip(out.report, name));
    }
    return out;
}

fs::path cmd_bench(const RunConfig& cfg, const fs::path& image, const fs::path& out_json,
                   const std::optional<fs::path>& checkpoint) {
    cfg.validate();
    std::vector<json> specs = cfg.bench.methods;
    if (checkpoint) {
        specs.push_back({{"type", "net"}, {"checkpoint", fs::absolute(*checkpoint).string()}});
    }
    std::vector<Method> methods;
    for (const auto& s : specs) {
        methods.push_back(method_from_json(s));
    }
    const ImageGrid img = read_image(image);
    if (out_json.has_parent_path()) {
        ensure_dir(out_json.parent_path());
    }
    json resolved = run_config_to_json(cfg);
    resolved["image"] = fs::absolute(image).string();
    resolved["bench"]["methods"] = specs;
    write_resolved(fs::path(out_json.string() + ".resolved.json"), "bench", resolved);

    json rows = json::array();
    for (const auto& m : methods) {
        spdlog::info("benchmarking {} ({} warmups, {} reps)", m.name, cfg.bench.warmups, cfg.bench.reps);
        const RuntimeStats r = bench_runtime(m, img, cfg.bench.warmups, cfg.bench.reps);
        rows.push_back({{"name", m.name},
                        {"mean_ms", r.mean_ms},
                        {"std_ms", r.std_ms},
                        {"min_ms", r.min_ms},
                        {"max_ms", r.max_ms},
                        {"samples_ms", r.samples_ms}});
    }
    const json report{{"image", {{"path", image.string()}, {"width", img.width()}, {"height", img.height()}}},
                      {"warmups", cfg.bench.warmups},
                      {"reps", cfg.bench.reps},
                      {"threads", 1},
                      {"methods", rows}};
    write_file_atomic(out_json, report.dump(2) + "\n");
    return out_json;
}

} // namespace s2s
