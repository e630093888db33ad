// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include "s2s/commands.hpp"
#include "s2s/config.hpp"
#include "s2s/dataset.hpp"
#include "s2s/errors.hpp"
#include "s2s/filters.hpp"
#include "s2s/image_io.hpp"
#include "s2s/imaging.hpp"
#include "s2s/loss.hpp"
#include "s2s/phantom.hpp"

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "speckle_stats.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>

using namespace s2s;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(const ImageGrid& a, const ImageGrid& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

Outcome filter_oracles() {
    using namespace filters;
    const std::vector<std::pair<FilterParams, std::function<ImageGrid(const ImageGrid&)>>> cases = {
        {Srad{3, 0.1, {2, 2, 8, 8}}, [](const ImageGrid& g) { return oracle::srad(g, 3, 0.1, {2, 2, 8, 8}); }},
        {Median{5}, [](const ImageGrid& g) { return oracle::median(g, 5); }},
        {Bilateral{0.1, 1.5}, [](const ImageGrid& g) { return oracle::bilateral(g, 0.1, 1.5); }},
        {Nlm{0.1, 7, 3}, [](const ImageGrid& g) { return oracle::nonlocal(g, 7, 3, 0.1, false); }},
        {Obnlm{7, 3, 0.5}, [](const ImageGrid& g) { return oracle::nonlocal(g, 7, 3, 0.5, true); }},
    };
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [params, reference] : cases) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const ImageGrid img = oracle::random_image(16, 16, 7000 + seed, 0.02, 1.0);
            const double d = max_abs_diff(filters::apply(img, params), reference(img));
            if (d >= worst) {
                worst = d;
                worst_name = type_name(params);
            }
        }
    }
    return {worst <= 1e-10, "max |diff| " + fmt("%.2e", worst) + " (" + worst_name + "), limit 1e-10"};
}

Outcome speckle_physics() {
    const auto env = speckle::homogeneous_envelope(100000, 2024);
    const double snr = speckle::snr(env);
    const double ks = speckle::ks_exponential(env);
    return {std::abs(snr - 1.91) <= 0.05 && ks < 0.02,
            "envelope SNR " + fmt("%.4f", snr) + " (1.91 +- 0.05), intensity KS " + fmt("%.4f", ks) + " (< 0.02)"};
}

Outcome loss_gradient() {
    const LossConfig cfg;
    double loss_err = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        loss_err = std::max(loss_err, gradcheck::loss_gradient_error(100 + seed, 20, cfg));
    }
    double jvp_err = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        jvp_err = std::max(jvp_err, gradcheck::network_jvp_error(200 + seed, 2, 8, 16));
    }
    return {loss_err <= 1e-5 && jvp_err <= 1e-5,
            "loss FD rel err " + fmt("%.2e", loss_err) + ", network JVP rel err " + fmt("%.2e", jvp_err) +
                ", limit 1e-5"};
}

Outcome loss_reductions() {
    const ImageGrid o = oracle::random_image(24, 20, 1);
    const ImageGrid t = oracle::random_image(24, 20, 2);
    const auto empty = interface_weight(InterfaceMap{ImageGrid(24, 20)}, 5.0);
    double mse_plain = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        mse_plain += (o[i] - t[i]) * (o[i] - t[i]);
    }
    mse_plain /= static_cast<double>(o.size());
    bool exact = true;
    for (double lambda : {0.0, 1.0, 500.0, 1e6}) {
        LossConfig cfg;
        cfg.lambda = lambda;
        exact = exact && loss_forward(o, t, empty, cfg) == mse_plain;
    }
    LossConfig zero;
    zero.lambda = 0.0;
    const auto maps = interface_weight(gradcheck::ring_interfaces(24, 20), zero);
    const ImageGrid g = loss_backward(o, t, maps, zero);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double inv = maps.inverse_weight[i];
        worst = std::max(worst, std::abs(g[i] - 2.0 / static_cast<double>(g.size()) * (o[i] - t[i]) * inv * inv));
    }
    return {exact && worst <= 1e-12, std::string("I_i = 0 equals MSE exactly: ") + (exact ? "yes" : "no") +
                                         "; lambda = 0 gradient deviation " + fmt("%.2e", worst) + " (<= 1e-12)"};
}

struct TrainingRun {
    fs::path checkpoint;
    EvaluateOutputs eval;
    double seconds = 0.0;
};

TrainingRun desk_training(const fs::path& work, unsigned threads) {
    RunConfig cfg;
    cfg.eval.methods = {{{"type", "identity"}, {"name", "input"}}};
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path data = work / "corpus";
    const fs::path run = work / "train";
    fs::remove_all(data);
    fs::remove_all(run);
    cmd_simulate(cfg, data, threads);
    TrainingRun r;
    r.checkpoint = cmd_train(cfg, data, run);
    r.eval = cmd_evaluate(cfg, data, work / "eval", threads, r.checkpoint);
    r.seconds = seconds_since(t0);
    return r;
}

const MethodReport& method_named(const EvalReport& r, const std::string& name) {
    for (const auto& m : r.methods) {
        if (m.name == name) {
            return m;
        }
    }
    throw std::runtime_error("method '" + name + "' missing from the report");
}

Outcome training_efficacy(const TrainingRun& run) {
    const auto& in = method_named(run.eval.report, "input");
    const auto& net = method_named(run.eval.report, "net");
    const double ratio = net.mse_mean / in.mse_mean;
    return {ratio <= 0.5, "val MSE net " + fmt("%.3e", net.mse_mean) + " / input " + fmt("%.3e", in.mse_mean) +
                              " = " + fmt("%.3f", ratio) + " (<= 0.5); " + fmt("%.0f", run.seconds) + " s"};
}

Outcome homogeneity(const TrainingRun& run) {
    const auto& in = method_named(run.eval.report, "input");
    const auto& net = method_named(run.eval.report, "net");
    const auto a = in.regions.find("homogeneous");
    const auto b = net.regions.find("homogeneous");
    if (a == in.regions.end() || b == net.regions.end() || a->second.regions == 0) {
        return {false, "no homogeneous regions found on the validation split"};
    }
    const double ratio = b->second.std / a->second.std;
    return {ratio <= 0.6, "homogeneous std net " + fmt("%.4f", b->second.std) + " / input " +
                              fmt("%.4f", a->second.std) + " = " + fmt("%.3f", ratio) + " over " +
                              std::to_string(a->second.regions) + " regions (<= 0.6)"};
}

Outcome runtime_ordering(const fs::path& work, const fs::path& checkpoint) {
    const GridSpec grid{502, 801, 0.075, 0.075};
    PhantomConfig pc;
    pc.width_mm = grid.width_mm();
    pc.height_mm = grid.height_mm();
    const PhantomGeometry geom = generate_phantom(pc, 77);
    const fs::path image = work / "bench" / "full_scale.s2sf";
    fs::create_directories(image.parent_path());
    write_s2sf(image, simulate_bmode(geom, ImagingConfig{}, grid, 78));

    RunConfig cfg;
    cfg.bench.reps = 5;
    cfg.bench.warmups = 1;
    cfg.bench.methods = {filters::params_to_json(filters::Nlm{})};
    const fs::path report_path = cmd_bench(cfg, image, work / "bench" / "report.json", checkpoint);
    const auto report = nlohmann::json::parse(read_file(report_path));
    double nlm_ms = 0.0;
    double net_ms = 0.0;
    for (const auto& row : report.at("methods")) {
        (row.at("name") == "net" ? net_ms : nlm_ms) = row.at("mean_ms").get<double>();
    }
    const double speedup = nlm_ms / net_ms;
    return {speedup >= 10.0, "502x801 NLM " + fmt("%.0f", nlm_ms) + " ms vs net " + fmt("%.0f", net_ms) +
                                 " ms, speedup " + fmt("%.1f", speedup) + "x (>= 10x, 5 reps)"};
}

std::map<std::string, std::vector<std::uint8_t>> pipeline_bytes(const fs::path& dir) {
    fs::remove_all(dir);
    RunConfig cfg;
    cfg.seed = 99;
    cfg.dataset.train = {2, 2};
    cfg.dataset.val = {0, 10};
    cfg.dataset.test = {0, 10};
    cfg.training.epochs = 2;
    cfg.training.checkpoint_every = 1;
    cmd_simulate(cfg, dir / "data", 2);
    const fs::path ckpt = cmd_train(cfg, dir / "data", dir / "run");
    const auto m = load_manifest(dir / "data");
    const fs::path input = m.resolve(m.split(Split::train).entries[0].instance_paths[0]);
    cmd_apply(input, {{"type", "net"}, {"checkpoint", ckpt.string()}}, dir / "applied.s2sf", 0.0);

    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        const std::string ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".s2sf" || ext == ".s2sn")) {
            files[fs::relative(e.path(), dir).string()] = read_file(e.path());
        }
    }
    return files;
}

Outcome determinism(const fs::path& work) {
    const auto a = pipeline_bytes(work / "determinism_a");
    const auto b = pipeline_bytes(work / "determinism_b");
    std::size_t differing = 0;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        differing += (it == b.end() || it->second != bytes) ? 1 : 0;
    }
    const bool same = differing == 0 && a.size() == b.size() && a.count("applied.s2sf") == 1 &&
                      a.count("run/checkpoint_final.s2sn") == 1;
    return {same, std::to_string(a.size()) + " images and checkpoints compared, " + std::to_string(differing) +
                      " differ"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speckle2Speckle acceptance run"};
    fs::path work = fs::temp_directory_path() / "s2s_acceptance";
    std::set<int> only;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--work-dir", work, "Scratch directory");
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--threads", threads, "Worker threads for simulation and evaluation");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);
    fs::create_directories(work);

    auto wanted = [&](int k) { return only.empty() || only.count(k) != 0; };
    int failures = 0;
    auto report = [&](int k, const std::string& title, const std::function<Outcome()>& fn) {
        if (!wanted(k)) {
            return;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << " " << title << ": " << o.detail
                  << std::endl;
    };

    report(1, "filter-oracle equivalence", filter_oracles);
    report(2, "speckle physics", speckle_physics);
    report(3, "loss and network gradients", loss_gradient);

    std::optional<TrainingRun> run;
    std::string run_error;
    if (wanted(4) || wanted(5) || wanted(6)) {
        try {
            run = desk_training(work, threads);
        } catch (const std::exception& e) {
            run_error = e.what();
        }
    }
    auto needs_run = [&](const std::function<Outcome(const TrainingRun&)>& fn) {
        return [&, fn]() -> Outcome {
            if (!run) {
                return {false, "training run failed: " + run_error};
            }
            return fn(*run);
        };
    };
    report(4, "training efficacy", needs_run(training_efficacy));
    report(5, "homogeneity", needs_run(homogeneity));
    report(6, "runtime ordering", needs_run([&](const TrainingRun& r) { return runtime_ordering(work, r.checkpoint); }));
    report(7, "determinism", [&] { return determinism(work); });
    report(8, "loss reductions", loss_reductions);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
