#include "s2s/commands.hpp"
#include "s2s/config.hpp"
#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace s2s;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + S2S_CLI_PATH + "\" -q " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// 32x32 corpus with one train phantom pair and one validation phantom.
std::string tiny_config_json(int train_phantoms = 1, int val_phantoms = 1) {
    nlohmann::json j = {
        {"seed", 3},
        {"dataset",
         {{"grid", {{"width_px", 32}, {"height_px", 32}, {"dx_mm", 0.15}, {"dz_mm", 0.15}}},
          {"phantom", {{"inclusion_count", 3}}},
          {"splits",
           {{"train", {{"phantoms", train_phantoms}, {"instances", 2}}},
            {"val", {{"phantoms", val_phantoms}, {"instances", 10}}},
            {"test", {{"phantoms", 0}, {"instances", 10}}}}}}},
        {"network", {{"depth", 2}, {"base_channels", 4}}},
        {"training", {{"epochs", 2}, {"crop", 16}, {"checkpoint_every", 1}}}};
    return j.dump();
}

} // namespace

TEST_CASE("run config defaults and round trip") {
    const RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.loss.lambda == 500.0);
    CHECK(cfg.training.lr == 3e-5);
    CHECK(cfg.bench.reps >= 5);
    const auto methods = default_method_specs();
    REQUIRE(methods.size() == 6);
    CHECK(methods[0].at("type") == "identity");
    CHECK(methods[5].at("type") == "obnlm");

    const RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(back) == run_config_to_json(cfg));

    const RunConfig parsed = run_config_from_json(nlohmann::json::parse(tiny_config_json()));
    CHECK(parsed.dataset.grid.width_px == 32);
    CHECK(parsed.dataset.phantom.width_mm == doctest::Approx(4.8));
    CHECK(parsed.network.depth == 2);
    CHECK(parsed.training.crop == 16);
    CHECK(parsed.loss.lambda == 500.0);
}

TEST_CASE("run config rejects bad input") {
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"sed": 1})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"loss": {"lambda": -1}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"loss": {"lambda": "big"}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"training": {"epochs": 1, "momentum": 0.9}})")),
                    ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"eval": {"split": "holdout"}})")), ConfigError);
    TempDir dir("s2s_test_cfg");
    write_text(dir.path / "bad.json", "{ \"seed\": ");
    CHECK_THROWS_AS(load_run_config(dir.path / "bad.json"), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir.path / "absent.json"), IoError);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(ShapeError("x")) == 2);
    CHECK(exit_code_for(DomainError("x")) == 2);
    CHECK(exit_code_for(IoError("x")) == 3);
    CHECK(exit_code_for(DatasetError("x")) == 3);
    CHECK(exit_code_for(InputError("x")) == 3);
    CHECK(exit_code_for(DivergenceError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("method arguments") {
    CHECK(parse_method_argument("median").at("type") == "median");
    CHECK(parse_method_argument(R"({"type":"median","window":5})").at("window") == 5);
    const auto n = parse_method_argument("net", std::string("model.s2sn"));
    CHECK(n.at("checkpoint") == "model.s2sn");
    CHECK_THROWS_AS(method_from_json(parse_method_argument("net")), ConfigError);
    CHECK_THROWS_AS(parse_method_argument("{ broken"), ConfigError);
    TempDir dir("s2s_test_method_arg");
    write_text(dir.path / "m.json", R"({"type":"bilateral"})");
    CHECK(parse_method_argument((dir.path / "m.json").string()).at("type") == "bilateral");
}

TEST_CASE("apply blends filtered and original images") {
    TempDir dir("s2s_test_apply");
    const ImageGrid img = oracle::random_image(20, 16, 4);
    write_s2sf(dir.path / "in.s2sf", img);
    const nlohmann::json median = {{"type", "median"}, {"window", 3}};

    cmd_apply(dir.path / "in.s2sf", median, dir.path / "a1.s2sf", 1.0);
    CHECK(read_s2sf(dir.path / "a1.s2sf") == read_s2sf(dir.path / "in.s2sf"));

    cmd_apply(dir.path / "in.s2sf", median, dir.path / "a0.s2sf", 0.0);
    const ImageGrid filtered = read_s2sf(dir.path / "a0.s2sf");
    const ImageGrid expect = filters::median_filter(img, {3});
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(filtered[i] == static_cast<double>(static_cast<float>(expect[i])));
    }
    CHECK(fs::exists(dir.path / "a0.s2sf.resolved.json"));

    write_s2sf(dir.path / "const.s2sf", ImageGrid(16, 16, 1, 1, 0.25));
    cmd_apply(dir.path / "const.s2sf", {{"type", "nlm"}, {"search", 5}, {"patch", 3}}, dir.path / "c.s2sf", 0.5);
    const ImageGrid c = read_s2sf(dir.path / "c.s2sf");
    CHECK(c.min() == doctest::Approx(0.25).epsilon(1e-7));
    CHECK(c.max() == doctest::Approx(0.25).epsilon(1e-7));

    write_image(dir.path / "in.pgm", img, ImageFormat::pgm);
    cmd_apply(dir.path / "in.pgm", median, dir.path / "out.pgm", 0.0);
    CHECK(read_text(dir.path / "out.pgm").rfind("P5", 0) == 0);

    CHECK_THROWS_AS(cmd_apply(dir.path / "in.s2sf", {{"type", "wavelet"}}, dir.path / "x.s2sf", 0.0), ConfigError);
    CHECK_THROWS_AS(cmd_apply(dir.path / "in.s2sf", median, dir.path / "x.s2sf", 1.5), ConfigError);
    CHECK_THROWS_AS(cmd_apply(dir.path / "missing.s2sf", median, dir.path / "x.s2sf", 0.0), IoError);
}

TEST_CASE("evaluate with the full method set mirrors the comparison table rows") {
    TempDir dir("s2s_test_evaluate");
    write_text(dir.path / "cfg.json", tiny_config_json(1, 1));
    const RunConfig cfg = load_run_config(dir.path / "cfg.json");
    cmd_simulate(cfg, dir.path / "data", 1);
    const auto params = net::init_params<float>(cfg.network, 1);
    net::save_checkpoint(dir.path / "net.s2sn", params);
    const auto out = cmd_evaluate(cfg, dir.path / "data", dir.path / "eval", 1, dir.path / "net.s2sn");
    REQUIRE(out.report.methods.size() == 7);
    CHECK(out.report.methods.front().name == "input");
    CHECK(out.report.methods.back().name == "net");
    CHECK(fs::exists(out.report_json));
    CHECK(fs::exists(out.rows_csv));
    CHECK(fs::exists(out.histogram_csv));
    CHECK(fs::exists(dir.path / "eval" / kResolvedConfig));
}

TEST_CASE("command-line pipeline") {
    TempDir dir("s2s_test_cli");
    const fs::path cfg = dir.path / "cfg.json";
    write_text(cfg, tiny_config_json(2, 1));
    const std::string d = dir.path.string();

    SUBCASE("simulate, train, apply, evaluate, bench") {
        REQUIRE(run_cli("simulate -c " + cfg.string() + " -o " + d + "/data") == 0);
        const auto m = load_manifest(dir.path / "data");
        CHECK(m.split(Split::train).entries.size() == 2);
        CHECK(fs::exists(dir.path / "data" / kResolvedConfig));

        REQUIRE(run_cli("train -c " + cfg.string() + " -m " + d + "/data -o " + d + "/run") == 0);
        const std::string csv = read_text(dir.path / "run" / "loss.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
        CHECK(fs::exists(dir.path / "run" / "checkpoint_final.s2sn"));

        REQUIRE(run_cli("train -c " + cfg.string() + " -m " + d + "/data -o " + d + "/zero --epochs 0") == 0);
        CHECK(fs::exists(dir.path / "zero" / "checkpoint_final.s2sn"));

        const std::string input = (dir.path / "data" / m.split(Split::val).entries[0].instance_paths[0]).string();
        CHECK(run_cli("apply -i " + input + " -o " + d + "/den.s2sf --checkpoint " + d +
                      "/run/checkpoint_final.s2sn") == 0);
        CHECK(read_s2sf(dir.path / "den.s2sf").width() == 32);
        CHECK(run_cli("apply -i " + input + " -o " + d + "/blend.s2sf -m median -a 1") == 0);
        CHECK(read_s2sf(dir.path / "blend.s2sf") == read_s2sf(input));

        write_text(dir.path / "ev.json", R"({"eval": {"methods": ["identity"]}})");
        REQUIRE(run_cli("evaluate -c " + d + "/ev.json -m " + d + "/data -o " + d + "/ev") == 0);
        const auto report = nlohmann::json::parse(read_text(dir.path / "ev" / "report.json"));
        REQUIRE(report.at("methods").size() == 1);
        CHECK(report.at("methods")[0].at("name") == "identity");

        write_s2sf(dir.path / "big.s2sf", ImageGrid(128, 128));
        write_text(dir.path / "bench.json", R"({"bench": {"reps": 3, "methods": ["identity"]}})");
        REQUIRE(run_cli("bench -c " + d + "/bench.json -i " + d + "/big.s2sf -o " + d + "/bench_out.json") == 0);
        const auto bench = nlohmann::json::parse(read_text(dir.path / "bench_out.json"));
        for (const auto& row : bench.at("methods")) {
            CHECK(row.at("max_ms").get<double>() < 1.0);
        }
    }
    SUBCASE("exit codes for bad input") {
        write_text(dir.path / "broken.json", "{ \"seed\": ");
        CHECK(run_cli("simulate -c " + d + "/broken.json -o " + d + "/never") == 2);
        CHECK_FALSE(fs::exists(dir.path / "never"));
        write_text(dir.path / "unknown.json", R"({"datasett": {}})");
        CHECK(run_cli("simulate -c " + d + "/unknown.json -o " + d + "/never") == 2);
        CHECK(run_cli("frobnicate") == 2);
        CHECK(run_cli("apply -i " + d + "/absent.s2sf -o " + d + "/x.s2sf -m median") == 3);
        write_s2sf(dir.path / "img.s2sf", ImageGrid(8, 8));
        CHECK(run_cli("apply -i " + d + "/img.s2sf -o " + d + "/x.s2sf -m wavelet") == 2);
        CHECK(run_cli("train -m " + d + "/nodata -o " + d + "/run") == 3);
    }
}
