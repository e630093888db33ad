#include "s2s/dataset.hpp"
#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace s2s;
namespace fs = std::filesystem;

namespace {

DatasetConfig tiny_config() {
    DatasetConfig cfg;
    cfg.grid = {32, 24, 0.15, 0.15};
    cfg.phantom.width_mm = 32 * 0.15;
    cfg.phantom.height_mm = 24 * 0.15;
    cfg.phantom.inclusion_count = 4;
    cfg.train = {3, 2};
    cfg.val = {2, 10};
    cfg.test = {1, 10};
    return cfg;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return read_file(p); }

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("split names") {
    for (Split s : {Split::train, Split::val, Split::test}) {
        CHECK(split_from_name(split_name(s)) == s);
    }
    CHECK(split_name(Split::val) == "val");
    CHECK_THROWS_AS(split_from_name("validation"), ConfigError);
}

TEST_CASE("default corpus shape") {
    const DatasetConfig cfg;
    CHECK(cfg.grid.width_px == 128);
    CHECK(cfg.grid.dx_mm == 0.15);
    CHECK(cfg.train == SplitSize{200, 2});
    CHECK(cfg.val == SplitSize{20, 10});
    CHECK(cfg.test == SplitSize{20, 10});
    CHECK_NOTHROW(cfg.validate());
    const auto plan = plan_dataset(cfg);
    CHECK(plan.train_pairs == 200);
    CHECK(plan.instance_images == 200 * 2 + 40 * 10);
    CHECK(plan.average_images == 40);
}

TEST_CASE("plan counts") {
    DatasetConfig cfg = tiny_config();
    cfg.train = {2, 2};
    cfg.val = {0, 10};
    cfg.test = {0, 10};
    const auto p = plan_dataset(cfg);
    CHECK(p.geometry_files == 2);
    CHECK(p.instance_images == 4);
    CHECK(p.interface_maps == 2);
    CHECK(p.average_images == 0);
    CHECK(p.train_pairs == 2);
}

TEST_CASE("full-scale corpus plan") {
    DatasetConfig cfg;
    cfg.train = {1000, 2};
    cfg.val = {100, 10};
    cfg.test = {100, 10};
    const auto p = plan_dataset(cfg);
    CHECK(p.instance_images == 4000);
    CHECK(p.train_pairs == 1000);
    CHECK(p.average_images == 200);
}

TEST_CASE("config validation") {
    DatasetConfig cfg = tiny_config();
    cfg.phantom.width_mm = 5.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.train = {2, 1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.val = {-1, 10};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("entry seeds are distinct across splits, phantoms and slots") {
    std::set<std::uint64_t> seen;
    for (Split s : {Split::train, Split::val, Split::test}) {
        for (int id = 0; id < 20; ++id) {
            for (std::uint64_t slot = 0; slot < 12; ++slot) {
                seen.insert(entry_seed(7, s, id, slot));
            }
        }
    }
    CHECK(seen.size() == 3 * 20 * 12);
    CHECK(entry_seed(7, Split::val, 3, 2) == entry_seed(7, Split::val, 3, 2));
    CHECK(entry_seed(7, Split::val, 3, 2) != entry_seed(8, Split::val, 3, 2));
}

TEST_CASE("generated corpus layout and contents") {
    TempDir dir("s2s_test_dataset");
    const DatasetConfig cfg = tiny_config();
    const DatasetManifest m = generate_dataset(cfg, 42, dir.path, 2);

    CHECK(fs::exists(dir.path / kManifestName));
    CHECK(m.version == "1");
    CHECK(m.root_seed == 42);
    REQUIRE(m.splits.size() == 3);
    CHECK(m.split(Split::train).entries.size() == 3);
    CHECK(m.split(Split::val).entries.size() == 2);
    CHECK(m.split(Split::test).entries.size() == 1);

    const DatasetManifest loaded = load_manifest(dir.path);
    CHECK(loaded.splits == m.splits);
    CHECK(manifest_text(loaded) == manifest_text(m));
    CHECK(load_manifest(dir.path / kManifestName).splits == m.splits);

    for (const auto& e : m.split(Split::train).entries) {
        CHECK(e.instance_paths.size() == 2);
        CHECK_FALSE(e.average_path.has_value());
        CHECK_FALSE(e.input_index.has_value());
        CHECK(fs::exists(m.resolve(e.geometry_path)));
        const ImageGrid ii = read_image(m.resolve(e.interface_path));
        CHECK(ii.width() == 32);
        CHECK(ii.height() == 24);
    }
    for (const auto& e : m.split(Split::val).entries) {
        REQUIRE(e.average_path.has_value());
        REQUIRE(e.input_index.has_value());
        CHECK(e.instance_paths.size() == 10);
        CHECK(*e.input_index >= 0);
        CHECK(*e.input_index < 10);
        // The average is the mean of the nine instances that are not the input.
        ImageGrid sum(32, 24);
        for (int k = 0; k < 10; ++k) {
            if (k == *e.input_index) {
                continue;
            }
            const ImageGrid inst = read_image(m.resolve(e.instance_paths[static_cast<std::size_t>(k)]));
            for (std::size_t i = 0; i < sum.size(); ++i) {
                sum[i] += inst[i];
            }
        }
        const ImageGrid avg = read_image(m.resolve(*e.average_path));
        for (std::size_t i = 0; i < sum.size(); ++i) {
            CHECK(avg[i] == doctest::Approx(sum[i] / 9.0).epsilon(1e-6));
        }
        const EvalSample s = load_eval_sample(m, Split::val, static_cast<std::size_t>(e.phantom_id));
        CHECK(s.input == read_image(m.resolve(e.instance_paths[static_cast<std::size_t>(*e.input_index)])));
        CHECK(s.average == avg);
    }
    CHECK_THROWS_AS(load_eval_sample(m, Split::train, 0), DatasetError);
    CHECK_THROWS_AS(load_eval_sample(m, Split::val, 5), DatasetError);
}

TEST_CASE("generation is deterministic and independent of the thread count") {
    TempDir a("s2s_test_det_a");
    TempDir b("s2s_test_det_b");
    TempDir c("s2s_test_det_c");
    DatasetConfig cfg = tiny_config();
    cfg.val = {1, 3};
    cfg.test = {0, 10};
    const auto ma = generate_dataset(cfg, 5, a.path, 1);
    const auto mb = generate_dataset(cfg, 5, b.path, 3);
    generate_dataset(cfg, 6, c.path, 1);
    CHECK(manifest_text(ma) == manifest_text(mb));
    CHECK(bytes_of(a.path / kManifestName) == bytes_of(b.path / kManifestName));
    for (const auto& e : ma.split(Split::train).entries) {
        for (const auto& p : e.instance_paths) {
            CHECK(bytes_of(a.path / p) == bytes_of(b.path / p));
        }
        CHECK(bytes_of(a.path / e.geometry_path) != bytes_of(c.path / e.geometry_path));
    }
    // Two instances of one phantom differ; their geometry is shared.
    const auto& e0 = ma.split(Split::train).entries[0];
    CHECK(read_image(a.path / e0.instance_paths[0]) != read_image(a.path / e0.instance_paths[1]));
}

TEST_CASE("a stale manifest is replaced") {
    TempDir dir("s2s_test_stale");
    write_text(dir.path / kManifestName, "{ not json");
    DatasetConfig cfg = tiny_config();
    cfg.train = {1, 2};
    cfg.val = {0, 10};
    cfg.test = {0, 10};
    generate_dataset(cfg, 1, dir.path);
    CHECK(load_manifest(dir.path).split(Split::train).entries.size() == 1);
}

TEST_CASE("manifest errors") {
    TempDir dir("s2s_test_manifest_err");
    CHECK_THROWS_AS(load_manifest(dir.path), IoError);
    write_text(dir.path / kManifestName, "{ not json");
    CHECK_THROWS_AS(load_manifest(dir.path), DatasetError);
    write_text(dir.path / kManifestName, R"({"version":"1","root_seed":1,"generator_config":{},"splits":{}})");
    const auto m = load_manifest(dir.path);
    CHECK_THROWS_AS(m.split(Split::train), DatasetError);
    nlohmann::json bad = {{"version", "1"},
                          {"root_seed", 1},
                          {"generator_config", nlohmann::json::object()},
                          {"splits",
                           {{"val",
                             {{"split", "val"},
                              {"entries",
                               {{{"phantom_id", 0},
                                 {"geometry_path", "g.json"},
                                 {"instance_paths", {"a.s2sf", "b.s2sf"}},
                                 {"interface_path", "i.s2sf"},
                                 {"average_path", "avg.s2sf"},
                                 {"input_index", 5}}}}}}}}};
    CHECK_THROWS_AS(manifest_from_json(bad, dir.path), DatasetError);
    bad["splits"]["val"]["entries"][0]["input_index"] = 1;
    const auto ok = manifest_from_json(bad, dir.path);
    // Referenced files are missing.
    CHECK_THROWS_AS(load_eval_sample(ok, Split::val, 0), DatasetError);
}

TEST_CASE("training pairs") {
    TempDir dir("s2s_test_pairs");
    DatasetConfig cfg = tiny_config();
    cfg.train = {2, 2};
    cfg.val = {0, 10};
    cfg.test = {0, 10};
    const auto m = generate_dataset(cfg, 3, dir.path);
    const auto& e = m.split(Split::train).entries[1];
    const ImageGrid a = read_image(m.resolve(e.instance_paths[0]));
    const ImageGrid b = read_image(m.resolve(e.instance_paths[1]));
    Rng rng(9);
    int first_is_a = 0;
    const int draws = 1000;
    for (int i = 0; i < draws; ++i) {
        const TrainingSample s = load_pair(m, 1, rng);
        CHECK(s.input != s.target);
        CHECK(s.input.same_shape(s.target));
        CHECK((s.input == a || s.input == b));
        first_is_a += s.input == a ? 1 : 0;
    }
    CHECK(first_is_a >= 450);
    CHECK(first_is_a <= 550);
    CHECK_THROWS_AS(load_pair(m, 2, rng), DatasetError);
}

TEST_CASE("random crops") {
    Rng rng(1);
    std::set<std::pair<int, int>> corners;
    for (int i = 0; i < 2000; ++i) {
        const auto w = random_crop_window(10, 7, 5, rng);
        CHECK(w.size == 5);
        CHECK(w.x0 >= 0);
        CHECK(w.z0 >= 0);
        CHECK(w.x0 + 5 <= 10);
        CHECK(w.z0 + 5 <= 7);
        corners.insert({w.x0, w.z0});
    }
    CHECK(corners.size() == 6 * 3);
    CHECK(random_crop_window(5, 5, 5, rng).x0 == 0);
    CHECK_THROWS_AS(random_crop_window(4, 8, 5, rng), ShapeError);

    ImageGrid in(12, 9);
    ImageGrid tg(12, 9);
    InterfaceMap ii{ImageGrid(12, 9)};
    for (int z = 0; z < 9; ++z) {
        for (int x = 0; x < 12; ++x) {
            in.at(x, z) = x + 100 * z;
            tg.at(x, z) = -(x + 100 * z);
            ii.grid.at(x, z) = (x + z) % 2;
        }
    }
    const auto s = random_crop_pair(in, tg, ii, 4, rng);
    CHECK(s.input.width() == 4);
    const int x0 = static_cast<int>(s.input.at(0, 0)) % 100;
    const int z0 = static_cast<int>(s.input.at(0, 0)) / 100;
    CHECK(s.target.at(3, 2) == -(x0 + 3 + 100 * (z0 + 2)));
    CHECK(s.interface.grid.at(1, 0) == (x0 + 1 + z0) % 2);
}
