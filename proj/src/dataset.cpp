#include "s2s/dataset.hpp"

#include "s2s/config.hpp"
#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"
#include "s2s/json_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace s2s {

namespace fs = std::filesystem;
using nlohmann::json;

std::string split_name(Split s) {
    switch (s) {
    case Split::train:
        return "train";
    case Split::val:
        return "val";
    case Split::test:
        return "test";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") {
        return Split::train;
    }
    if (name == "val") {
        return Split::val;
    }
    if (name == "test") {
        return Split::test;
    }
    throw ConfigError("unknown split '" + name + "'");
}

const SplitSize& DatasetConfig::size(Split s) const {
    switch (s) {
    case Split::train:
        return train;
    case Split::val:
        return val;
    case Split::test:
        return test;
    }
    return train;
}

void DatasetConfig::validate() const {
    grid.validate();
    phantom.validate();
    imaging.validate();
    const double tol = 1e-9 * std::max(1.0, grid.width_mm() + grid.height_mm());
    if (std::abs(phantom.width_mm - grid.width_mm()) > tol || std::abs(phantom.height_mm - grid.height_mm()) > tol) {
        throw ConfigError("phantom extent must equal the grid extent (width_px * dx_mm, height_px * dz_mm)");
    }
    for (Split s : {Split::train, Split::val, Split::test}) {
        const auto& sz = size(s);
        if (sz.phantoms < 0) {
            throw ConfigError("dataset." + split_name(s) + ".phantoms must be >= 0");
        }
        if (sz.phantoms > 0 && sz.instances < 2) {
            throw ConfigError("dataset." + split_name(s) + ".instances must be >= 2");
        }
    }
}

DatasetPlan plan_dataset(const DatasetConfig& cfg) {
    DatasetPlan p;
    for (Split s : {Split::train, Split::val, Split::test}) {
        const auto& sz = cfg.size(s);
        const auto n = static_cast<std::size_t>(sz.phantoms);
        p.geometry_files += n;
        p.interface_maps += n;
        p.instance_images += n * static_cast<std::size_t>(sz.instances);
        if (s == Split::train) {
            p.train_pairs = n * static_cast<std::size_t>(sz.instances / 2);
        } else {
            p.average_images += n;
        }
    }
    return p;
}

const SplitManifest& DatasetManifest::split(Split s) const {
    for (const auto& sm : splits) {
        if (sm.split == s) {
            return sm;
        }
    }
    throw DatasetError("manifest has no '" + split_name(s) + "' split");
}

json manifest_to_json(const DatasetManifest& m) {
    json splits = json::object();
    for (const auto& sm : m.splits) {
        json entries = json::array();
        for (const auto& e : sm.entries) {
            json ej{{"phantom_id", e.phantom_id},
                    {"geometry_path", e.geometry_path},
                    {"instance_paths", e.instance_paths},
                    {"interface_path", e.interface_path}};
            if (e.average_path) {
                ej["average_path"] = *e.average_path;
            }
            if (e.input_index) {
                ej["input_index"] = *e.input_index;
            }
            entries.push_back(std::move(ej));
        }
        splits[split_name(sm.split)] = {{"split", split_name(sm.split)}, {"entries", std::move(entries)}};
    }
    return {{"version", m.version},
            {"root_seed", m.root_seed},
            {"generator_config", m.generator_config},
            {"splits", std::move(splits)}};
}

DatasetManifest manifest_from_json(const json& j, const fs::path& root) {
    using json_util::as;
    try {
        json_util::require_keys_subset(j, {"version", "root_seed", "generator_config", "splits"}, "manifest");
        DatasetManifest m;
        m.root = root;
        m.version = as<std::string>(j.at("version"), "manifest.version");
        m.root_seed = as<std::uint64_t>(j.at("root_seed"), "manifest.root_seed");
        m.generator_config = j.at("generator_config");
        for (Split s : {Split::train, Split::val, Split::test}) {
            const auto it = j.at("splits").find(split_name(s));
            if (it == j.at("splits").end()) {
                continue;
            }
            SplitManifest sm;
            sm.split = split_from_name(as<std::string>(it->at("split"), "manifest split"));
            for (const auto& ej : it->at("entries")) {
                json_util::require_keys_subset(ej,
                                               {"phantom_id", "geometry_path", "instance_paths", "interface_path",
                                                "average_path", "input_index"},
                                               "manifest entry");
                ManifestEntry e;
                e.phantom_id = as<int>(ej.at("phantom_id"), "phantom_id");
                e.geometry_path = as<std::string>(ej.at("geometry_path"), "geometry_path");
                e.interface_path = as<std::string>(ej.at("interface_path"), "interface_path");
                for (const auto& p : ej.at("instance_paths")) {
                    e.instance_paths.push_back(as<std::string>(p, "instance_paths"));
                }
                if (ej.contains("average_path")) {
                    e.average_path = as<std::string>(ej.at("average_path"), "average_path");
                }
                if (ej.contains("input_index")) {
                    e.input_index = as<int>(ej.at("input_index"), "input_index");
                    if (*e.input_index < 0 || *e.input_index >= static_cast<int>(e.instance_paths.size())) {
                        throw DatasetError("manifest entry input_index out of range");
                    }
                }
                sm.entries.push_back(std::move(e));
            }
            m.splits.push_back(std::move(sm));
        }
        return m;
    } catch (const json::exception& e) {
        throw DatasetError(std::string("malformed manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw DatasetError(std::string("malformed manifest: ") + e.what());
    }
}

std::string manifest_text(const DatasetManifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

void write_manifest(const fs::path& dir, const DatasetManifest& m) {
    write_file_atomic(dir / kManifestName, manifest_text(m));
}

DatasetManifest load_manifest(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / kManifestName : path;
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file(file);
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw DatasetError("malformed manifest '" + file.string() + "': " + e.what());
    }
    return manifest_from_json(j, file.parent_path());
}

std::uint64_t entry_seed(std::uint64_t root_seed, Split split, int phantom_id, std::uint64_t slot) {
    return derive_seed({root_seed, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(phantom_id), slot});
}

namespace {

// Salt of the val/test input-instance draw.
constexpr std::uint64_t kInputSlot = 0xFFFF'FFFFull;

ImageGrid round_to_f32(ImageGrid img) {
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = static_cast<double>(static_cast<float>(img[i]));
    }
    return img;
}

ManifestEntry generate_entry(const DatasetConfig& cfg, std::uint64_t root_seed, Split split, int id,
                             const fs::path& out_dir) {
    const std::string rel_dir = split_name(split) + "/phantom_" + std::to_string(id);
    const fs::path dir = out_dir / rel_dir;
    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create '" + dir.string() + "': " + ec.message());
        }
        ManifestEntry e;
        e.phantom_id = id;
        const PhantomGeometry geom = generate_phantom(cfg.phantom, entry_seed(root_seed, split, id, 0));
        e.geometry_path = rel_dir + "/geometry.json";
        write_file_atomic(out_dir / e.geometry_path, json(geom).dump(2) + "\n");

        e.interface_path = rel_dir + "/interface.s2sf";
        write_s2sf(out_dir / e.interface_path, rasterize_interfaces(geom, cfg.grid).grid);

        const int k = cfg.size(split).instances;
        std::vector<ImageGrid> instances;
        for (int i = 0; i < k; ++i) {
            ImageGrid img = round_to_f32(
                simulate_bmode(geom, cfg.imaging, cfg.grid, entry_seed(root_seed, split, id, static_cast<std::uint64_t>(i) + 1)));
            const std::string rel = rel_dir + "/instance_" + std::to_string(i) + ".s2sf";
            write_s2sf(out_dir / rel, img);
            e.instance_paths.push_back(rel);
            if (split != Split::train) {
                instances.push_back(std::move(img));
            }
        }
        if (split != Split::train) {
            Rng rng(entry_seed(root_seed, split, id, kInputSlot));
            const int input = std::uniform_int_distribution<int>(0, k - 1)(rng);
            instances.erase(instances.begin() + input);
            e.input_index = input;
            e.average_path = rel_dir + "/average.s2sf";
            write_s2sf(out_dir / *e.average_path, average_images(instances));
        }
        return e;
    } catch (const IoError& err) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw DatasetError("generating " + rel_dir + ": " + err.what());
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
}

} // namespace

DatasetManifest generate_dataset(const DatasetConfig& cfg, std::uint64_t root_seed, const fs::path& out_dir,
                                 unsigned threads) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw DatasetError("cannot create '" + out_dir.string() + "': " + ec.message());
    }
    fs::remove(out_dir / kManifestName, ec);

    struct Task {
        Split split;
        int id;
    };
    std::vector<Task> tasks;
    DatasetManifest m;
    m.root = out_dir;
    m.root_seed = root_seed;
    m.generator_config = dataset_config_to_json(cfg);
    for (Split s : {Split::train, Split::val, Split::test}) {
        SplitManifest sm;
        sm.split = s;
        sm.entries.resize(static_cast<std::size_t>(cfg.size(s).phantoms));
        m.splits.push_back(std::move(sm));
        for (int id = 0; id < cfg.size(s).phantoms; ++id) {
            tasks.push_back({s, id});
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            try {
                auto entry = generate_entry(cfg, root_seed, tasks[t].split, tasks[t].id, out_dir);
                m.splits[static_cast<std::size_t>(tasks[t].split)].entries[static_cast<std::size_t>(tasks[t].id)] =
                    std::move(entry);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1))));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    try {
        write_manifest(out_dir, m);
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
    return m;
}

namespace {

ImageGrid load_grid(const DatasetManifest& m, const std::string& rel) {
    try {
        return read_s2sf(m.resolve(rel));
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
}

} // namespace

TrainingSample load_pair(const DatasetManifest& m, std::size_t index, Rng& rng) {
    const auto& entries = m.split(Split::train).entries;
    if (index >= entries.size()) {
        throw DatasetError("train index " + std::to_string(index) + " out of range");
    }
    const auto& e = entries[index];
    const int k = static_cast<int>(e.instance_paths.size());
    if (k < 2) {
        throw DatasetError("train entry needs at least two instances");
    }
    const int a = std::uniform_int_distribution<int>(0, k - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, k - 2)(rng);
    if (b >= a) {
        ++b;
    }
    TrainingSample s{load_grid(m, e.instance_paths[static_cast<std::size_t>(a)]),
                     load_grid(m, e.instance_paths[static_cast<std::size_t>(b)]),
                     InterfaceMap{load_grid(m, e.interface_path)}};
    if (!s.input.same_shape(s.target) || !s.input.same_shape(s.interface.grid)) {
        throw DatasetError("train entry " + std::to_string(e.phantom_id) + " has inconsistent image sizes");
    }
    return s;
}

CropWindow random_crop_window(int width, int height, int size, Rng& rng) {
    if (size < 1 || size > width || size > height) {
        throw ShapeError("crop size " + std::to_string(size) + " does not fit a " + std::to_string(width) + "x" +
                         std::to_string(height) + " image");
    }
    CropWindow c;
    c.size = size;
    c.x0 = std::uniform_int_distribution<int>(0, width - size)(rng);
    c.z0 = std::uniform_int_distribution<int>(0, height - size)(rng);
    return c;
}

TrainingSample random_crop_pair(const ImageGrid& input, const ImageGrid& target, const InterfaceMap& interface,
                                int size, Rng& rng) {
    require_same_shape(input, target, "random_crop_pair: input vs target");
    require_same_shape(input, interface.grid, "random_crop_pair: input vs interface");
    const CropWindow c = random_crop_window(input.width(), input.height(), size, rng);
    return {crop(input, c.x0, c.z0, size, size), crop(target, c.x0, c.z0, size, size),
            InterfaceMap{crop(interface.grid, c.x0, c.z0, size, size)}};
}

EvalSample load_eval_sample(const DatasetManifest& m, Split split, std::size_t index) {
    const auto& entries = m.split(split).entries;
    if (index >= entries.size()) {
        throw DatasetError(split_name(split) + " index " + std::to_string(index) + " out of range");
    }
    const auto& e = entries[index];
    if (!e.average_path || !e.input_index) {
        throw DatasetError(split_name(split) + " entry " + std::to_string(e.phantom_id) + " has no average image");
    }
    EvalSample s;
    s.phantom_id = e.phantom_id;
    s.input = load_grid(m, e.instance_paths[static_cast<std::size_t>(*e.input_index)]);
    s.average = load_grid(m, *e.average_path);
    s.interface = InterfaceMap{load_grid(m, e.interface_path)};
    try {
        const auto bytes = read_file(m.resolve(e.geometry_path));
        s.geometry = json::parse(bytes.begin(), bytes.end()).get<PhantomGeometry>();
    } catch (const IoError& err) {
        throw DatasetError(err.what());
    } catch (const json::exception& err) {
        throw DatasetError("malformed geometry '" + e.geometry_path + "': " + err.what());
    }
    if (!s.input.same_shape(s.average)) {
        throw DatasetError("input and average differ in size for entry " + std::to_string(e.phantom_id));
    }
    return s;
}

} // namespace s2s
