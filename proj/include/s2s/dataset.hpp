#pragma once

#include "s2s/image.hpp"
#include "s2s/imaging.hpp"
#include "s2s/phantom.hpp"
#include "s2s/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace s2s {

enum class Split { train, val, test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct SplitSize {
    int phantoms = 0;
    int instances = 0;
    bool operator==(const SplitSize&) const = default;
};

/// Everything needed to regenerate a corpus. The phantom extent must match the grid extent.
struct DatasetConfig {
    GridSpec grid;
    PhantomConfig phantom;
    ImagingConfig imaging;
    SplitSize train{200, 2};
    SplitSize val{20, 10};
    SplitSize test{20, 10};

    const SplitSize& size(Split s) const;
    void validate() const;
};

/// File counts implied by a config.
struct DatasetPlan {
    std::size_t geometry_files = 0;
    std::size_t instance_images = 0;
    std::size_t interface_maps = 0;
    std::size_t average_images = 0;
    std::size_t train_pairs = 0;
};

DatasetPlan plan_dataset(const DatasetConfig& cfg);

/// Paths are relative to the manifest directory.
struct ManifestEntry {
    int phantom_id = 0;
    std::string geometry_path;
    std::vector<std::string> instance_paths;
    std::optional<std::string> average_path;
    std::string interface_path;
    std::optional<int> input_index; ///< held-out input instance for val/test entries

    bool operator==(const ManifestEntry&) const = default;
};

struct SplitManifest {
    Split split = Split::train;
    std::vector<ManifestEntry> entries;
    bool operator==(const SplitManifest&) const = default;
};

struct DatasetManifest {
    std::string version = "1";
    std::uint64_t root_seed = 0;
    nlohmann::json generator_config;
    std::vector<SplitManifest> splits; ///< train, val, test in that order
    std::filesystem::path root;        ///< directory holding manifest.json; not serialized

    const SplitManifest& split(Split s) const;
    std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
};

inline constexpr const char* kManifestName = "manifest.json";

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root);
std::string manifest_text(const DatasetManifest& m);
/// Atomic write of `dir/manifest.json`.
void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
/// Accepts either the manifest file or its directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Seed of a phantom geometry (instance 0) or of speckle instance k (instance k + 1).
std::uint64_t entry_seed(std::uint64_t root_seed, Split split, int phantom_id, std::uint64_t slot);

/// Simulates every split under `out_dir` and writes the manifest last.
DatasetManifest generate_dataset(const DatasetConfig& cfg, std::uint64_t root_seed,
                                 const std::filesystem::path& out_dir, unsigned threads = 1);

struct TrainingSample {
    ImageGrid input;
    ImageGrid target;
    InterfaceMap interface;
};

/// Two distinct instances of train entry `index` in random order, plus its interface map.
TrainingSample load_pair(const DatasetManifest& m, std::size_t index, Rng& rng);

struct CropWindow {
    int x0 = 0;
    int z0 = 0;
    int size = 0;
};

/// Uniform top-left corner of a size x size window; ShapeError when it does not fit.
CropWindow random_crop_window(int width, int height, int size, Rng& rng);

/// Same random window applied to all three grids.
TrainingSample random_crop_pair(const ImageGrid& input, const ImageGrid& target, const InterfaceMap& interface,
                                int size, Rng& rng);

/// Held-out input, nine-instance average and ground truth of a val/test entry.
struct EvalSample {
    int phantom_id = 0;
    ImageGrid input;
    ImageGrid average;
    InterfaceMap interface;
    PhantomGeometry geometry;
};

EvalSample load_eval_sample(const DatasetManifest& m, Split split, std::size_t index);

} // namespace s2s
