#pragma once

#include "s2s/dataset.hpp"
#include "s2s/filters.hpp"
#include "s2s/image.hpp"
#include "s2s/net.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace s2s {

double mse(const ImageGrid& a, const ImageGrid& b);
double mad(const ImageGrid& a, const ImageGrid& b);

/// Pixel rectangle [x0, x1) x [z0, z1).
struct RegionRect {
    int x0 = 0;
    int z0 = 0;
    int x1 = 0;
    int z1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return z1 - z0; }
    bool operator==(const RegionRect&) const = default;
};

inline constexpr int kHistogramBins = 64;

struct RegionStats {
    double mean = 0.0;
    double std = 0.0; ///< population standard deviation
    std::vector<std::size_t> histogram; ///< kHistogramBins equal bins over [0, 1], values clamped
};

RegionStats region_stats(const ImageGrid& img, const RegionRect& r);

/// A despeckling method under evaluation. `run` must be safe to call concurrently.
struct Method {
    std::string name;
    std::function<ImageGrid(const ImageGrid&)> run;
};

Method identity_method();
Method filter_method(const filters::FilterParams& params, std::string name = {});
Method net_method(net::NetworkParams<float> params, std::string name = "net");

/// {"type": "identity"}, {"type": "net", "checkpoint": path} or a tagged filter spec; optional "name".
/// Relative checkpoint paths resolve against `base_dir`.
Method method_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Square windows inside a single echoic region, clear of other regions and interfaces by the margins.
struct AutoRegionConfig {
    bool enabled = true;
    int size = 8;
    int margin_lateral = 4;
    int margin_axial = 2;
    int max_per_image = 4;
    bool operator==(const AutoRegionConfig&) const = default;
};

std::vector<RegionRect> find_homogeneous_regions(const PhantomGeometry& geom, const InterfaceMap& interfaces,
                                                 const GridSpec& grid, const AutoRegionConfig& cfg);

/// Regions evaluated on every image: fixed named rectangles plus optional automatic ones (name "homogeneous").
struct EvalRegions {
    std::vector<std::pair<std::string, RegionRect>> fixed;
    AutoRegionConfig automatic;
};

/// Mean of per-region means and stds, summed histograms.
struct RegionAggregate {
    std::size_t regions = 0;
    double mean = 0.0;
    double std = 0.0;
    std::vector<std::size_t> histogram;
};

struct RuntimeStats {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    std::vector<double> samples_ms;
};

struct MethodReport {
    std::string name;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double mad_mean = 0.0;
    double mad_std = 0.0;
    RuntimeStats runtime;
    std::map<std::string, RegionAggregate> regions;
};

struct ImageRow {
    int phantom_id = 0;
    std::string method;
    double mse = 0.0;
    double mad = 0.0;
    double runtime_ms = 0.0;
};

struct EvalReport {
    Split split = Split::val;
    std::size_t images = 0;
    std::vector<MethodReport> methods;
    std::vector<ImageRow> rows;
};

/// Scores every method on the held-out inputs of `split` against the stored averages.
EvalReport evaluate_corpus(const DatasetManifest& manifest, Split split, const std::vector<Method>& methods,
                           const EvalRegions& regions, unsigned threads = 1);

nlohmann::json report_to_json(const EvalReport& r);
/// Columns: phantom_id,method,mse,mad,runtime_ms.
std::string rows_to_csv(const std::vector<ImageRow>& rows);

/// Violin export: one CSV row per (method, region, bin) and a PGM heat strip per method.
std::string histograms_to_csv(const EvalReport& r);
ImageGrid violin_strip(const EvalReport& r, const std::string& region);

/// Wall-clock milliseconds per application after `warmups` untimed runs.
RuntimeStats bench_runtime(const Method& method, const ImageGrid& img, unsigned warmups, unsigned reps);

} // namespace s2s
