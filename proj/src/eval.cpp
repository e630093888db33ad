#include "s2s/eval.hpp"

#include "s2s/errors.hpp"
#include "s2s/json_util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace s2s {

using nlohmann::json;

double mse(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "mse");
    if (a.empty()) {
        throw ShapeError("mse: empty images");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double mad(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "mad");
    if (a.empty()) {
        throw ShapeError("mad: empty images");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a[i] - b[i]);
    }
    return s / static_cast<double>(a.size());
}

RegionStats region_stats(const ImageGrid& img, const RegionRect& r) {
    if (r.x1 <= r.x0 || r.z1 <= r.z0) {
        throw DomainError("region_stats: empty region");
    }
    if (r.x0 < 0 || r.z0 < 0 || r.x1 > img.width() || r.z1 > img.height()) {
        throw DomainError("region_stats: region outside the image");
    }
    RegionStats s;
    s.histogram.assign(kHistogramBins, 0);
    const double n = static_cast<double>(r.width()) * r.height();
    double sum = 0.0;
    for (int z = r.z0; z < r.z1; ++z) {
        for (int x = r.x0; x < r.x1; ++x) {
            const double v = img.at(x, z);
            sum += v;
            const int bin = std::clamp(static_cast<int>(std::floor(v * kHistogramBins)), 0, kHistogramBins - 1);
            ++s.histogram[static_cast<std::size_t>(bin)];
        }
    }
    s.mean = sum / n;
    double var = 0.0;
    for (int z = r.z0; z < r.z1; ++z) {
        for (int x = r.x0; x < r.x1; ++x) {
            const double d = img.at(x, z) - s.mean;
            var += d * d;
        }
    }
    s.std = std::sqrt(var / n);
    return s;
}

Method identity_method() {
    return {"identity", [](const ImageGrid& img) { return img; }};
}

Method filter_method(const filters::FilterParams& params, std::string name) {
    filters::validate(params);
    if (name.empty()) {
        name = filters::type_name(params);
    }
    return {std::move(name), [params](const ImageGrid& img) { return filters::apply(img, params); }};
}

Method net_method(net::NetworkParams<float> params, std::string name) {
    auto shared = std::make_shared<const net::NetworkParams<float>>(std::move(params));
    return {std::move(name), [shared](const ImageGrid& img) { return net::infer(*shared, img); }};
}

Method method_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object() || !j.contains("type")) {
        throw ConfigError("method spec must be an object with a \"type\" key");
    }
    const auto type = json_util::as<std::string>(j.at("type"), "method.type");
    std::string name;
    if (const auto it = j.find("name"); it != j.end()) {
        name = json_util::as<std::string>(*it, "method.name");
    }
    if (type == "identity") {
        json_util::require_keys_subset(j, {"type", "name"}, "method[identity]");
        Method m = identity_method();
        if (!name.empty()) {
            m.name = name;
        }
        return m;
    }
    if (type == "net") {
        json_util::require_keys_subset(j, {"type", "name", "checkpoint"}, "method[net]");
        if (!j.contains("checkpoint")) {
            throw ConfigError("method[net]: missing \"checkpoint\"");
        }
        std::filesystem::path ckpt = json_util::as<std::string>(j.at("checkpoint"), "method[net].checkpoint");
        if (ckpt.is_relative() && !base_dir.empty()) {
            ckpt = base_dir / ckpt;
        }
        return net_method(net::load_checkpoint(ckpt), name.empty() ? "net" : name);
    }
    return filter_method(filters::params_from_json(j), name);
}

std::vector<RegionRect> find_homogeneous_regions(const PhantomGeometry& geom, const InterfaceMap& interfaces,
                                                 const GridSpec& grid, const AutoRegionConfig& cfg) {
    std::vector<RegionRect> out;
    if (!cfg.enabled || cfg.max_per_image == 0) {
        return out;
    }
    const int w = grid.width_px;
    const int h = grid.height_px;
    if (interfaces.grid.width() != w || interfaces.grid.height() != h) {
        throw ShapeError("find_homogeneous_regions: interface map does not match the grid");
    }
    std::vector<int> label(static_cast<std::size_t>(w) * h);
    for (int z = 0; z < h; ++z) {
        for (int x = 0; x < w; ++x) {
            label[static_cast<std::size_t>(z) * w + x] = region_index_at(geom, pixel_center(grid, x, z));
        }
    }
    const int s = cfg.size;
    std::vector<char> taken(label.size(), 0);
    for (int z0 = cfg.margin_axial; z0 + s + cfg.margin_axial <= h; z0 += 1) {
        for (int x0 = cfg.margin_lateral; x0 + s + cfg.margin_lateral <= w; x0 += 1) {
            const int ref = label[static_cast<std::size_t>(z0) * w + x0];
            const RegionSpec& spec = ref < 0 ? geom.background : geom.inclusions[static_cast<std::size_t>(ref)].region;
            if (spec.anechoic || spec.amplitude_sigma <= 0.0) {
                continue;
            }
            bool ok = true;
            for (int z = z0 - cfg.margin_axial; ok && z < z0 + s + cfg.margin_axial; ++z) {
                for (int x = x0 - cfg.margin_lateral; x < x0 + s + cfg.margin_lateral; ++x) {
                    const auto i = static_cast<std::size_t>(z) * w + x;
                    if (label[i] != ref || interfaces.grid[i] != 0.0 || taken[i]) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) {
                continue;
            }
            out.push_back({x0, z0, x0 + s, z0 + s});
            for (int z = z0 - cfg.margin_axial; z < z0 + s + cfg.margin_axial; ++z) {
                for (int x = x0 - cfg.margin_lateral; x < x0 + s + cfg.margin_lateral; ++x) {
                    taken[static_cast<std::size_t>(z) * w + x] = 1;
                }
            }
            if (static_cast<int>(out.size()) >= cfg.max_per_image) {
                return out;
            }
        }
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        var += (x - m) * (x - m);
    }
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

RuntimeStats runtime_from_samples(std::vector<double> samples) {
    RuntimeStats r;
    std::tie(r.mean_ms, r.std_ms) = mean_std(samples);
    if (!samples.empty()) {
        r.min_ms = *std::min_element(samples.begin(), samples.end());
        r.max_ms = *std::max_element(samples.begin(), samples.end());
    }
    r.samples_ms = std::move(samples);
    return r;
}

struct ImageResult {
    int phantom_id = 0;
    std::vector<double> mse;
    std::vector<double> mad;
    std::vector<double> runtime_ms;
    // [method][region name] -> per-region stats
    std::vector<std::vector<std::pair<std::string, RegionStats>>> regions;
};

} // namespace

EvalReport evaluate_corpus(const DatasetManifest& manifest, Split split, const std::vector<Method>& methods,
                           const EvalRegions& regions, unsigned threads) {
    const auto& entries = manifest.split(split).entries;
    if (entries.empty()) {
        throw DatasetError("split '" + split_name(split) + "' has no entries");
    }
    std::vector<ImageResult> results(entries.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) {
                return;
            }
            try {
                const EvalSample s = load_eval_sample(manifest, split, i);
                std::vector<std::pair<std::string, RegionRect>> rects = regions.fixed;
                for (const auto& r : find_homogeneous_regions(s.geometry, s.interface, s.input.spec(), regions.automatic)) {
                    rects.emplace_back("homogeneous", r);
                }
                ImageResult& res = results[i];
                res.phantom_id = s.phantom_id;
                for (const auto& m : methods) {
                    const auto t0 = Clock::now();
                    const ImageGrid out = m.run(s.input);
                    res.runtime_ms.push_back(elapsed_ms(t0));
                    res.mse.push_back(mse(out, s.average));
                    res.mad.push_back(mad(out, s.average));
                    std::vector<std::pair<std::string, RegionStats>> rs;
                    for (const auto& [name, r] : rects) {
                        rs.emplace_back(name, region_stats(out, r));
                    }
                    res.regions.push_back(std::move(rs));
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    const unsigned n = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(entries.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }

    EvalReport report;
    report.split = split;
    report.images = entries.size();
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MethodReport mr;
        mr.name = methods[mi].name;
        std::vector<double> mses;
        std::vector<double> mads;
        std::vector<double> times;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> region_values;
        for (const auto& res : results) {
            mses.push_back(res.mse[mi]);
            mads.push_back(res.mad[mi]);
            times.push_back(res.runtime_ms[mi]);
            report.rows.push_back({res.phantom_id, mr.name, res.mse[mi], res.mad[mi], res.runtime_ms[mi]});
            for (const auto& [name, st] : res.regions[mi]) {
                auto& agg = mr.regions[name];
                if (agg.histogram.empty()) {
                    agg.histogram.assign(kHistogramBins, 0);
                }
                for (std::size_t b = 0; b < st.histogram.size(); ++b) {
                    agg.histogram[b] += st.histogram[b];
                }
                region_values[name].first.push_back(st.mean);
                region_values[name].second.push_back(st.std);
            }
        }
        std::tie(mr.mse_mean, mr.mse_std) = mean_std(mses);
        std::tie(mr.mad_mean, mr.mad_std) = mean_std(mads);
        mr.runtime = runtime_from_samples(std::move(times));
        for (auto& [name, agg] : mr.regions) {
            const auto& [means, stds] = region_values[name];
            agg.regions = means.size();
            agg.mean = mean_std(means).first;
            agg.std = mean_std(stds).first;
        }
        report.methods.push_back(std::move(mr));
    }
    return report;
}

json report_to_json(const EvalReport& r) {
    json methods = json::array();
    for (const auto& m : r.methods) {
        json regions = json::object();
        for (const auto& [name, agg] : m.regions) {
            regions[name] = {{"regions", agg.regions}, {"mean", agg.mean}, {"std", agg.std}, {"histogram", agg.histogram}};
        }
        methods.push_back({{"name", m.name},
                           {"mse_mean", m.mse_mean},
                           {"mse_std", m.mse_std},
                           {"mad_mean", m.mad_mean},
                           {"mad_std", m.mad_std},
                           {"runtime_ms",
                            {{"mean", m.runtime.mean_ms},
                             {"std", m.runtime.std_ms},
                             {"min", m.runtime.min_ms},
                             {"max", m.runtime.max_ms},
                             {"n", m.runtime.samples_ms.size()}}},
                           {"region_stats", regions}});
    }
    return {{"split", split_name(r.split)}, {"images", r.images}, {"methods", methods}};
}

std::string rows_to_csv(const std::vector<ImageRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "phantom_id,method,mse,mad,runtime_ms\n";
    for (const auto& row : rows) {
        os << row.phantom_id << ',' << row.method << ',' << row.mse << ',' << row.mad << ',' << row.runtime_ms << '\n';
    }
    return os.str();
}

std::string histograms_to_csv(const EvalReport& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "method,region,bin_lo,bin_hi,count\n";
    for (const auto& m : r.methods) {
        for (const auto& [name, agg] : m.regions) {
            for (std::size_t b = 0; b < agg.histogram.size(); ++b) {
                os << m.name << ',' << name << ',' << static_cast<double>(b) / kHistogramBins << ','
                   << static_cast<double>(b + 1) / kHistogramBins << ',' << agg.histogram[b] << '\n';
            }
        }
    }
    return os.str();
}

ImageGrid violin_strip(const EvalReport& r, const std::string& region) {
    // One 16-pixel-wide column per method; rows are histogram bins with intensity 1 at the top.
    constexpr int kColumn = 16;
    const int n = static_cast<int>(r.methods.size());
    ImageGrid img(std::max(1, n) * kColumn, kHistogramBins);
    for (int m = 0; m < n; ++m) {
        const auto it = r.methods[static_cast<std::size_t>(m)].regions.find(region);
        if (it == r.methods[static_cast<std::size_t>(m)].regions.end()) {
            continue;
        }
        const auto& hist = it->second.histogram;
        const std::size_t peak = *std::max_element(hist.begin(), hist.end());
        if (peak == 0) {
            continue;
        }
        for (int b = 0; b < kHistogramBins; ++b) {
            const double v = static_cast<double>(hist[static_cast<std::size_t>(b)]) / static_cast<double>(peak);
            const int half = static_cast<int>(std::lround(v * (kColumn / 2)));
            const int z = kHistogramBins - 1 - b;
            for (int x = kColumn / 2 - half; x < kColumn / 2 + half; ++x) {
                img.at(m * kColumn + x, z) = 1.0;
            }
        }
    }
    return img;
}

RuntimeStats bench_runtime(const Method& method, const ImageGrid& img, unsigned warmups, unsigned reps) {
    if (reps < 3) {
        throw ConfigError("bench_runtime: reps must be >= 3");
    }
    for (unsigned i = 0; i < warmups; ++i) {
        (void)method.run(img);
    }
    std::vector<double> samples;
    for (unsigned i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        const ImageGrid out = method.run(img);
        samples.push_back(elapsed_ms(t0));
        (void)out;
    }
    return runtime_from_samples(std::move(samples));
}

} // namespace s2s
