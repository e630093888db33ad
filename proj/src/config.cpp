#include "s2s/config.hpp"

#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"
#include "s2s/json_util.hpp"

#include <cmath>
#include <string>

namespace s2s {

using nlohmann::json;
using json_util::as;
using json_util::read_optional;
using json_util::require_keys_subset;

namespace {

json grid_to_json(const GridSpec& g) {
    return {{"width_px", g.width_px}, {"height_px", g.height_px}, {"dx_mm", g.dx_mm}, {"dz_mm", g.dz_mm}};
}

GridSpec grid_from_json(const json& j) {
    const char* where = "dataset.grid";
    require_keys_subset(j, {"width_px", "height_px", "dx_mm", "dz_mm"}, where);
    GridSpec g;
    read_optional(j, "width_px", g.width_px, where);
    read_optional(j, "height_px", g.height_px, where);
    read_optional(j, "dx_mm", g.dx_mm, where);
    read_optional(j, "dz_mm", g.dz_mm, where);
    return g;
}

json phantom_to_json(const PhantomConfig& p) {
    return {{"width_mm", p.width_mm},
            {"height_mm", p.height_mm},
            {"inclusion_count", p.inclusion_count},
            {"extent_min_mm", p.extent_min_mm},
            {"extent_max_mm", p.extent_max_mm},
            {"background_p_anechoic", p.background_p_anechoic},
            {"background_sigma_mean", p.background_sigma_mean},
            {"background_sigma_std", p.background_sigma_std},
            {"inclusion_p_anechoic", p.inclusion_p_anechoic},
            {"inclusion_sigma_mean", p.inclusion_sigma_mean},
            {"inclusion_sigma_std", p.inclusion_sigma_std},
            {"p_interface", p.p_interface},
            {"interface_amplitude_mean", p.interface_amplitude_mean},
            {"interface_amplitude_std", p.interface_amplitude_std}};
}

PhantomConfig phantom_from_json(const json& j, const GridSpec& grid) {
    const char* where = "dataset.phantom";
    require_keys_subset(j,
                        {"width_mm", "height_mm", "inclusion_count", "extent_min_mm", "extent_max_mm",
                         "background_p_anechoic", "background_sigma_mean", "background_sigma_std",
                         "inclusion_p_anechoic", "inclusion_sigma_mean", "inclusion_sigma_std", "p_interface",
                         "interface_amplitude_mean", "interface_amplitude_std"},
                        where);
    PhantomConfig p;
    p.width_mm = grid.width_mm();
    p.height_mm = grid.height_mm();
    read_optional(j, "width_mm", p.width_mm, where);
    read_optional(j, "height_mm", p.height_mm, where);
    read_optional(j, "inclusion_count", p.inclusion_count, where);
    read_optional(j, "extent_min_mm", p.extent_min_mm, where);
    read_optional(j, "extent_max_mm", p.extent_max_mm, where);
    read_optional(j, "background_p_anechoic", p.background_p_anechoic, where);
    read_optional(j, "background_sigma_mean", p.background_sigma_mean, where);
    read_optional(j, "background_sigma_std", p.background_sigma_std, where);
    read_optional(j, "inclusion_p_anechoic", p.inclusion_p_anechoic, where);
    read_optional(j, "inclusion_sigma_mean", p.inclusion_sigma_mean, where);
    read_optional(j, "inclusion_sigma_std", p.inclusion_sigma_std, where);
    read_optional(j, "p_interface", p.p_interface, where);
    read_optional(j, "interface_amplitude_mean", p.interface_amplitude_mean, where);
    read_optional(j, "interface_amplitude_std", p.interface_amplitude_std, where);
    return p;
}

json imaging_to_json(const ImagingConfig& c) {
    return {{"density_per_mm2", c.density_per_mm2},
            {"interface_density_per_mm", c.interface_density_per_mm},
            {"psf_sigma_lat_px", c.psf_sigma_lat_px},
            {"psf_sigma_ax_px", c.psf_sigma_ax_px},
            {"carrier_wavelength_mm", c.carrier_wavelength_mm},
            {"dynamic_range_db", c.dynamic_range_db}};
}

ImagingConfig imaging_from_json(const json& j) {
    const char* where = "dataset.imaging";
    require_keys_subset(j,
                        {"density_per_mm2", "interface_density_per_mm", "psf_sigma_lat_px", "psf_sigma_ax_px",
                         "carrier_wavelength_mm", "dynamic_range_db"},
                        where);
    ImagingConfig c;
    read_optional(j, "density_per_mm2", c.density_per_mm2, where);
    read_optional(j, "interface_density_per_mm", c.interface_density_per_mm, where);
    read_optional(j, "psf_sigma_lat_px", c.psf_sigma_lat_px, where);
    read_optional(j, "psf_sigma_ax_px", c.psf_sigma_ax_px, where);
    read_optional(j, "carrier_wavelength_mm", c.carrier_wavelength_mm, where);
    read_optional(j, "dynamic_range_db", c.dynamic_range_db, where);
    return c;
}

json split_size_to_json(const SplitSize& s) { return {{"phantoms", s.phantoms}, {"instances", s.instances}}; }

SplitSize split_size_from_json(const json& j, SplitSize s, const std::string& where) {
    require_keys_subset(j, {"phantoms", "instances"}, where);
    read_optional(j, "phantoms", s.phantoms, where);
    read_optional(j, "instances", s.instances, where);
    return s;
}

json network_to_json(const net::NetworkSpec& n) {
    return {{"depth", n.depth}, {"base_channels", n.base_channels}, {"kernel_size", n.kernel_size}};
}

net::NetworkSpec network_from_json(const json& j) {
    const char* where = "network";
    require_keys_subset(j, {"depth", "base_channels", "kernel_size"}, where);
    net::NetworkSpec n;
    read_optional(j, "depth", n.depth, where);
    read_optional(j, "base_channels", n.base_channels, where);
    read_optional(j, "kernel_size", n.kernel_size, where);
    return n;
}

json training_to_json(const TrainingConfig& t) {
    return {{"epochs", t.epochs},
            {"lr", t.lr},
            {"batch", t.batch},
            {"crop", t.crop},
            {"seed", t.seed},
            {"checkpoint_every", t.checkpoint_every},
            {"validate_every", t.validate_every},
            {"flip", t.flip}};
}

TrainingConfig training_from_json(const json& j) {
    const char* where = "training";
    require_keys_subset(j, {"epochs", "lr", "batch", "crop", "seed", "checkpoint_every", "validate_every", "flip"},
                        where);
    TrainingConfig t;
    read_optional(j, "epochs", t.epochs, where);
    read_optional(j, "lr", t.lr, where);
    read_optional(j, "batch", t.batch, where);
    read_optional(j, "crop", t.crop, where);
    read_optional(j, "seed", t.seed, where);
    read_optional(j, "checkpoint_every", t.checkpoint_every, where);
    read_optional(j, "validate_every", t.validate_every, where);
    read_optional(j, "flip", t.flip, where);
    return t;
}

json rect_to_json(const RegionRect& r) { return {{"x0", r.x0}, {"z0", r.z0}, {"x1", r.x1}, {"z1", r.z1}}; }

RegionRect rect_from_json(const json& j, const std::string& where) {
    require_keys_subset(j, {"name", "x0", "z0", "x1", "z1"}, where);
    for (const char* k : {"x0", "z0", "x1", "z1"}) {
        if (!j.contains(k)) {
            throw ConfigError(where + ": missing '" + k + "'");
        }
    }
    return {as<int>(j.at("x0"), where + ".x0"), as<int>(j.at("z0"), where + ".z0"), as<int>(j.at("x1"), where + ".x1"),
            as<int>(j.at("z1"), where + ".z1")};
}

json auto_regions_to_json(const AutoRegionConfig& a) {
    return {{"enabled", a.enabled},
            {"size", a.size},
            {"margin_lateral", a.margin_lateral},
            {"margin_axial", a.margin_axial},
            {"max_per_image", a.max_per_image}};
}

AutoRegionConfig auto_regions_from_json(const json& j) {
    const char* where = "eval.auto_regions";
    require_keys_subset(j, {"enabled", "size", "margin_lateral", "margin_axial", "max_per_image"}, where);
    AutoRegionConfig a;
    read_optional(j, "enabled", a.enabled, where);
    read_optional(j, "size", a.size, where);
    read_optional(j, "margin_lateral", a.margin_lateral, where);
    read_optional(j, "margin_axial", a.margin_axial, where);
    read_optional(j, "max_per_image", a.max_per_image, where);
    return a;
}

std::vector<json> methods_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ConfigError(where + ": expected an array of method specs");
    }
    std::vector<json> out;
    for (const auto& entry : j) {
        // A bare string names a method type with default parameters.
        const json m = entry.is_string() ? json{{"type", entry}} : entry;
        // Resolve eagerly so malformed specs fail at load time; checkpoints are checked on use.
        if (!m.is_object() || !m.contains("type")) {
            throw ConfigError(where + ": each method needs a \"type\"");
        }
        const auto type = as<std::string>(m.at("type"), where + ".type");
        if (type == "identity") {
            require_keys_subset(m, {"type", "name"}, where + "[identity]");
        } else if (type == "net") {
            require_keys_subset(m, {"type", "name", "checkpoint"}, where + "[net]");
            if (!m.contains("checkpoint")) {
                throw ConfigError(where + "[net]: missing \"checkpoint\"");
            }
            as<std::string>(m.at("checkpoint"), where + "[net].checkpoint");
        } else {
            filters::params_from_json(m);
        }
        if (m.contains("name")) {
            as<std::string>(m.at("name"), where + ".name");
        }
        out.push_back(m);
    }
    return out;
}

json eval_to_json(const EvalConfig& e) {
    json regions = json::array();
    for (const auto& [name, r] : e.regions.fixed) {
        json rj = rect_to_json(r);
        rj["name"] = name;
        regions.push_back(rj);
    }
    return {{"split", split_name(e.split)},
            {"methods", e.methods},
            {"regions", regions},
            {"auto_regions", auto_regions_to_json(e.regions.automatic)}};
}

EvalConfig eval_from_json(const json& j) {
    const char* where = "eval";
    require_keys_subset(j, {"split", "methods", "regions", "auto_regions"}, where);
    EvalConfig e;
    e.methods = default_method_specs();
    if (const auto it = j.find("split"); it != j.end()) {
        e.split = split_from_name(as<std::string>(*it, "eval.split"));
    }
    if (const auto it = j.find("methods"); it != j.end()) {
        e.methods = methods_from_json(*it, "eval.methods");
    }
    if (const auto it = j.find("regions"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("eval.regions: expected an array");
        }
        int k = 0;
        for (const auto& rj : *it) {
            const std::string rw = "eval.regions[" + std::to_string(k) + "]";
            std::string name = "region_" + std::to_string(k);
            const RegionRect r = rect_from_json(rj, rw);
            if (rj.contains("name")) {
                name = as<std::string>(rj.at("name"), rw + ".name");
            }
            e.regions.fixed.emplace_back(name, r);
            ++k;
        }
    }
    if (const auto it = j.find("auto_regions"); it != j.end()) {
        e.regions.automatic = auto_regions_from_json(*it);
    }
    return e;
}

json bench_to_json(const BenchConfig& b) { return {{"warmups", b.warmups}, {"reps", b.reps}, {"methods", b.methods}}; }

BenchConfig bench_from_json(const json& j) {
    const char* where = "bench";
    require_keys_subset(j, {"warmups", "reps", "methods"}, where);
    BenchConfig b;
    b.methods = default_method_specs();
    read_optional(j, "warmups", b.warmups, where);
    read_optional(j, "reps", b.reps, where);
    if (const auto it = j.find("methods"); it != j.end()) {
        b.methods = methods_from_json(*it, "bench.methods");
    }
    return b;
}

} // namespace

std::vector<json> default_method_specs() {
    std::vector<json> out{{{"type", "identity"}, {"name", "input"}}};
    for (const filters::FilterParams& p : {filters::FilterParams{filters::Srad{}}, filters::FilterParams{filters::Median{}},
                                           filters::FilterParams{filters::Bilateral{}}, filters::FilterParams{filters::Nlm{}},
                                           filters::FilterParams{filters::Obnlm{}}}) {
        out.push_back(filters::params_to_json(p));
    }
    return out;
}

json dataset_config_to_json(const DatasetConfig& cfg) {
    return {{"grid", grid_to_json(cfg.grid)},
            {"phantom", phantom_to_json(cfg.phantom)},
            {"imaging", imaging_to_json(cfg.imaging)},
            {"splits",
             {{"train", split_size_to_json(cfg.train)},
              {"val", split_size_to_json(cfg.val)},
              {"test", split_size_to_json(cfg.test)}}}};
}

DatasetConfig dataset_config_from_json(const json& j) {
    require_keys_subset(j, {"grid", "phantom", "imaging", "splits"}, "dataset");
    DatasetConfig cfg;
    if (const auto it = j.find("grid"); it != j.end()) {
        cfg.grid = grid_from_json(*it);
    }
    cfg.phantom = phantom_from_json(j.value("phantom", json::object()), cfg.grid);
    if (const auto it = j.find("imaging"); it != j.end()) {
        cfg.imaging = imaging_from_json(*it);
    }
    if (const auto it = j.find("splits"); it != j.end()) {
        require_keys_subset(*it, {"train", "val", "test"}, "dataset.splits");
        if (it->contains("train")) {
            cfg.train = split_size_from_json(it->at("train"), cfg.train, "dataset.splits.train");
        }
        if (it->contains("val")) {
            cfg.val = split_size_from_json(it->at("val"), cfg.val, "dataset.splits.val");
        }
        if (it->contains("test")) {
            cfg.test = split_size_from_json(it->at("test"), cfg.test, "dataset.splits.test");
        }
    }
    return cfg;
}

json loss_config_to_json(const LossConfig& c) {
    return {{"lambda", c.lambda},
            {"sigma_i_px", c.sigma_i_px},
            {"sigma_psf_ax_px", c.sigma_psf_ax_px},
            {"sigma_psf_lat_px", c.sigma_psf_lat_px},
            {"interface_unit_peak", c.interface_unit_peak},
            {"psf_normalized", c.psf_normalized}};
}

LossConfig loss_config_from_json(const json& j) {
    const char* where = "loss";
    require_keys_subset(j,
                        {"lambda", "sigma_i_px", "sigma_psf_ax_px", "sigma_psf_lat_px", "interface_unit_peak",
                         "psf_normalized"},
                        where);
    LossConfig c;
    read_optional(j, "lambda", c.lambda, where);
    read_optional(j, "sigma_i_px", c.sigma_i_px, where);
    read_optional(j, "sigma_psf_ax_px", c.sigma_psf_ax_px, where);
    read_optional(j, "sigma_psf_lat_px", c.sigma_psf_lat_px, where);
    read_optional(j, "interface_unit_peak", c.interface_unit_peak, where);
    read_optional(j, "psf_normalized", c.psf_normalized, where);
    return c;
}

void RunConfig::validate() const {
    dataset.validate();
    network.validate();
    loss.validate();
    training.validate();
    if (training.crop % network.size_multiple() != 0) {
        throw ConfigError("training.crop must be divisible by 2^network.depth");
    }
    if (training.crop > dataset.grid.width_px || training.crop > dataset.grid.height_px) {
        throw ConfigError("training.crop exceeds the image size");
    }
    const auto& a = eval.regions.automatic;
    if (a.size < 1 || a.margin_lateral < 0 || a.margin_axial < 0 || a.max_per_image < 0) {
        throw ConfigError("eval.auto_regions: size must be >= 1 and margins/max_per_image >= 0");
    }
    for (const auto& [name, r] : eval.regions.fixed) {
        if (r.x0 < 0 || r.z0 < 0 || r.x1 <= r.x0 || r.z1 <= r.z0 || r.x1 > dataset.grid.width_px ||
            r.z1 > dataset.grid.height_px) {
            throw ConfigError("eval region '" + name + "' is empty or outside the image");
        }
    }
    if (bench.reps < 3) {
        throw ConfigError("bench.reps must be >= 3");
    }
}

json run_config_to_json(const RunConfig& cfg) {
    return {{"seed", cfg.seed},
            {"dataset", dataset_config_to_json(cfg.dataset)},
            {"network", network_to_json(cfg.network)},
            {"loss", loss_config_to_json(cfg.loss)},
            {"training", training_to_json(cfg.training)},
            {"eval", eval_to_json(cfg.eval)},
            {"bench", bench_to_json(cfg.bench)}};
}

RunConfig run_config_from_json(const json& j) {
    require_keys_subset(j, {"seed", "dataset", "network", "loss", "training", "eval", "bench"}, "config");
    RunConfig cfg;
    read_optional(j, "seed", cfg.seed, "config");
    cfg.dataset = dataset_config_from_json(j.value("dataset", json::object()));
    if (const auto it = j.find("network"); it != j.end()) {
        cfg.network = network_from_json(*it);
    }
    if (const auto it = j.find("loss"); it != j.end()) {
        cfg.loss = loss_config_from_json(*it);
    }
    if (const auto it = j.find("training"); it != j.end()) {
        cfg.training = training_from_json(*it);
    }
    cfg.eval = eval_from_json(j.value("eval", json::object()));
    cfg.bench = bench_from_json(j.value("bench", json::object()));
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
    }
    return run_config_from_json(j);
}

} // namespace s2s
