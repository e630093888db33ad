#include "s2s/phantom.hpp"

#include "s2s/errors.hpp"
#include "s2s/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace s2s {

namespace {

// Distance from (y0, y1), y >= 0, to the ellipse (x0/e0)^2 + (x1/e1)^2 = 1 with e0 >= e1 > 0.
// Robust bisection on the Lagrange-multiplier root (Eberly).
double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
    double s = 0.0;
    for (int i = 0; i < 200; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) {
            break;
        }
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        const double gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (gs > 0.0) {
            s0 = s;
        } else if (gs < 0.0) {
            s1 = s;
        } else {
            break;
        }
    }
    return s;
}

double ellipse_distance_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0;
            const double z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) {
                return 0.0;
            }
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = ellipse_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (sbar + r0);
            const double x1 = y1 / (sbar + 1.0);
            return std::hypot(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

void check_finite_nonneg(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) {
        throw ConfigError(std::string("phantom config: ") + what + " must be finite and nonnegative");
    }
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string("phantom config: ") + what + " must lie in [0, 1]");
    }
}

} // namespace

bool InclusionSpec::contains(PointMm p) const {
    const double hx = 0.5 * extent_mm.x;
    const double hz = 0.5 * extent_mm.z;
    const double dx = p.x - center_mm.x;
    const double dz = p.z - center_mm.z;
    if (shape == InclusionShape::cuboid) {
        return std::abs(dx) <= hx && std::abs(dz) <= hz;
    }
    return (dx / hx) * (dx / hx) + (dz / hz) * (dz / hz) <= 1.0;
}

double InclusionSpec::boundary_distance(PointMm p) const {
    const double hx = 0.5 * extent_mm.x;
    const double hz = 0.5 * extent_mm.z;
    const double ax = std::abs(p.x - center_mm.x);
    const double az = std::abs(p.z - center_mm.z);
    if (shape == InclusionShape::cuboid) {
        if (ax <= hx && az <= hz) {
            return std::min(hx - ax, hz - az);
        }
        return std::hypot(std::max(ax - hx, 0.0), std::max(az - hz, 0.0));
    }
    return hx >= hz ? ellipse_distance_quadrant(hx, hz, ax, az) : ellipse_distance_quadrant(hz, hx, az, ax);
}

double InclusionSpec::perimeter_mm() const {
    if (shape == InclusionShape::cuboid) {
        return 2.0 * (extent_mm.x + extent_mm.z);
    }
    // Trapezoidal rule converges spectrally for the periodic integrand.
    const double a = 0.5 * extent_mm.x;
    const double b = 0.5 * extent_mm.z;
    constexpr int n = 1024;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        sum += std::hypot(a * std::sin(t), b * std::cos(t));
    }
    return sum * 2.0 * std::numbers::pi / n;
}

void PhantomConfig::validate() const {
    if (!(width_mm > 0.0) || !(height_mm > 0.0) || !std::isfinite(width_mm) || !std::isfinite(height_mm)) {
        throw ConfigError("phantom config: extents must be positive");
    }
    if (inclusion_count < 0) {
        throw ConfigError("phantom config: inclusion_count must be nonnegative");
    }
    if (!(extent_min_mm > 0.0) || !(extent_max_mm >= extent_min_mm) || !std::isfinite(extent_max_mm)) {
        throw ConfigError("phantom config: need 0 < extent_min_mm <= extent_max_mm");
    }
    check_probability(background_p_anechoic, "background_p_anechoic");
    check_probability(inclusion_p_anechoic, "inclusion_p_anechoic");
    check_probability(p_interface, "p_interface");
    check_finite_nonneg(background_sigma_std, "background_sigma_std");
    check_finite_nonneg(inclusion_sigma_std, "inclusion_sigma_std");
    check_finite_nonneg(interface_amplitude_std, "interface_amplitude_std");
    if (!std::isfinite(background_sigma_mean) || !std::isfinite(inclusion_sigma_mean) ||
        !std::isfinite(interface_amplitude_mean)) {
        throw ConfigError("phantom config: distribution means must be finite");
    }
}

PhantomGeometry generate_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto bernoulli = [&](double p) { return unit(rng) < p; };
    auto normal = [&](double mean, double stddev) {
        return stddev > 0.0 ? std::normal_distribution<double>(mean, stddev)(rng) : mean;
    };

    PhantomGeometry geom;
    geom.width_mm = cfg.width_mm;
    geom.height_mm = cfg.height_mm;
    geom.seed = seed;
    geom.background.anechoic = bernoulli(cfg.background_p_anechoic);
    geom.background.amplitude_sigma = std::max(0.0, normal(cfg.background_sigma_mean, cfg.background_sigma_std));

    geom.inclusions.reserve(static_cast<std::size_t>(cfg.inclusion_count));
    for (int i = 0; i < cfg.inclusion_count; ++i) {
        InclusionSpec inc;
        inc.shape = bernoulli(0.5) ? InclusionShape::cuboid : InclusionShape::spheroid;
        inc.center_mm = {cfg.width_mm * unit(rng), cfg.height_mm * unit(rng)};
        const double span = cfg.extent_max_mm - cfg.extent_min_mm;
        inc.extent_mm = {cfg.extent_min_mm + span * unit(rng), cfg.extent_min_mm + span * unit(rng)};
        inc.region.anechoic = bernoulli(cfg.inclusion_p_anechoic);
        inc.region.amplitude_sigma = std::max(0.0, normal(cfg.inclusion_sigma_mean, cfg.inclusion_sigma_std));
        inc.has_interface = bernoulli(cfg.p_interface);
        inc.interface_amplitude =
            std::max(0.0, normal(cfg.interface_amplitude_mean, cfg.interface_amplitude_std));
        geom.inclusions.push_back(inc);
    }
    return geom;
}

int region_index_at(const PhantomGeometry& geom, PointMm p) {
    if (!(p.x >= 0.0 && p.x <= geom.width_mm && p.z >= 0.0 && p.z <= geom.height_mm)) {
        throw DomainError("point outside phantom extent");
    }
    for (int i = static_cast<int>(geom.inclusions.size()) - 1; i >= 0; --i) {
        if (geom.inclusions[static_cast<std::size_t>(i)].contains(p)) {
            return i;
        }
    }
    return -1;
}

const RegionSpec& region_at(const PhantomGeometry& geom, PointMm p) {
    const int idx = region_index_at(geom, p);
    return idx < 0 ? geom.background : geom.inclusions[static_cast<std::size_t>(idx)].region;
}

InterfaceMap rasterize_interfaces(const PhantomGeometry& geom, const GridSpec& grid) {
    grid.validate();
    InterfaceMap map{ImageGrid(grid)};
    const double tol = 0.5 * std::hypot(grid.dx_mm, grid.dz_mm);
    for (const auto& inc : geom.inclusions) {
        if (!inc.has_interface) {
            continue;
        }
        const double x_lo = inc.center_mm.x - 0.5 * inc.extent_mm.x - tol;
        const double x_hi = inc.center_mm.x + 0.5 * inc.extent_mm.x + tol;
        const double z_lo = inc.center_mm.z - 0.5 * inc.extent_mm.z - tol;
        const double z_hi = inc.center_mm.z + 0.5 * inc.extent_mm.z + tol;
        const int ix0 = std::max(0, static_cast<int>(std::floor(x_lo / grid.dx_mm - 0.5)));
        const int ix1 = std::min(grid.width_px - 1, static_cast<int>(std::ceil(x_hi / grid.dx_mm - 0.5)));
        const int iz0 = std::max(0, static_cast<int>(std::floor(z_lo / grid.dz_mm - 0.5)));
        const int iz1 = std::min(grid.height_px - 1, static_cast<int>(std::ceil(z_hi / grid.dz_mm - 0.5)));
        for (int z = iz0; z <= iz1; ++z) {
            for (int x = ix0; x <= ix1; ++x) {
                if (inc.boundary_distance(pixel_center(grid, x, z)) <= tol) {
                    map.grid.at(x, z) = 1.0;
                }
            }
        }
    }
    return map;
}

void to_json(nlohmann::json& j, const RegionSpec& r) {
    j = {{"anechoic", r.anechoic}, {"amplitude_sigma", r.amplitude_sigma}};
}

void from_json(const nlohmann::json& j, RegionSpec& r) {
    j.at("anechoic").get_to(r.anechoic);
    j.at("amplitude_sigma").get_to(r.amplitude_sigma);
}

void to_json(nlohmann::json& j, const InclusionSpec& s) {
    j = {{"shape", s.shape == InclusionShape::cuboid ? "cuboid" : "spheroid"},
         {"center_mm", {{"x", s.center_mm.x}, {"z", s.center_mm.z}}},
         {"extent_mm", {{"x", s.extent_mm.x}, {"z", s.extent_mm.z}}},
         {"region", s.region},
         {"has_interface", s.has_interface},
         {"interface_amplitude", s.interface_amplitude}};
}

void from_json(const nlohmann::json& j, InclusionSpec& s) {
    const auto shape = j.at("shape").get<std::string>();
    if (shape == "cuboid") {
        s.shape = InclusionShape::cuboid;
    } else if (shape == "spheroid") {
        s.shape = InclusionShape::spheroid;
    } else {
        throw ConfigError("unknown inclusion shape '" + shape + "'");
    }
    j.at("center_mm").at("x").get_to(s.center_mm.x);
    j.at("center_mm").at("z").get_to(s.center_mm.z);
    j.at("extent_mm").at("x").get_to(s.extent_mm.x);
    j.at("extent_mm").at("z").get_to(s.extent_mm.z);
    j.at("region").get_to(s.region);
    j.at("has_interface").get_to(s.has_interface);
    j.at("interface_amplitude").get_to(s.interface_amplitude);
}

void to_json(nlohmann::json& j, const PhantomGeometry& g) {
    j = {{"width_mm", g.width_mm},     {"height_mm", g.height_mm}, {"background", g.background},
         {"inclusions", g.inclusions}, {"seed", g.seed}};
}

void from_json(const nlohmann::json& j, PhantomGeometry& g) {
    j.at("width_mm").get_to(g.width_mm);
    j.at("height_mm").get_to(g.height_mm);
    j.at("background").get_to(g.background);
    j.at("inclusions").get_to(g.inclusions);
    j.at("seed").get_to(g.seed);
}

} // namespace s2s
