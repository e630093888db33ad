#include "s2s/imaging.hpp"

#include "s2s/errors.hpp"
#include "s2s/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace s2s {

PsfSpec PsfSpec::from_pixels(const GridSpec& grid, double sigma_lat_px, double sigma_ax_px,
                             double carrier_wavelength_mm) {
    return {sigma_lat_px * grid.dx_mm, sigma_ax_px * grid.dz_mm, carrier_wavelength_mm};
}

void PsfSpec::validate() const {
    if (!(sigma_lat_mm > 0.0) || !(sigma_ax_mm > 0.0) || !(carrier_wavelength_mm > 0.0)) {
        throw ConfigError("PSF parameters must be positive");
    }
}

void ImagingConfig::validate() const {
    if (!(density_per_mm2 > 0.0) || !(interface_density_per_mm > 0.0)) {
        throw ConfigError("scatterer densities must be positive");
    }
    if (!(psf_sigma_lat_px > 0.0) || !(psf_sigma_ax_px > 0.0) || !(carrier_wavelength_mm > 0.0)) {
        throw ConfigError("PSF parameters must be positive");
    }
    if (!(dynamic_range_db > 0.0)) {
        throw ConfigError("dynamic range must be positive");
    }
}

namespace {

// Uniform by arc length on the inclusion boundary.
PointMm sample_boundary(const InclusionSpec& inc, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double a = 0.5 * inc.extent_mm.x;
    const double b = 0.5 * inc.extent_mm.z;
    if (inc.shape == InclusionShape::cuboid) {
        double s = unit(rng) * 2.0 * (inc.extent_mm.x + inc.extent_mm.z);
        const double left = inc.center_mm.x - a;
        const double top = inc.center_mm.z - b;
        if (s < inc.extent_mm.x) {
            return {left + s, top};
        }
        s -= inc.extent_mm.x;
        if (s < inc.extent_mm.z) {
            return {left + inc.extent_mm.x, top + s};
        }
        s -= inc.extent_mm.z;
        if (s < inc.extent_mm.x) {
            return {left + inc.extent_mm.x - s, top + inc.extent_mm.z};
        }
        s -= inc.extent_mm.x;
        return {left, top + inc.extent_mm.z - s};
    }
    // Rejection on the parametric speed |r'(t)| <= max(a, b).
    const double vmax = std::max(a, b);
    for (;;) {
        const double t = 2.0 * std::numbers::pi * unit(rng);
        const double speed = std::hypot(a * std::sin(t), b * std::cos(t));
        if (unit(rng) * vmax <= speed) {
            return {inc.center_mm.x + a * std::cos(t), inc.center_mm.z + b * std::sin(t)};
        }
    }
}

} // namespace

ScattererField instantiate_scatterers(const PhantomGeometry& geom, double density_per_mm2,
                                      double interface_density_per_mm, std::uint64_t seed) {
    if (!(density_per_mm2 > 0.0) || !(interface_density_per_mm > 0.0)) {
        throw ConfigError("scatterer densities must be positive");
    }
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScattererField field;
    field.source_seed = seed;

    // Poisson thinning: drawing over the whole extent and classifying afterwards yields
    // independent Poisson(density * area) counts per region.
    const double area = geom.width_mm * geom.height_mm;
    const auto bulk = std::poisson_distribution<long long>(density_per_mm2 * area)(rng);
    field.scatterers.reserve(static_cast<std::size_t>(bulk));
    for (long long i = 0; i < bulk; ++i) {
        const PointMm p{geom.width_mm * unit(rng), geom.height_mm * unit(rng)};
        const double amp_draw = std::normal_distribution<double>(0.0, 1.0)(rng);
        const RegionSpec& region = region_at(geom, p);
        if (region.anechoic || region.amplitude_sigma <= 0.0) {
            continue;
        }
        field.scatterers.push_back({p.x, p.z, region.amplitude_sigma * amp_draw});
    }

    for (const auto& inc : geom.inclusions) {
        if (!inc.has_interface) {
            continue;
        }
        const auto n = std::poisson_distribution<long long>(interface_density_per_mm * inc.perimeter_mm())(rng);
        for (long long i = 0; i < n; ++i) {
            const PointMm p = sample_boundary(inc, rng);
            if (p.x < 0.0 || p.x > geom.width_mm || p.z < 0.0 || p.z > geom.height_mm) {
                continue;
            }
            field.scatterers.push_back({p.x, p.z, inc.interface_amplitude});
        }
    }
    return field;
}

ImageGrid render_envelope(const ScattererField& field, const PsfSpec& psf, const GridSpec& grid) {
    psf.validate();
    grid.validate();
    const int w = grid.width_px;
    const int h = grid.height_px;
    std::vector<double> re(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<double> im(re.size(), 0.0);

    const double cut_x = 4.0 * psf.sigma_lat_mm;
    const double cut_z = 4.0 * psf.sigma_ax_mm;
    const double inv_2sl2 = 1.0 / (2.0 * psf.sigma_lat_mm * psf.sigma_lat_mm);
    const double inv_2sa2 = 1.0 / (2.0 * psf.sigma_ax_mm * psf.sigma_ax_mm);
    const double k = 2.0 * std::numbers::pi / psf.carrier_wavelength_mm;

    std::vector<double> wx;
    std::vector<double> wz_re;
    std::vector<double> wz_im;
    for (const auto& s : field.scatterers) {
        const int x0 = std::max(0, static_cast<int>(std::ceil((s.x_mm - cut_x) / grid.dx_mm - 0.5)));
        const int x1 = std::min(w - 1, static_cast<int>(std::floor((s.x_mm + cut_x) / grid.dx_mm - 0.5)));
        const int z0 = std::max(0, static_cast<int>(std::ceil((s.z_mm - cut_z) / grid.dz_mm - 0.5)));
        const int z1 = std::min(h - 1, static_cast<int>(std::floor((s.z_mm + cut_z) / grid.dz_mm - 0.5)));
        if (x0 > x1 || z0 > z1) {
            continue;
        }
        wx.resize(static_cast<std::size_t>(x1 - x0 + 1));
        for (int x = x0; x <= x1; ++x) {
            const double d = (x + 0.5) * grid.dx_mm - s.x_mm;
            wx[static_cast<std::size_t>(x - x0)] = std::exp(-d * d * inv_2sl2);
        }
        wz_re.resize(static_cast<std::size_t>(z1 - z0 + 1));
        wz_im.resize(wz_re.size());
        for (int z = z0; z <= z1; ++z) {
            const double d = (z + 0.5) * grid.dz_mm - s.z_mm;
            const double g = s.amplitude * std::exp(-d * d * inv_2sa2);
            wz_re[static_cast<std::size_t>(z - z0)] = g * std::cos(k * d);
            wz_im[static_cast<std::size_t>(z - z0)] = g * std::sin(k * d);
        }
        for (int z = z0; z <= z1; ++z) {
            const double cr = wz_re[static_cast<std::size_t>(z - z0)];
            const double ci = wz_im[static_cast<std::size_t>(z - z0)];
            double* row_re = re.data() + static_cast<std::size_t>(z) * w;
            double* row_im = im.data() + static_cast<std::size_t>(z) * w;
            for (int x = x0; x <= x1; ++x) {
                const double gx = wx[static_cast<std::size_t>(x - x0)];
                row_re[x] += cr * gx;
                row_im[x] += ci * gx;
            }
        }
    }

    ImageGrid env(grid);
    for (std::size_t i = 0; i < env.size(); ++i) {
        env[i] = std::hypot(re[i], im[i]);
    }
    return env;
}

ImageGrid log_compress(const ImageGrid& env, double dynamic_range_db) {
    if (!(dynamic_range_db > 0.0)) {
        throw ConfigError("dynamic range must be positive");
    }
    ImageGrid out = env;
    const double env_max = env.max();
    if (!(env_max > 0.0)) {
        std::fill(out.values().begin(), out.values().end(), 0.0);
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double e = env[i];
        if (e < 0.0) {
            throw InputError("envelope values must be nonnegative");
        }
        const double v = e > 0.0 ? 1.0 + 20.0 * std::log10(e / env_max) / dynamic_range_db : 0.0;
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

ImageGrid average_images(const std::vector<ImageGrid>& images) {
    if (images.empty()) {
        throw ShapeError("average_images needs at least one image");
    }
    ImageGrid out(images.front().width(), images.front().height(), images.front().dx_mm(), images.front().dz_mm());
    for (const auto& img : images) {
        require_same_shape(out, img, "average_images");
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += img[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= inv;
    }
    return out;
}

ImageGrid simulate_bmode(const PhantomGeometry& geom, const ImagingConfig& cfg, const GridSpec& grid,
                         std::uint64_t seed) {
    cfg.validate();
    const auto field = instantiate_scatterers(geom, cfg.density_per_mm2, cfg.interface_density_per_mm, seed);
    return log_compress(render_envelope(field, cfg.psf(grid), grid), cfg.dynamic_range_db);
}

} // namespace s2s
