#pragma once

#include "s2s/image.hpp"
#include "s2s/phantom.hpp"

#include <cstdint>
#include <vector>

namespace s2s {

struct Scatterer {
    double x_mm = 0.0;
    double z_mm = 0.0;
    double amplitude = 0.0;
};

/// One random instantiation of point scatterers over a phantom.
struct ScattererField {
    std::vector<Scatterer> scatterers;
    std::uint64_t source_seed = 0;
};

/// Anisotropic Gaussian point spread function with an axial carrier.
struct PsfSpec {
    double sigma_lat_mm = 1.05;
    double sigma_ax_mm = 0.15;
    double carrier_wavelength_mm = 0.22; // 7 MHz at 1540 m/s

    /// Sigmas given in pixels of `grid` (lateral along x, axial along z).
    static PsfSpec from_pixels(const GridSpec& grid, double sigma_lat_px = 7.0, double sigma_ax_px = 1.0,
                               double carrier_wavelength_mm = 0.22);
    void validate() const;
};

/// Simulator settings for one B-mode instance.
struct ImagingConfig {
    double density_per_mm2 = 30.0;
    double interface_density_per_mm = 20.0;
    double psf_sigma_lat_px = 7.0;
    double psf_sigma_ax_px = 1.0;
    double carrier_wavelength_mm = 0.22;
    double dynamic_range_db = 70.0;

    PsfSpec psf(const GridSpec& grid) const {
        return PsfSpec::from_pixels(grid, psf_sigma_lat_px, psf_sigma_ax_px, carrier_wavelength_mm);
    }
    void validate() const;
};

/// Bulk scatterers are Poisson(density * area) per echoic region with N(0, sigma^2) amplitudes;
/// interfaced inclusion boundaries add scatterers at `interface_density_per_mm` of arc length
/// with constant amplitude.
ScattererField instantiate_scatterers(const PhantomGeometry& geom, double density_per_mm2,
                                      double interface_density_per_mm, std::uint64_t seed);

/// Envelope |c| of c(p) = sum_s a_s exp(-dx^2/2 sl^2 - dz^2/2 sa^2) exp(i 2 pi dz / lambda),
/// each scatterer splatted over a +-4 sigma window.
ImageGrid render_envelope(const ScattererField& field, const PsfSpec& psf, const GridSpec& grid);

/// clamp(1 + 20 log10(env / max(env)) / dynamic_range_db, 0, 1); all-zero input maps to zeros.
ImageGrid log_compress(const ImageGrid& env, double dynamic_range_db);

/// Per-pixel arithmetic mean.
ImageGrid average_images(const std::vector<ImageGrid>& images);

/// instantiate -> render -> log-compress.
ImageGrid simulate_bmode(const PhantomGeometry& geom, const ImagingConfig& cfg, const GridSpec& grid,
                         std::uint64_t seed);

} // namespace s2s
