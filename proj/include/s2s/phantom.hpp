#pragma once

#include "s2s/image.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace s2s {

struct PointMm {
    double x = 0.0; ///< lateral
    double z = 0.0; ///< axial (depth)
    bool operator==(const PointMm&) const = default;
};

/// Scattering statistics of one region.
struct RegionSpec {
    bool anechoic = false;
    double amplitude_sigma = 1.0; ///< std of the zero-mean normal amplitude law
    bool operator==(const RegionSpec&) const = default;
};

/// In-plane cross-sections: spheroids become ellipses, cuboids rectangles (axis-aligned).
enum class InclusionShape { spheroid, cuboid };

struct InclusionSpec {
    InclusionShape shape = InclusionShape::spheroid;
    PointMm center_mm;
    PointMm extent_mm; ///< full extent per axis
    RegionSpec region;
    bool has_interface = false;
    double interface_amplitude = 0.0;

    bool contains(PointMm p) const;
    /// Euclidean distance from `p` to the boundary curve.
    double boundary_distance(PointMm p) const;
    double perimeter_mm() const;
    bool operator==(const InclusionSpec&) const = default;
};

struct PhantomGeometry {
    double width_mm = 0.0;
    double height_mm = 0.0;
    RegionSpec background;
    std::vector<InclusionSpec> inclusions;
    std::uint64_t seed = 0;
    bool operator==(const PhantomGeometry&) const = default;
};

/// Distribution parameters for random phantoms. Defaults follow the reference phantom table.
struct PhantomConfig {
    double width_mm = 19.2;
    double height_mm = 19.2;
    int inclusion_count = 100;
    double extent_min_mm = 1.0;
    double extent_max_mm = 5.0;
    double background_p_anechoic = 0.4;
    double background_sigma_mean = 1.0;
    double background_sigma_std = 0.5;
    double inclusion_p_anechoic = 0.4;
    double inclusion_sigma_mean = 4.0;
    double inclusion_sigma_std = 2.0;
    double p_interface = 0.5;
    double interface_amplitude_mean = 14.0;
    double interface_amplitude_std = 2.0;

    void validate() const;
};

/// Binary per-pixel indicator of interfaced inclusion boundaries.
struct InterfaceMap {
    ImageGrid grid;
};

PhantomGeometry generate_phantom(const PhantomConfig& cfg, std::uint64_t seed);

/// Index of the last-listed inclusion containing `p`, or -1 for background.
/// Throws DomainError when `p` lies outside the phantom extent.
int region_index_at(const PhantomGeometry& geom, PointMm p);
const RegionSpec& region_at(const PhantomGeometry& geom, PointMm p);

/// A pixel is 1 when its center lies within half a pixel diagonal of the boundary
/// of an inclusion that carries an interface.
InterfaceMap rasterize_interfaces(const PhantomGeometry& geom, const GridSpec& grid);

/// Pixel-center coordinates in mm.
inline PointMm pixel_center(const GridSpec& g, int x, int z) { return {(x + 0.5) * g.dx_mm, (z + 0.5) * g.dz_mm}; }

void to_json(nlohmann::json& j, const RegionSpec& r);
void from_json(const nlohmann::json& j, RegionSpec& r);
void to_json(nlohmann::json& j, const InclusionSpec& s);
void from_json(const nlohmann::json& j, InclusionSpec& s);
void to_json(nlohmann::json& j, const PhantomGeometry& g);
void from_json(const nlohmann::json& j, PhantomGeometry& g);

} // namespace s2s
