#pragma once

#include "s2s/image.hpp"

#include <json.hpp>

#include <string>
#include <variant>

namespace s2s::filters {

/// Rectangle used to estimate the homogeneous-speckle coefficient of variation q0.
struct Roi {
    int x0 = 0;
    int z0 = 0;
    int width = 16;
    int height = 16;
};

/// Speckle-reducing anisotropic diffusion.
struct Srad {
    unsigned iterations = 200;
    double lambda = 0.1;
    Roi roi;
};

struct Median {
    unsigned window = 15;
};

struct Bilateral {
    double sigma_range = 0.05; ///< "degree of smoothing"
    double sigma_spatial = 5.0; ///< pixels
};

/// Non-local means with Euclidean patch distance.
struct Nlm {
    double h = 0.075;
    unsigned search = 101;
    unsigned patch = 21;
};

/// Non-local means with the Pearson-type speckle distance.
struct Obnlm {
    unsigned search = 101;
    unsigned patch = 45;
    double h = 1.05;
};

using FilterParams = std::variant<Srad, Median, Bilateral, Nlm, Obnlm>;

/// Throws ConfigError when a size is even or zero or a scale is nonpositive.
void validate(const FilterParams& params);

// All filters use symmetric mirror boundaries.
ImageGrid srad(const ImageGrid& img, const Srad& p);
ImageGrid median_filter(const ImageGrid& img, const Median& p);
ImageGrid bilateral_filter(const ImageGrid& img, const Bilateral& p);
ImageGrid nlm(const ImageGrid& img, const Nlm& p);
ImageGrid obnlm(const ImageGrid& img, const Obnlm& p);

ImageGrid apply(const ImageGrid& img, const FilterParams& params);

/// Short tag: "srad", "median", "bilateral", "nlm", "obnlm".
std::string type_name(const FilterParams& params);

/// Tagged JSON, e.g. {"type":"obnlm","search":101,"patch":45,"h":1.05}. Unknown keys are rejected.
FilterParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const FilterParams& params);

/// Constant used to keep multiplicative-model denominators positive.
inline constexpr double kPositivityShift = 1e-6;

} // namespace s2s::filters
