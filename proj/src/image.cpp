#include "s2s/image.hpp"

#include "s2s/errors.hpp"

#include <algorithm>
#include <string>

namespace s2s {

void GridSpec::validate() const {
    if (width_px <= 0 || height_px <= 0) {
        throw ConfigError("grid dimensions must be positive");
    }
    if (!(dx_mm > 0.0) || !(dz_mm > 0.0)) {
        throw ConfigError("grid spacing must be positive");
    }
}

ImageGrid::ImageGrid(int width, int height, double dx_mm, double dz_mm, double fill)
    : width_(width), height_(height), dx_mm_(dx_mm), dz_mm_(dz_mm) {
    if (width < 0 || height < 0) {
        throw ShapeError("negative image dimensions");
    }
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageGrid::ImageGrid(const GridSpec& spec, double fill)
    : ImageGrid(spec.width_px, spec.height_px, spec.dx_mm, spec.dz_mm, fill) {}

double ImageGrid::min() const {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ImageGrid::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + ")");
    }
}

ImageGrid mirror_pad(const ImageGrid& img, int pad_x, int pad_z) {
    const int w = img.width();
    const int h = img.height();
    ImageGrid out(w + 2 * pad_x, h + 2 * pad_z, img.dx_mm(), img.dz_mm());
    for (int z = 0; z < out.height(); ++z) {
        const int sz = reflect_index(z - pad_z, h);
        for (int x = 0; x < out.width(); ++x) {
            out.at(x, z) = img.at(reflect_index(x - pad_x, w), sz);
        }
    }
    return out;
}

ImageGrid crop(const ImageGrid& img, int x0, int z0, int width, int height) {
    if (x0 < 0 || z0 < 0 || width <= 0 || height <= 0 || x0 + width > img.width() || z0 + height > img.height()) {
        throw ShapeError("crop window outside image");
    }
    ImageGrid out(width, height, img.dx_mm(), img.dz_mm());
    for (int z = 0; z < height; ++z) {
        const auto src = img.row(z0 + z).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(width));
        std::copy(src.begin(), src.end(), out.row(z).begin());
    }
    return out;
}

ImageGrid flip_horizontal(const ImageGrid& img) {
    ImageGrid out = img;
    for (int z = 0; z < img.height(); ++z) {
        auto r = out.row(z);
        std::reverse(r.begin(), r.end());
    }
    return out;
}

ImageGrid blend(const ImageGrid& filtered, const ImageGrid& original, double alpha) {
    require_same_shape(filtered, original, "blend");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("blend alpha must lie in [0, 1]");
    }
    ImageGrid out = original;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - alpha) * filtered[i] + alpha * original[i];
    }
    return out;
}

} // namespace s2s
