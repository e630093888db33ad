#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace s2s {

/// Pixel raster of an image: size and physical spacing.
struct GridSpec {
    int width_px = 128;
    int height_px = 128;
    double dx_mm = 0.15; ///< lateral spacing
    double dz_mm = 0.15; ///< axial spacing

    double width_mm() const { return width_px * dx_mm; }
    double height_mm() const { return height_px * dz_mm; }
    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

/// 2-D scalar field, row-major with rows along depth (z) and columns along x.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int width, int height, double dx_mm = 1.0, double dz_mm = 1.0, double fill = 0.0);
    explicit ImageGrid(const GridSpec& spec, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    double dx_mm() const { return dx_mm_; }
    double dz_mm() const { return dz_mm_; }
    GridSpec spec() const { return {width_, height_, dx_mm_, dz_mm_}; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& at(int x, int z) { return values_[static_cast<std::size_t>(z) * width_ + x]; }
    double at(int x, int z) const { return values_[static_cast<std::size_t>(z) * width_ + x]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<double> row(int z) { return {values_.data() + static_cast<std::size_t>(z) * width_, static_cast<std::size_t>(width_)}; }
    std::span<const double> row(int z) const { return {values_.data() + static_cast<std::size_t>(z) * width_, static_cast<std::size_t>(width_)}; }

    bool same_shape(const ImageGrid& other) const { return width_ == other.width_ && height_ == other.height_; }
    bool operator==(const ImageGrid&) const = default;

    double min() const;
    double max() const;

private:
    int width_ = 0;
    int height_ = 0;
    double dx_mm_ = 1.0;
    double dz_mm_ = 1.0;
    std::vector<double> values_;
};

/// Throws ShapeError when the two grids differ in pixel dimensions.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

/// Symmetric (edge-repeating) reflection of an arbitrary index into [0, n).
/// ... c b a | a b c | c b a ...
inline int reflect_index(int i, int n) {
    if (i >= 0 && i < n) {
        return i;
    }
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) {
        m += period;
    }
    return m < n ? m : period - 1 - m;
}

/// Copy of `img` padded by `pad_x` columns and `pad_z` rows on each side with mirror values.
ImageGrid mirror_pad(const ImageGrid& img, int pad_x, int pad_z);

/// Sub-rectangle [x0, x0+width) x [z0, z0+height).
ImageGrid crop(const ImageGrid& img, int x0, int z0, int width, int height);

ImageGrid flip_horizontal(const ImageGrid& img);

/// out = (1 - alpha) * filtered + alpha * original.
ImageGrid blend(const ImageGrid& filtered, const ImageGrid& original, double alpha);

} // namespace s2s
