#pragma once

#include "s2s/image.hpp"
#include "s2s/phantom.hpp"

#include <vector>

namespace s2s {

struct LossConfig {
    double lambda = 500.0;
    double sigma_i_px = 5.0;
    double sigma_psf_ax_px = 1.0;
    double sigma_psf_lat_px = 7.0;
    /// Interface kernel scaled to kernel(0,0) = 1 (true) or to unit sum (false).
    bool interface_unit_peak = true;
    /// PSF kernel scaled to unit sum (true) or to kernel(0,0) = 1 (false).
    bool psf_normalized = true;

    void validate() const;
    bool operator==(const LossConfig&) const = default;
};

/// Spatial weights for the two loss terms; inverse_weight = 1 - interface_weight.
struct WeightMaps {
    ImageGrid interface_weight;
    ImageGrid inverse_weight;
};

/// Samples exp(-t^2 / 2 sigma^2) for t in [-ceil(4 sigma), ceil(4 sigma)], optionally scaled to unit sum.
std::vector<double> gaussian_kernel_1d(double sigma, bool normalize);

/// Zero-padded convolution of the binary interface map with the interface Gaussian, clamped to [0, 1].
WeightMaps interface_weight(const InterfaceMap& interfaces, double sigma_i_px, bool unit_peak = true);
WeightMaps interface_weight(const InterfaceMap& interfaces, const LossConfig& cfg);

/// Window of `maps` with the same geometry as `crop`.
WeightMaps crop_weights(const WeightMaps& maps, int x0, int z0, int width, int height);

/// Separable mirror-padded blur with the PSF kernel (lateral along x, axial along z).
ImageGrid psf_blur(const ImageGrid& img, const LossConfig& cfg);
/// Exact adjoint of psf_blur, mirror padding included.
ImageGrid psf_blur_adjoint(const ImageGrid& img, const LossConfig& cfg);

/// mean(((Io - It) * inv)^2) + lambda * mean(((blur(Io) - It) * w)^2).
double loss_forward(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                    const LossConfig& cfg);

/// dLoss/dOutput.
ImageGrid loss_backward(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                        const LossConfig& cfg);

struct LossValue {
    double loss = 0.0;
    ImageGrid gradient;
};

/// Forward and backward sharing one blur.
LossValue loss_and_gradient(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                            const LossConfig& cfg);

} // namespace s2s
