#include "s2s/loss.hpp"

#include "s2s/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace s2s {

void LossConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("loss.lambda must be finite and >= 0");
    }
    for (double s : {sigma_i_px, sigma_psf_ax_px, sigma_psf_lat_px}) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ConfigError("loss sigmas must be finite and > 0");
        }
    }
}

std::vector<double> gaussian_kernel_1d(double sigma, bool normalize) {
    if (!(sigma > 0.0)) {
        throw DomainError("gaussian_kernel_1d: sigma must be > 0");
    }
    const int r = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    for (int t = -r; t <= r; ++t) {
        k[static_cast<std::size_t>(t + r)] = std::exp(-static_cast<double>(t) * t / (2.0 * sigma * sigma));
    }
    if (normalize) {
        const double s = std::accumulate(k.begin(), k.end(), 0.0);
        for (double& v : k) {
            v /= s;
        }
    }
    return k;
}

namespace {

enum class Pad { zero, mirror };

// y[i] = sum_t k[t] x[i + t - r] along one axis.
ImageGrid convolve_axis(const ImageGrid& img, const std::vector<double>& k, bool along_x, Pad pad) {
    const int r = static_cast<int>(k.size() / 2);
    const int w = img.width();
    const int h = img.height();
    ImageGrid out(w, h, img.dx_mm(), img.dz_mm());
    const int n = along_x ? w : h;
    for (int z = 0; z < h; ++z) {
        for (int x = 0; x < w; ++x) {
            const int i = along_x ? x : z;
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) {
                int j = i + t;
                if (j < 0 || j >= n) {
                    if (pad == Pad::zero) {
                        continue;
                    }
                    j = reflect_index(j, n);
                }
                acc += k[static_cast<std::size_t>(t + r)] * (along_x ? img.at(j, z) : img.at(x, j));
            }
            out.at(x, z) = acc;
        }
    }
    return out;
}

// Transpose of convolve_axis with mirror padding: scatter each output back to its sources.
ImageGrid convolve_axis_adjoint(const ImageGrid& g, const std::vector<double>& k, bool along_x) {
    const int r = static_cast<int>(k.size() / 2);
    const int w = g.width();
    const int h = g.height();
    ImageGrid out(w, h, g.dx_mm(), g.dz_mm());
    const int n = along_x ? w : h;
    for (int z = 0; z < h; ++z) {
        for (int x = 0; x < w; ++x) {
            const int i = along_x ? x : z;
            const double gi = g.at(x, z);
            for (int t = -r; t <= r; ++t) {
                const int j = reflect_index(i + t, n);
                (along_x ? out.at(j, z) : out.at(x, j)) += k[static_cast<std::size_t>(t + r)] * gi;
            }
        }
    }
    return out;
}

std::vector<double> psf_kernel(double sigma, const LossConfig& cfg) { return gaussian_kernel_1d(sigma, cfg.psf_normalized); }

void check_inputs(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps) {
    require_same_shape(output, target, "loss: output vs target");
    require_same_shape(output, maps.interface_weight, "loss: output vs interface weight");
    require_same_shape(output, maps.inverse_weight, "loss: output vs inverse weight");
}

} // namespace

WeightMaps interface_weight(const InterfaceMap& interfaces, double sigma_i_px, bool unit_peak) {
    const ImageGrid& ii = interfaces.grid;
    for (std::size_t i = 0; i < ii.size(); ++i) {
        if (ii[i] != 0.0 && ii[i] != 1.0) {
            throw InputError("interface_weight: interface map must be binary");
        }
    }
    const auto k1 = gaussian_kernel_1d(sigma_i_px, false);
    double scale = 1.0;
    if (!unit_peak) {
        const double s = std::accumulate(k1.begin(), k1.end(), 0.0);
        scale = 1.0 / (s * s);
    }
    ImageGrid w = convolve_axis(convolve_axis(ii, k1, true, Pad::zero), k1, false, Pad::zero);
    WeightMaps maps{w, ImageGrid(ii.width(), ii.height(), ii.dx_mm(), ii.dz_mm())};
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = std::clamp(w[i] * scale, 0.0, 1.0);
        maps.interface_weight[i] = v;
        maps.inverse_weight[i] = 1.0 - v;
    }
    return maps;
}

WeightMaps interface_weight(const InterfaceMap& interfaces, const LossConfig& cfg) {
    return interface_weight(interfaces, cfg.sigma_i_px, cfg.interface_unit_peak);
}

WeightMaps crop_weights(const WeightMaps& maps, int x0, int z0, int width, int height) {
    return {crop(maps.interface_weight, x0, z0, width, height), crop(maps.inverse_weight, x0, z0, width, height)};
}

ImageGrid psf_blur(const ImageGrid& img, const LossConfig& cfg) {
    const ImageGrid lat = convolve_axis(img, psf_kernel(cfg.sigma_psf_lat_px, cfg), true, Pad::mirror);
    return convolve_axis(lat, psf_kernel(cfg.sigma_psf_ax_px, cfg), false, Pad::mirror);
}

ImageGrid psf_blur_adjoint(const ImageGrid& img, const LossConfig& cfg) {
    const ImageGrid ax = convolve_axis_adjoint(img, psf_kernel(cfg.sigma_psf_ax_px, cfg), false);
    return convolve_axis_adjoint(ax, psf_kernel(cfg.sigma_psf_lat_px, cfg), true);
}

double loss_forward(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                    const LossConfig& cfg) {
    check_inputs(output, target, maps);
    const double n = static_cast<double>(output.size());
    double data = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = (output[i] - target[i]) * maps.inverse_weight[i];
        data += d * d;
    }
    double sharp = 0.0;
    if (cfg.lambda != 0.0) {
        const ImageGrid blurred = psf_blur(output, cfg);
        for (std::size_t i = 0; i < output.size(); ++i) {
            const double d = (blurred[i] - target[i]) * maps.interface_weight[i];
            sharp += d * d;
        }
    }
    return data / n + cfg.lambda * (sharp / n);
}

LossValue loss_and_gradient(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                            const LossConfig& cfg) {
    check_inputs(output, target, maps);
    const double n = static_cast<double>(output.size());
    LossValue r{0.0, ImageGrid(output.width(), output.height(), output.dx_mm(), output.dz_mm())};
    double data = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double inv = maps.inverse_weight[i];
        const double d = output[i] - target[i];
        data += (d * inv) * (d * inv);
        r.gradient[i] = 2.0 / n * d * inv * inv;
    }
    double sharp = 0.0;
    if (cfg.lambda != 0.0) {
        const ImageGrid blurred = psf_blur(output, cfg);
        ImageGrid residual(output.width(), output.height(), output.dx_mm(), output.dz_mm());
        for (std::size_t i = 0; i < output.size(); ++i) {
            const double w = maps.interface_weight[i];
            const double d = blurred[i] - target[i];
            sharp += (d * w) * (d * w);
            residual[i] = d * w * w;
        }
        const ImageGrid back = psf_blur_adjoint(residual, cfg);
        for (std::size_t i = 0; i < output.size(); ++i) {
            r.gradient[i] += cfg.lambda * 2.0 / n * back[i];
        }
    }
    r.loss = data / n + cfg.lambda * (sharp / n);
    return r;
}

ImageGrid loss_backward(const ImageGrid& output, const ImageGrid& target, const WeightMaps& maps,
                        const LossConfig& cfg) {
    return loss_and_gradient(output, target, maps, cfg).gradient;
}

} // namespace s2s
