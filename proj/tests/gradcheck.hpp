#pragma once

// Finite-difference checks shared by the unit tests and the acceptance binary.

#include "s2s/loss.hpp"
#include "s2s/net.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gradcheck {

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Interface map with an axis-aligned ring and a diagonal segment.
inline s2s::InterfaceMap ring_interfaces(int w, int h) {
    s2s::InterfaceMap m{s2s::ImageGrid(w, h)};
    for (int x = 2; x < w - 3; ++x) {
        m.grid.at(x, 2) = 1.0;
        m.grid.at(x, h - 4) = 1.0;
    }
    for (int z = 2; z < h - 3; ++z) {
        m.grid.at(2, z) = 1.0;
        m.grid.at(w - 4, z) = 1.0;
    }
    for (int k = 0; k < std::min(w, h); ++k) {
        m.grid.at(k, k) = 1.0;
    }
    return m;
}

/// Worst relative error of loss_backward against central differences at `pixels` random pixels.
inline double loss_gradient_error(std::uint64_t seed, int pixels, const s2s::LossConfig& cfg, double eps = 1e-6) {
    const int n = 12;
    const s2s::ImageGrid out = oracle::random_image(n, n, seed);
    const s2s::ImageGrid target = oracle::random_image(n, n, seed + 1000);
    const auto maps = s2s::interface_weight(ring_interfaces(n, n), cfg);
    const s2s::ImageGrid grad = s2s::loss_backward(out, target, maps, cfg);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n * n - 1);
    double worst = 0.0;
    for (int k = 0; k < pixels; ++k) {
        const auto i = static_cast<std::size_t>(pick(rng));
        s2s::ImageGrid plus = out;
        s2s::ImageGrid minus = out;
        plus[i] += eps;
        minus[i] -= eps;
        const double fd =
            (s2s::loss_forward(plus, target, maps, cfg) - s2s::loss_forward(minus, target, maps, cfg)) / (2 * eps);
        worst = std::max(worst, relative_error(grad[i], fd));
    }
    return worst;
}

/// Relative error of the network's reverse-mode gradient against a central-difference
/// directional derivative along a random joint direction in parameters and input.
inline double network_jvp_error(std::uint64_t seed, int depth = 2, int base = 4, int size = 16, double eps = 1e-6) {
    using namespace s2s::net;
    const NetworkSpec spec{depth, base, 3};
    NetworkParams<double> params = init_params<double>(spec, seed);
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Nonzero biases so every code path carries signal.
    for (auto& l : params.layers) {
        for (auto& b : l.bias) {
            b = 0.1 * normal(rng);
        }
    }
    Tensor<double> x(1, size, size);
    Tensor<double> u(1, size, size);
    Tensor<double> g(1, size, size);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x.data[i] = normal(rng);
        u.data[i] = normal(rng);
        g.data[i] = normal(rng);
    }
    std::vector<ConvLayer<double>> v = params.layers;
    for (auto& l : v) {
        for (auto& w : l.weight) {
            w = normal(rng);
        }
        for (auto& b : l.bias) {
            b = normal(rng);
        }
    }
    auto objective = [&](double t) {
        NetworkParams<double> p = params;
        for (std::size_t i = 0; i < p.layers.size(); ++i) {
            for (std::size_t k = 0; k < p.layers[i].weight.size(); ++k) {
                p.layers[i].weight[k] += t * v[i].weight[k];
            }
            for (std::size_t k = 0; k < p.layers[i].bias.size(); ++k) {
                p.layers[i].bias[k] += t * v[i].bias[k];
            }
        }
        Tensor<double> xt = x;
        for (std::size_t k = 0; k < xt.size(); ++k) {
            xt.data[k] += t * u.data[k];
        }
        const Tensor<double> y = forward(p, xt);
        double s = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) {
            s += y.data[k] * g.data[k];
        }
        return s;
    };
    ForwardCache<double> cache;
    forward(params, x, &cache);
    Tensor<double> grad_x;
    const Gradients<double> grads = backward(params, cache, g, &grad_x);
    double analytic = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        for (std::size_t k = 0; k < grads[i].weight.size(); ++k) {
            analytic += grads[i].weight[k] * v[i].weight[k];
        }
        for (std::size_t k = 0; k < grads[i].bias.size(); ++k) {
            analytic += grads[i].bias[k] * v[i].bias[k];
        }
    }
    for (std::size_t k = 0; k < grad_x.size(); ++k) {
        analytic += grad_x.data[k] * u.data[k];
    }
    const double numeric = (objective(eps) - objective(-eps)) / (2 * eps);
    return relative_error(analytic, numeric);
}

} // namespace gradcheck
