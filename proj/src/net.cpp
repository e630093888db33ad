#include "s2s/net.hpp"

#include "s2s/errors.hpp"
#include "s2s/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace s2s::net {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;

constexpr std::size_t kColBudget = std::size_t{1} << 22; // elements per im2col chunk

template <typename T>
void im2col(const Tensor<T>& x, int k, int r0, int r1, T* col) {
    const int pad = k / 2;
    const int w = x.width;
    const int h = x.height;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * w;
    for (int c = 0; c < x.channels; ++c) {
        const T* src = x.data.data() + c * x.plane();
        for (int u = 0; u < k; ++u) {
            for (int v = 0; v < k; ++v) {
                T* dst = col + static_cast<std::size_t>((c * k + u) * k + v) * n;
                const int x_lo = std::max(0, pad - v);
                const int x_hi = std::min(w, w + pad - v);
                for (int y = r0; y < r1; ++y) {
                    T* out = dst + static_cast<std::size_t>(y - r0) * w;
                    const int sy = y + u - pad;
                    if (sy < 0 || sy >= h || x_lo >= x_hi) {
                        std::fill(out, out + w, T(0));
                        continue;
                    }
                    std::fill(out, out + x_lo, T(0));
                    std::memcpy(out + x_lo, src + static_cast<std::size_t>(sy) * w + (x_lo + v - pad),
                                sizeof(T) * static_cast<std::size_t>(x_hi - x_lo));
                    std::fill(out + x_hi, out + w, T(0));
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, int k, int r0, int r1, Tensor<T>& gx) {
    const int pad = k / 2;
    const int w = gx.width;
    const int h = gx.height;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * w;
    for (int c = 0; c < gx.channels; ++c) {
        T* dst = gx.data.data() + c * gx.plane();
        for (int u = 0; u < k; ++u) {
            for (int v = 0; v < k; ++v) {
                const T* src = col + static_cast<std::size_t>((c * k + u) * k + v) * n;
                const int x_lo = std::max(0, pad - v);
                const int x_hi = std::min(w, w + pad - v);
                for (int y = r0; y < r1; ++y) {
                    const int sy = y + u - pad;
                    if (sy < 0 || sy >= h) {
                        continue;
                    }
                    const T* in = src + static_cast<std::size_t>(y - r0) * w;
                    T* out = dst + static_cast<std::size_t>(sy) * w + (v - pad);
                    for (int xx = x_lo; xx < x_hi; ++xx) {
                        out[xx] += in[xx];
                    }
                }
            }
        }
    }
}

int chunk_rows(int ck2, int w, int h) {
    const std::size_t per_row = static_cast<std::size_t>(ck2) * w;
    return static_cast<int>(std::clamp<std::size_t>(kColBudget / std::max<std::size_t>(per_row, 1), 1, h));
}

template <typename T>
void check_conv_shapes(const Tensor<T>& x, const ConvLayer<T>& layer) {
    if (x.channels != layer.in_channels) {
        throw ShapeError("conv2d: input has " + std::to_string(x.channels) + " channels, layer expects " +
                         std::to_string(layer.in_channels));
    }
    if (layer.kernel_size % 2 == 0 || layer.kernel_size < 1) {
        throw ShapeError("conv2d: kernel size must be odd");
    }
    if (layer.weight.size() !=
            static_cast<std::size_t>(layer.out_channels) * layer.in_channels * layer.kernel_size * layer.kernel_size ||
        layer.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
        throw ShapeError("conv2d: inconsistent layer storage");
    }
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
    return std::all_of(v.begin(), v.end(), [](T a) { return std::isfinite(a); });
}

} // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvLayer<T>& layer) {
    check_conv_shapes(x, layer);
    const int k = layer.kernel_size;
    const int ck2 = layer.in_channels * k * k;
    const int w = x.width;
    const int h = x.height;
    Tensor<T> y(layer.out_channels, h, w);
    if (h == 0 || w == 0) {
        return y;
    }
    const int rows = chunk_rows(ck2, w, h);
    std::vector<T> col(static_cast<std::size_t>(ck2) * rows * w);
    Eigen::Map<const MatR<T>> wm(layer.weight.data(), layer.out_channels, ck2);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(layer.bias.data(), layer.out_channels);
    const auto plane = static_cast<Eigen::Index>(y.plane());
    for (int r0 = 0; r0 < h; r0 += rows) {
        const int r1 = std::min(h, r0 + rows);
        const auto n = static_cast<Eigen::Index>(r1 - r0) * w;
        im2col(x, k, r0, r1, col.data());
        Eigen::Map<const MatR<T>> cm(col.data(), ck2, n);
        Eigen::Map<MatR<T>, 0, Stride> ym(y.data.data() + static_cast<std::size_t>(r0) * w, layer.out_channels, n,
                                           Stride(plane));
        ym.noalias() = wm * cm;
        ym.colwise() += bias;
    }
    return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvLayer<T>& layer, const Tensor<T>& grad_y,
                             bool want_grad_x) {
    check_conv_shapes(x, layer);
    if (grad_y.channels != layer.out_channels || grad_y.height != x.height || grad_y.width != x.width) {
        throw ShapeError("conv2d_backward: grad_y shape does not match forward output");
    }
    const int k = layer.kernel_size;
    const int ck2 = layer.in_channels * k * k;
    const int w = x.width;
    const int h = x.height;
    ConvGrads<T> g;
    g.grad_weight.assign(layer.weight.size(), T(0));
    g.grad_bias.assign(layer.bias.size(), T(0));
    if (want_grad_x) {
        g.grad_x = Tensor<T>(x.channels, h, w);
    }
    if (h == 0 || w == 0) {
        return g;
    }
    const int rows = chunk_rows(ck2, w, h);
    std::vector<T> col(static_cast<std::size_t>(ck2) * rows * w);
    std::vector<T> gcol(want_grad_x ? col.size() : 0);
    Eigen::Map<const MatR<T>> wm(layer.weight.data(), layer.out_channels, ck2);
    Eigen::Map<MatR<T>> gw(g.grad_weight.data(), layer.out_channels, ck2);
    const auto plane = static_cast<Eigen::Index>(grad_y.plane());
    for (int r0 = 0; r0 < h; r0 += rows) {
        const int r1 = std::min(h, r0 + rows);
        const auto n = static_cast<Eigen::Index>(r1 - r0) * w;
        im2col(x, k, r0, r1, col.data());
        Eigen::Map<const MatR<T>> cm(col.data(), ck2, n);
        Eigen::Map<const MatR<T>, 0, Stride> gy(grad_y.data.data() + static_cast<std::size_t>(r0) * w,
                                                 layer.out_channels, n, Stride(plane));
        gw.noalias() += gy * cm.transpose();
        // Sequential sum: Eigen's vectorized redux starts at the first aligned element,
        // so its rounding would depend on the buffer address.
        for (int o = 0; o < layer.out_channels; ++o) {
            const T* row = gy.row(o).data();
            g.grad_bias[static_cast<std::size_t>(o)] += std::accumulate(row, row + n, T(0));
        }
        if (want_grad_x) {
            Eigen::Map<MatR<T>> gc(gcol.data(), ck2, n);
            gc.noalias() = wm.transpose() * gy;
            col2im_add(gcol.data(), k, r0, r1, g.grad_x);
        }
    }
    return g;
}

template <typename T>
std::pair<Tensor<T>, std::vector<std::uint32_t>> maxpool2(const Tensor<T>& x) {
    if (x.height % 2 != 0 || x.width % 2 != 0) {
        throw ShapeError("maxpool2: spatial dimensions must be even");
    }
    Tensor<T> y(x.channels, x.height / 2, x.width / 2);
    std::vector<std::uint32_t> arg(y.size());
    std::size_t o = 0;
    for (int c = 0; c < x.channels; ++c) {
        for (int i = 0; i < y.height; ++i) {
            for (int j = 0; j < y.width; ++j, ++o) {
                const std::size_t base = c * x.plane() + static_cast<std::size_t>(2 * i) * x.width + 2 * j;
                const std::size_t cand[4] = {base, base + 1, base + x.width, base + x.width + 1};
                std::size_t best = cand[0];
                for (int t = 1; t < 4; ++t) {
                    if (x.data[cand[t]] > x.data[best]) {
                        best = cand[t];
                    }
                }
                y.data[o] = x.data[best];
                arg[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return {std::move(y), std::move(arg)};
}

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_y, int in_height,
                            int in_width) {
    if (argmax.size() != grad_y.size() || in_height != 2 * grad_y.height || in_width != 2 * grad_y.width) {
        throw ShapeError("maxpool2_backward: shape mismatch");
    }
    Tensor<T> gx(grad_y.channels, in_height, in_width);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        gx.data[argmax[i]] += grad_y.data[i];
    }
    return gx;
}

template <typename T>
Tensor<T> upsample2_nearest(const Tensor<T>& x) {
    Tensor<T> y(x.channels, 2 * x.height, 2 * x.width);
    for (int c = 0; c < x.channels; ++c) {
        for (int i = 0; i < y.height; ++i) {
            for (int j = 0; j < y.width; ++j) {
                y.at(c, i, j) = x.at(c, i / 2, j / 2);
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_y) {
    if (grad_y.height % 2 != 0 || grad_y.width % 2 != 0) {
        throw ShapeError("upsample2_backward: spatial dimensions must be even");
    }
    Tensor<T> gx(grad_y.channels, grad_y.height / 2, grad_y.width / 2);
    for (int c = 0; c < grad_y.channels; ++c) {
        for (int i = 0; i < grad_y.height; ++i) {
            for (int j = 0; j < grad_y.width; ++j) {
                gx.at(c, i / 2, j / 2) += grad_y.at(c, i, j);
            }
        }
    }
    return gx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError("concat_channels: spatial mismatch");
    }
    Tensor<T> y(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& g, int first_channels) {
    if (first_channels < 0 || first_channels > g.channels) {
        throw ShapeError("split_channels: bad channel split");
    }
    Tensor<T> a(first_channels, g.height, g.width);
    Tensor<T> b(g.channels - first_channels, g.height, g.width);
    std::copy(g.data.begin(), g.data.begin() + static_cast<std::ptrdiff_t>(a.size()), a.data.begin());
    std::copy(g.data.begin() + static_cast<std::ptrdiff_t>(a.size()), g.data.end(), b.data.begin());
    return {std::move(a), std::move(b)};
}

template <typename T>
void leaky_relu_inplace(Tensor<T>& x) {
    const T slope = static_cast<T>(kLeakySlope);
    for (auto& v : x.data) {
        v = v >= T(0) ? v : slope * v;
    }
}

template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad) {
    const T slope = static_cast<T>(kLeakySlope);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(out.data[i] >= T(0))) {
            grad.data[i] *= slope;
        }
    }
}

void NetworkSpec::validate() const {
    if (depth < 0 || depth > 8) {
        throw ConfigError("network depth must lie in [0, 8]");
    }
    if (base_channels < 1) {
        throw ConfigError("network base_channels must be >= 1");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ConfigError("network kernel_size must be odd");
    }
}

template <typename T>
std::size_t NetworkParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.weight.size() + l.bias.size();
    }
    return n;
}

namespace {

std::vector<std::pair<int, int>> layer_channels(const NetworkSpec& spec) {
    const int b = spec.base_channels;
    std::vector<std::pair<int, int>> io; // (out, in)
    for (int l = 0; l < spec.depth; ++l) {
        io.emplace_back(b, l == 0 ? 1 : b);
        io.emplace_back(b, b);
    }
    io.emplace_back(b, spec.depth == 0 ? 1 : b);
    io.emplace_back(b, b);
    for (int l = 0; l < spec.depth; ++l) {
        io.emplace_back(b, 2 * b);
        io.emplace_back(b, b);
    }
    io.emplace_back(1, b);
    return io;
}

template <typename T>
std::vector<ConvLayer<T>> zero_layers(const NetworkSpec& spec) {
    std::vector<ConvLayer<T>> layers;
    const auto io = layer_channels(spec);
    for (std::size_t i = 0; i < io.size(); ++i) {
        const int k = i + 1 == io.size() ? 1 : spec.kernel_size;
        layers.emplace_back(io[i].first, io[i].second, k);
    }
    return layers;
}

} // namespace

template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    NetworkParams<T> p;
    p.spec = spec;
    p.layers = zero_layers<T>(spec);
    p.adam_m = zero_layers<T>(spec);
    p.adam_v = zero_layers<T>(spec);
    Rng rng(seed);
    for (auto& l : p.layers) {
        const double k2 = static_cast<double>(l.kernel_size) * l.kernel_size;
        const double limit = std::sqrt(6.0 / (l.in_channels * k2 + l.out_channels * k2));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : l.weight) {
            w = static_cast<T>(dist(rng));
        }
    }
    return p;
}

template <typename T>
Gradients<T> zero_gradients(const NetworkParams<T>& params) {
    return zero_layers<T>(params.spec);
}

template <typename U, typename T>
NetworkParams<U> cast_params(const NetworkParams<T>& params) {
    auto cast_layers = [](const std::vector<ConvLayer<T>>& src) {
        std::vector<ConvLayer<U>> dst;
        for (const auto& l : src) {
            ConvLayer<U> d(l.out_channels, l.in_channels, l.kernel_size);
            std::transform(l.weight.begin(), l.weight.end(), d.weight.begin(), [](T v) { return static_cast<U>(v); });
            std::transform(l.bias.begin(), l.bias.end(), d.bias.begin(), [](T v) { return static_cast<U>(v); });
            dst.push_back(std::move(d));
        }
        return dst;
    };
    NetworkParams<U> out;
    out.spec = params.spec;
    out.layers = cast_layers(params.layers);
    out.adam_m = cast_layers(params.adam_m);
    out.adam_v = cast_layers(params.adam_v);
    out.step_count = params.step_count;
    return out;
}

namespace {

template <typename T>
void check_params(const NetworkParams<T>& params) {
    if (static_cast<int>(params.layers.size()) != params.spec.layer_count()) {
        throw ShapeError("network parameters do not match spec layer count");
    }
}

template <typename T>
Tensor<T> conv_act(const NetworkParams<T>& params, std::size_t idx, Tensor<T> in, ForwardCache<T>* cache,
                   bool activate = true) {
    Tensor<T> out = conv2d_forward(in, params.layers[idx]);
    if (activate) {
        leaky_relu_inplace(out);
    }
    if (cache != nullptr) {
        cache->conv_in[idx] = std::move(in);
        cache->conv_out[idx] = out;
    }
    return out;
}

} // namespace

template <typename T>
Tensor<T> forward(const NetworkParams<T>& params, const Tensor<T>& x, ForwardCache<T>* cache) {
    check_params(params);
    const int depth = params.spec.depth;
    if (x.channels != 1) {
        throw ShapeError("network input must have one channel");
    }
    if (x.height % params.spec.size_multiple() != 0 || x.width % params.spec.size_multiple() != 0) {
        throw ShapeError("network input dimensions must be divisible by 2^depth");
    }
    if (cache != nullptr) {
        cache->conv_in.assign(params.layers.size(), {});
        cache->conv_out.assign(params.layers.size(), {});
        cache->pool_argmax.assign(static_cast<std::size_t>(depth), {});
        cache->pool_in_size.assign(static_cast<std::size_t>(depth), {});
    }
    std::size_t idx = 0;
    std::vector<Tensor<T>> skips(static_cast<std::size_t>(depth));
    Tensor<T> cur = x;
    for (int l = 0; l < depth; ++l) {
        cur = conv_act(params, idx++, std::move(cur), cache);
        cur = conv_act(params, idx++, std::move(cur), cache);
        skips[static_cast<std::size_t>(l)] = cur;
        auto [pooled, arg] = maxpool2(cur);
        if (cache != nullptr) {
            cache->pool_argmax[static_cast<std::size_t>(l)] = std::move(arg);
            cache->pool_in_size[static_cast<std::size_t>(l)] = {cur.height, cur.width};
        }
        cur = std::move(pooled);
    }
    cur = conv_act(params, idx++, std::move(cur), cache);
    cur = conv_act(params, idx++, std::move(cur), cache);
    for (int l = depth - 1; l >= 0; --l) {
        Tensor<T> cat = concat_channels(upsample2_nearest(cur), skips[static_cast<std::size_t>(l)]);
        skips[static_cast<std::size_t>(l)] = {};
        cur = conv_act(params, idx++, std::move(cat), cache);
        cur = conv_act(params, idx++, std::move(cur), cache);
    }
    return conv_act(params, idx++, std::move(cur), cache, false);
}

template <typename T>
Gradients<T> backward(const NetworkParams<T>& params, const ForwardCache<T>& cache, const Tensor<T>& grad_out,
                      Tensor<T>* grad_input) {
    check_params(params);
    if (cache.conv_in.size() != params.layers.size()) {
        throw ShapeError("backward: cache does not belong to a training-mode forward pass");
    }
    const int depth = params.spec.depth;
    Gradients<T> grads = zero_gradients(params);
    int idx = static_cast<int>(params.layers.size()) - 1;

    auto conv_back = [&](Tensor<T> g, bool activated, bool want_x) {
        const auto i = static_cast<std::size_t>(idx--);
        if (activated) {
            leaky_relu_backward_inplace(cache.conv_out[i], g);
        }
        auto cg = conv2d_backward(cache.conv_in[i], params.layers[i], g, want_x);
        grads[i].weight = std::move(cg.grad_weight);
        grads[i].bias = std::move(cg.grad_bias);
        return std::move(cg.grad_x);
    };

    const int b = params.spec.base_channels;
    std::vector<Tensor<T>> skip_grads(static_cast<std::size_t>(depth));
    Tensor<T> g = conv_back(grad_out, false, true);
    for (int l = 0; l < depth; ++l) {
        g = conv_back(std::move(g), true, true);
        g = conv_back(std::move(g), true, true);
        auto [g_up, g_skip] = split_channels(g, b);
        skip_grads[static_cast<std::size_t>(l)] = std::move(g_skip);
        g = upsample2_backward(g_up);
    }
    g = conv_back(std::move(g), true, true);
    g = conv_back(std::move(g), true, depth > 0 || grad_input != nullptr);
    for (int l = depth - 1; l >= 0; --l) {
        const auto [ph, pw] = cache.pool_in_size[static_cast<std::size_t>(l)];
        g = maxpool2_backward(cache.pool_argmax[static_cast<std::size_t>(l)], g, ph, pw);
        const auto& sg = skip_grads[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.data[i] += sg.data[i];
        }
        g = conv_back(std::move(g), true, true);
        g = conv_back(std::move(g), true, l > 0 || grad_input != nullptr);
    }
    if (grad_input != nullptr) {
        *grad_input = std::move(g);
    }
    return grads;
}

template <typename T>
Tensor<T> to_tensor(const ImageGrid& img) {
    Tensor<T> t(1, img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) {
        t.data[i] = static_cast<T>(img[i]);
    }
    return t;
}

template <typename T>
ImageGrid to_image(const Tensor<T>& t, double dx_mm, double dz_mm) {
    if (t.channels != 1) {
        throw ShapeError("to_image: tensor must have one channel");
    }
    ImageGrid img(t.width, t.height, dx_mm, dz_mm);
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = static_cast<double>(t.data[i]);
    }
    return img;
}

template <typename T>
ImageGrid infer(const NetworkParams<T>& params, const ImageGrid& img) {
    const int m = params.spec.size_multiple();
    const int w = img.width();
    const int h = img.height();
    const int pw = (w + m - 1) / m * m;
    const int ph = (h + m - 1) / m * m;
    Tensor<T> x(1, ph, pw);
    for (int z = 0; z < ph; ++z) {
        const int sz = reflect_index(z, h);
        for (int xx = 0; xx < pw; ++xx) {
            x.at(0, z, xx) = static_cast<T>(img.at(reflect_index(xx, w), sz));
        }
    }
    const Tensor<T> y = forward(params, x);
    ImageGrid out(w, h, img.dx_mm(), img.dz_mm());
    for (int z = 0; z < h; ++z) {
        for (int xx = 0; xx < w; ++xx) {
            out.at(xx, z) = static_cast<double>(y.at(0, z, xx));
        }
    }
    return out;
}

template <typename T>
void adam_step(NetworkParams<T>& params, const Gradients<T>& grads, double lr, double beta1, double beta2,
               double eps) {
    check_params(params);
    if (grads.size() != params.layers.size()) {
        throw ShapeError("adam_step: gradient layer count mismatch");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(params.layers[i]) || grads[i].weight.size() != params.layers[i].weight.size() ||
            grads[i].bias.size() != params.layers[i].bias.size()) {
            throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(i));
        }
        if (!all_finite(grads[i].weight) || !all_finite(grads[i].bias)) {
            throw DivergenceError("adam_step: non-finite gradient at layer " + std::to_string(i));
        }
    }
    params.step_count += 1;
    const double t = static_cast<double>(params.step_count);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    auto update = [&](std::vector<T>& p, std::vector<T>& m, std::vector<T>& v, const std::vector<T>& g) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            const double mk = beta1 * static_cast<double>(m[k]) + (1.0 - beta1) * gk;
            const double vk = beta2 * static_cast<double>(v[k]) + (1.0 - beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double step = lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps);
            p[k] = static_cast<T>(static_cast<double>(p[k]) - step);
        }
    };
    for (std::size_t i = 0; i < grads.size(); ++i) {
        update(params.layers[i].weight, params.adam_m[i].weight, params.adam_v[i].weight, grads[i].weight);
        update(params.layers[i].bias, params.adam_m[i].bias, params.adam_v[i].bias, grads[i].bias);
    }
}

#define S2S_NET_INSTANTIATE(T)                                                                                   \
    template Tensor<T> conv2d_forward(const Tensor<T>&, const ConvLayer<T>&);                                    \
    template ConvGrads<T> conv2d_backward(const Tensor<T>&, const ConvLayer<T>&, const Tensor<T>&, bool);        \
    template std::pair<Tensor<T>, std::vector<std::uint32_t>> maxpool2(const Tensor<T>&);                         \
    template Tensor<T> maxpool2_backward(const std::vector<std::uint32_t>&, const Tensor<T>&, int, int);          \
    template Tensor<T> upsample2_nearest(const Tensor<T>&);                                                      \
    template Tensor<T> upsample2_backward(const Tensor<T>&);                                                     \
    template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                                      \
    template std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>&, int);                              \
    template void leaky_relu_inplace(Tensor<T>&);                                                                \
    template void leaky_relu_backward_inplace(const Tensor<T>&, Tensor<T>&);                                     \
    template struct NetworkParams<T>;                                                                            \
    template NetworkParams<T> init_params(const NetworkSpec&, std::uint64_t);                                    \
    template Gradients<T> zero_gradients(const NetworkParams<T>&);                                               \
    template Tensor<T> forward(const NetworkParams<T>&, const Tensor<T>&, ForwardCache<T>*);                     \
    template Gradients<T> backward(const NetworkParams<T>&, const ForwardCache<T>&, const Tensor<T>&, Tensor<T>*); \
    template ImageGrid infer(const NetworkParams<T>&, const ImageGrid&);                                         \
    template void adam_step(NetworkParams<T>&, const Gradients<T>&, double, double, double, double);             \
    template Tensor<T> to_tensor(const ImageGrid&);                                                              \
    template ImageGrid to_image(const Tensor<T>&, double, double);

S2S_NET_INSTANTIATE(float)
S2S_NET_INSTANTIATE(double)
#undef S2S_NET_INSTANTIATE

template NetworkParams<float> cast_params(const NetworkParams<double>&);
template NetworkParams<double> cast_params(const NetworkParams<float>&);
template NetworkParams<float> cast_params(const NetworkParams<float>&);
template NetworkParams<double> cast_params(const NetworkParams<double>&);

} // namespace s2s::net
