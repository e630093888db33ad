#pragma once

#include "s2s/image.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace s2s::net {

/// Single-sample feature map, channel-major (C, H, W).
template <typename T>
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }
    T& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
    T at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
    bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }
};

/// Convolution kernel tensor (out x in x k x k, row-major) with its bias vector.
template <typename T>
struct ConvLayer {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_size = 0;
    std::vector<T> weight;
    std::vector<T> bias;

    ConvLayer() = default;
    ConvLayer(int out, int in, int k)
        : out_channels(out), in_channels(in), kernel_size(k),
          weight(static_cast<std::size_t>(out) * in * k * k, T(0)), bias(static_cast<std::size_t>(out), T(0)) {}
    bool same_shape(const ConvLayer& o) const {
        return out_channels == o.out_channels && in_channels == o.in_channels && kernel_size == o.kernel_size;
    }
};

/// Same-padded (zeros, k/2) 2-D convolution:
/// y[o,i,j] = b[o] + sum_c sum_{u,v} k[o,c,u,v] x_pad[c, i+u, j+v].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvLayer<T>& layer);

template <typename T>
struct ConvGrads {
    Tensor<T> grad_x;
    std::vector<T> grad_weight;
    std::vector<T> grad_bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvLayer<T>& layer, const Tensor<T>& grad_y,
                             bool want_grad_x = true);

/// 2x2 max pooling; ties go to the first element in row-major order.
/// `argmax` holds, per output element, the flat index of the winning input element.
template <typename T>
std::pair<Tensor<T>, std::vector<std::uint32_t>> maxpool2(const Tensor<T>& x);

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_y, int in_height,
                            int in_width);

template <typename T>
Tensor<T> upsample2_nearest(const Tensor<T>& x);

/// Adjoint of nearest upsampling: sums each 2x2 block.
template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_y);

/// Stacks a's channels, then b's.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& g, int first_channels);

inline constexpr double kLeakySlope = 0.1;

template <typename T>
void leaky_relu_inplace(Tensor<T>& x);

/// Gradient through a leaky ReLU given its output (sign of output equals sign of input).
template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad);

/// Encoder-decoder shape. Every level keeps `base_channels` feature maps; decoder
/// convolutions see 2 * base_channels after the skip concatenation.
struct NetworkSpec {
    int depth = 3;
    int base_channels = 32;
    int kernel_size = 3;

    void validate() const;
    int layer_count() const { return 4 * depth + 3; }
    int size_multiple() const { return 1 << depth; }
    bool operator==(const NetworkSpec&) const = default;
};

/// Weights plus Adam moments.
template <typename T>
struct NetworkParams {
    NetworkSpec spec;
    std::vector<ConvLayer<T>> layers;
    std::vector<ConvLayer<T>> adam_m;
    std::vector<ConvLayer<T>> adam_v;
    std::uint64_t step_count = 0;

    std::size_t parameter_count() const;
};

/// Gradient storage with the same layout as `layers`.
template <typename T>
using Gradients = std::vector<ConvLayer<T>>;

/// Uniform +-sqrt(6 / (fan_in + fan_out)) kernels, zero biases.
template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, std::uint64_t seed);

template <typename T>
Gradients<T> zero_gradients(const NetworkParams<T>& params);

template <typename U, typename T>
NetworkParams<U> cast_params(const NetworkParams<T>& params);

/// Activations kept for the backward pass.
template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> conv_in;
    std::vector<Tensor<T>> conv_out;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<std::pair<int, int>> pool_in_size;
};

/// Full encoder/decoder pass. Input is (1, H, W) with H, W divisible by 2^depth.
template <typename T>
Tensor<T> forward(const NetworkParams<T>& params, const Tensor<T>& x, ForwardCache<T>* cache = nullptr);

/// Parameter gradients for dLoss/dOutput = `grad_out`; `grad_input` receives dLoss/dInput when given.
template <typename T>
Gradients<T> backward(const NetworkParams<T>& params, const ForwardCache<T>& cache, const Tensor<T>& grad_out,
                      Tensor<T>* grad_input = nullptr);

/// Inference on an arbitrary-size image: mirror-pads to the next multiple of 2^depth and crops back.
template <typename T>
ImageGrid infer(const NetworkParams<T>& params, const ImageGrid& img);

/// Bias-corrected Adam update; throws DivergenceError on non-finite gradients.
template <typename T>
void adam_step(NetworkParams<T>& params, const Gradients<T>& grads, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

template <typename T>
Tensor<T> to_tensor(const ImageGrid& img);

template <typename T>
ImageGrid to_image(const Tensor<T>& t, double dx_mm = 1.0, double dz_mm = 1.0);

/// Checkpoint: "S2SN", u32 depth, u32 base_channels, u32 kernel_size, u64 step_count, u32 layer count,
/// then per layer u32 out, u32 in, u32 k followed by f32 weight, bias, m_weight, m_bias, v_weight, v_bias.
std::vector<std::uint8_t> encode_checkpoint(const NetworkParams<float>& params);
NetworkParams<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const NetworkParams<float>& params);
NetworkParams<float> load_checkpoint(const std::filesystem::path& path);

} // namespace s2s::net
