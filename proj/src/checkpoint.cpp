#include "s2s/errors.hpp"
#include "s2s/image_io.hpp"
#include "s2s/net.hpp"

#include <string>
#include <system_error>

namespace s2s::net {

namespace {

void put_values(std::vector<std::uint8_t>& out, const std::vector<float>& v) {
    for (float f : v) {
        le::put_f32(out, f);
    }
}

void get_values(le::Reader& in, std::vector<float>& v) {
    for (float& f : v) {
        f = in.f32();
    }
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams<float>& params) {
    if (params.layers.size() != params.adam_m.size() || params.layers.size() != params.adam_v.size()) {
        throw ShapeError("checkpoint: Adam moments do not match the layer list");
    }
    std::vector<std::uint8_t> out{'S', '2', 'S', 'N'};
    le::put_u32(out, static_cast<std::uint32_t>(params.spec.depth));
    le::put_u32(out, static_cast<std::uint32_t>(params.spec.base_channels));
    le::put_u32(out, static_cast<std::uint32_t>(params.spec.kernel_size));
    le::put_u64(out, params.step_count);
    le::put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const auto& l = params.layers[i];
        le::put_u32(out, static_cast<std::uint32_t>(l.out_channels));
        le::put_u32(out, static_cast<std::uint32_t>(l.in_channels));
        le::put_u32(out, static_cast<std::uint32_t>(l.kernel_size));
        put_values(out, l.weight);
        put_values(out, l.bias);
        put_values(out, params.adam_m[i].weight);
        put_values(out, params.adam_m[i].bias);
        put_values(out, params.adam_v[i].weight);
        put_values(out, params.adam_v[i].bias);
    }
    return out;
}

NetworkParams<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    le::Reader in(bytes);
    in.expect_magic("S2SN");
    NetworkParams<float> p;
    p.spec.depth = static_cast<int>(in.u32());
    p.spec.base_channels = static_cast<int>(in.u32());
    p.spec.kernel_size = static_cast<int>(in.u32());
    try {
        p.spec.validate();
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint: invalid network spec: ") + e.what());
    }
    p.step_count = in.u64();
    const std::uint32_t count = in.u32();
    if (count != static_cast<std::uint32_t>(p.spec.layer_count())) {
        throw IoError("checkpoint: layer count " + std::to_string(count) + " does not match spec");
    }
    const auto reference = init_params<float>(p.spec, 0);
    for (std::uint32_t i = 0; i < count; ++i) {
        const int out = static_cast<int>(in.u32());
        const int inc = static_cast<int>(in.u32());
        const int k = static_cast<int>(in.u32());
        ConvLayer<float> layer(out, inc, k);
        if (!layer.same_shape(reference.layers[i])) {
            throw IoError("checkpoint: layer " + std::to_string(i) + " has an unexpected shape");
        }
        ConvLayer<float> m = layer;
        ConvLayer<float> v = layer;
        get_values(in, layer.weight);
        get_values(in, layer.bias);
        get_values(in, m.weight);
        get_values(in, m.bias);
        get_values(in, v.weight);
        get_values(in, v.bias);
        p.layers.push_back(std::move(layer));
        p.adam_m.push_back(std::move(m));
        p.adam_v.push_back(std::move(v));
    }
    if (in.remaining() != 0) {
        throw IoError("checkpoint: trailing bytes");
    }
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams<float>& params) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    write_file(tmp, encode_checkpoint(params));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
    }
}

NetworkParams<float> load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

} // namespace s2s::net
