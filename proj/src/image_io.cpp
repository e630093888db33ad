#include "s2s/image_io.hpp"

#include "s2s/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace s2s {

namespace le {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void Reader::need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
        throw IoError("truncated binary payload");
    }
}

std::uint32_t Reader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
}

std::uint64_t Reader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

void Reader::expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
        throw IoError(std::string("bad magic, expected ") + magic);
    }
    pos_ += 4;
}

} // namespace le

std::vector<std::uint8_t> encode_s2sf(const ImageGrid& img) {
    std::vector<std::uint8_t> out{'S', '2', 'S', 'F'};
    out.reserve(20 + 4 * img.size());
    le::put_u32(out, static_cast<std::uint32_t>(img.width()));
    le::put_u32(out, static_cast<std::uint32_t>(img.height()));
    le::put_f32(out, static_cast<float>(img.dx_mm()));
    le::put_f32(out, static_cast<float>(img.dz_mm()));
    for (double v : img.values()) {
        le::put_f32(out, static_cast<float>(v));
    }
    return out;
}

ImageGrid decode_s2sf(const std::vector<std::uint8_t>& bytes) {
    le::Reader in(bytes);
    in.expect_magic("S2SF");
    const std::uint32_t w = in.u32();
    const std::uint32_t h = in.u32();
    const float dx = in.f32();
    const float dz = in.f32();
    if (w > (1u << 20) || h > (1u << 20)) {
        throw IoError("S2SF dimensions out of range");
    }
    if (in.remaining() != static_cast<std::size_t>(w) * h * 4) {
        throw IoError("S2SF payload size does not match header");
    }
    ImageGrid img(static_cast<int>(w), static_cast<int>(h), dx, dz);
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = in.f32();
    }
    return img;
}

std::vector<std::uint8_t> encode_pgm(const ImageGrid& img) {
    const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.size());
    for (double v : img.values()) {
        const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * c)));
    }
    return out;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
        tok.push_back(static_cast<char>(bytes[pos++]));
    }
    if (tok.empty()) {
        throw IoError("truncated PGM header");
    }
    return tok;
}

int pgm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    const std::string tok = pgm_token(bytes, pos);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) {
            throw IoError("bad PGM header field '" + tok + "'");
        }
        return v;
    } catch (const std::logic_error&) {
        throw IoError("bad PGM header field '" + tok + "'");
    }
}

} // namespace

ImageGrid decode_pgm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (pgm_token(bytes, pos) != "P5") {
        throw IoError("not a binary PGM (P5)");
    }
    const int w = pgm_int(bytes, pos);
    const int h = pgm_int(bytes, pos);
    const int maxval = pgm_int(bytes, pos);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw IoError("unsupported PGM header");
    }
    ++pos; // single whitespace after maxval
    if (bytes.size() < pos + static_cast<std::size_t>(w) * h) {
        throw IoError("truncated PGM payload");
    }
    ImageGrid img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = static_cast<double>(bytes[pos + i]) / maxval;
    }
    return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed for '" + path.string() + "'");
    }
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot create '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    write_file(tmp, std::vector<std::uint8_t>(text.begin(), text.end()));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
    }
}

ImageFormat sniff_format(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "S2SF", 4) == 0) {
        return ImageFormat::s2sf;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        return ImageFormat::pgm;
    }
    throw IoError("unrecognized image format");
}

ImageGrid read_image(const std::filesystem::path& path, ImageFormat* detected) {
    const auto bytes = read_file(path);
    const ImageFormat fmt = sniff_format(bytes);
    if (detected != nullptr) {
        *detected = fmt;
    }
    return fmt == ImageFormat::s2sf ? decode_s2sf(bytes) : decode_pgm(bytes);
}

void write_image(const std::filesystem::path& path, const ImageGrid& img, ImageFormat format) {
    write_file(path, format == ImageFormat::s2sf ? encode_s2sf(img) : encode_pgm(img));
}

} // namespace s2s
