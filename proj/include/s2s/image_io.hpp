#pragma once

#include "s2s/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace s2s {

enum class ImageFormat { s2sf, pgm };

/// Raw float exchange format: "S2SF", u32 width, u32 height, f32 dx_mm, f32 dz_mm,
/// then width*height f32 values, row-major, all little-endian.
std::vector<std::uint8_t> encode_s2sf(const ImageGrid& img);
ImageGrid decode_s2sf(const std::vector<std::uint8_t>& bytes);

/// 8-bit binary PGM (P5, maxval 255), value = round(255 * clamp(v, 0, 1)).
std::vector<std::uint8_t> encode_pgm(const ImageGrid& img);
ImageGrid decode_pgm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
/// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Format from the file's leading bytes.
ImageFormat sniff_format(const std::vector<std::uint8_t>& bytes);
ImageGrid read_image(const std::filesystem::path& path, ImageFormat* detected = nullptr);
void write_image(const std::filesystem::path& path, const ImageGrid& img, ImageFormat format);

inline ImageGrid read_s2sf(const std::filesystem::path& path) { return decode_s2sf(read_file(path)); }
inline void write_s2sf(const std::filesystem::path& path, const ImageGrid& img) { write_file(path, encode_s2sf(img)); }
inline void write_pgm(const std::filesystem::path& path, const ImageGrid& img) { write_file(path, encode_pgm(img)); }

// Little-endian primitives, shared with the checkpoint codec.
namespace le {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    void expect_magic(const char (&magic)[5]);
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const;
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};
} // namespace le

} // namespace s2s
