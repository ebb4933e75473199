#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iwsn/image.hpp"

namespace iwsn {

enum class Channel : std::uint8_t { R = 0, G = 1, B = 2 };

Channel parse_channel(std::string_view s);
char channel_name(Channel c) noexcept;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}
    std::uint8_t* at(std::size_t row, std::size_t col) noexcept { return pixels.data() + 3 * (row * width + col); }
};

/// Decodes binary PPM (P6) or PGM (P5) with maxval <= 255 and returns one
/// channel scaled to [0, 1] by value / maxval. P5 input ignores `channel`.
/// Throws DataError with a byte offset on malformed data, or naming the magic
/// bytes of unsupported formats.
ImagePlane decode_image_channel(std::span<const std::uint8_t> bytes, Channel channel);
ImagePlane load_image_channel(const std::string& path, Channel channel);

std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
void write_ppm(const std::string& path, const RgbImage& image);

}  // namespace iwsn
