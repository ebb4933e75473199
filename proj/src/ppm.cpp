#include "iwsn/ppm.hpp"

#include <cctype>
#include <string>

#include "iwsn/bytes.hpp"
#include "iwsn/error.hpp"

namespace iwsn {
namespace {

class HeaderParser {
public:
    explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

    std::size_t pos() const noexcept { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint64_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::uint64_t v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > (1u << 30)) throw DataError(std::string("image header: ") + what + " too large at byte offset " + std::to_string(start));
            ++pos_;
        }
        if (pos_ == start) {
            throw DataError(std::string("image header: expected ") + what + " at byte offset " + std::to_string(start));
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
            throw DataError("image header: expected whitespace before raster at byte offset " + std::to_string(pos_));
        }
        ++pos_;
    }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 2;
};

std::string printable_magic(std::span<const std::uint8_t> bytes) {
    std::string out;
    for (std::size_t i = 0; i < bytes.size() && i < 4; ++i) {
        const auto c = bytes[i];
        if (std::isprint(c)) {
            out += static_cast<char>(c);
        } else {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02X", c);
            out += buf;
        }
    }
    return out;
}

}  // namespace

Channel parse_channel(std::string_view s) {
    if (s == "R" || s == "r") return Channel::R;
    if (s == "G" || s == "g") return Channel::G;
    if (s == "B" || s == "b") return Channel::B;
    throw DataError("unknown colour channel '" + std::string(s) + "' (expected R, G or B)");
}

char channel_name(Channel c) noexcept { return "RGB"[static_cast<int>(c)]; }

ImagePlane decode_image_channel(std::span<const std::uint8_t> bytes, Channel channel) {
    if (bytes.size() < 2) throw DataError("image: truncated at byte offset " + std::to_string(bytes.size()));
    const bool is_p6 = bytes[0] == 'P' && bytes[1] == '6';
    const bool is_p5 = bytes[0] == 'P' && bytes[1] == '5';
    if (!is_p6 && !is_p5) {
        const bool png = bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G';
        throw DataError("unsupported image format (magic '" + printable_magic(bytes) + "')" +
                        (png ? "; PNG decoding is not enabled in this build" : "; expected P5 or P6"));
    }
    HeaderParser hp(bytes);
    const auto width = hp.number("width");
    const auto height = hp.number("height");
    const std::size_t maxval_at = hp.pos();
    const auto maxval = hp.number("maxval");
    if (width == 0 || height == 0) throw DataError("image header: zero dimension");
    if (maxval == 0 || maxval > 255) {
        throw DataError("image header: unsupported maxval " + std::to_string(maxval) + " near byte offset " +
                        std::to_string(maxval_at));
    }
    hp.single_space();

    const std::size_t comps = is_p6 ? 3 : 1;
    const std::size_t need = width * height * comps;
    const std::size_t start = hp.pos();
    if (bytes.size() - start < need) {
        throw DataError("image raster truncated at byte offset " + std::to_string(bytes.size()) + " (expected " +
                        std::to_string(need) + " bytes from offset " + std::to_string(start) + ")");
    }
    const std::size_t off = is_p6 ? static_cast<std::size_t>(channel) : 0;
    const double scale = 1.0 / static_cast<double>(maxval);
    std::vector<double> values(width * height);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto v = bytes[start + i * comps + off];
        if (v > maxval) {
            throw DataError("image sample " + std::to_string(v) + " exceeds maxval at byte offset " +
                            std::to_string(start + i * comps + off));
        }
        values[i] = static_cast<double>(v) * scale;
    }
    return ImagePlane(width, height, std::move(values));
}

ImagePlane load_image_channel(const std::string& path, Channel channel) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image_channel(bytes, channel);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

void write_ppm(const std::string& path, const RgbImage& image) { write_file_bytes(path, encode_ppm(image)); }

}  // namespace iwsn
