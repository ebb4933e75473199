#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iwsn/image.hpp"
#include "iwsn/wavelet_bank.hpp"

namespace iwsn {

enum class Boundary : std::uint8_t { symmetric = 0, periodic = 1 };
enum class Variant : std::uint8_t { classic = 0, improved = 1 };
// Which level's scale function smooths U_m into S_m in the improved variant.
enum class SmoothWith : std::uint8_t { first = 0, last = 1 };

std::string_view boundary_name(Boundary b) noexcept;
std::string_view variant_name(Variant v) noexcept;
std::string_view smooth_with_name(SmoothWith s) noexcept;
Boundary parse_boundary(std::string_view s);
Variant parse_variant(std::string_view s);
SmoothWith parse_smooth_with(std::string_view s);

/// Output selection bitmask. Bit 0 is S0, bit k is U_k, bit 32 + k is S_k.
class Selection {
public:
    static constexpr int kMaxDepth = 31;

    constexpr Selection() = default;
    constexpr explicit Selection(std::uint64_t bits) : bits_(bits) {}

    static Selection s0() { return Selection(1); }
    static Selection u(int level) { return Selection(std::uint64_t{1} << level); }
    static Selection s(int level) { return Selection(std::uint64_t{1} << (32 + level)); }
    /// U_1 .. U_depth.
    static Selection modulus_levels(int depth);

    /// Comma-separated list such as "S0,U1,U2,U3".
    static Selection parse(std::string_view text);
    std::string to_string() const;

    bool has_s0() const noexcept { return bits_ & 1u; }
    bool has_u(int level) const noexcept { return (bits_ >> level) & 1u; }
    bool has_s(int level) const noexcept { return (bits_ >> (32 + level)) & 1u; }
    bool empty() const noexcept { return bits_ == 0; }
    /// Largest level index referenced by any selected U or S plane.
    int max_level() const noexcept;
    std::uint64_t bits() const noexcept { return bits_; }

    Selection operator|(Selection o) const noexcept { return Selection(bits_ | o.bits_); }
    friend bool operator==(Selection, Selection) = default;

private:
    std::uint64_t bits_ = 0;
};

struct ScatterConfig {
    int depth = 3;
    std::vector<Basis> level_bases{Basis::bior1_1, Basis::bior2_2, Basis::bior1_3};
    Boundary boundary = Boundary::symmetric;
    int decimate = 2;
    Variant variant = Variant::improved;
    SmoothWith smooth_with = SmoothWith::first;
    // Stride applied by the smoothing convolution that turns U_m into S_m.
    bool decimate_smoothing = true;
    Selection selection = Selection::modulus_levels(3);

    /// Throws DataError when the config is internally inconsistent.
    void validate() const;

    friend bool operator==(const ScatterConfig&, const ScatterConfig&) = default;
};

struct ScatterOutput {
    ImagePlane s0;
    std::vector<ImagePlane> u_levels;  // U_1 .. U_depth
    std::vector<ImagePlane> s_levels;  // S_1 .. S_depth
    ScatterConfig config_echo;
};

/// Strided 2D correlation of `plane` with a separable kernel.
///
/// out[i][j] = sum_{a,b} taps[a][b] * ext(i*d + a - o, j*d + b - o) where o is
/// the kernel origin and ext the boundary-extended input. Output dimensions are
/// ceil(in / d) per axis; the first output sample is aligned with input index 0.
/// The extension reaches at most one plane length past either edge; larger
/// kernels are rejected with DataError.
ImagePlane conv2_decimated(const ImagePlane& plane, const Kernel2D& kernel, Boundary boundary,
                           int decimate);

/// In-place element-wise absolute value.
void modulus(ImagePlane& plane) noexcept;

ScatterOutput scatter_classic(const ImagePlane& plane, const ScatterConfig& config);
ScatterOutput scatter_improved(const ImagePlane& plane, const ScatterConfig& config);
/// Dispatches on config.variant.
ScatterOutput scatter(const ImagePlane& plane, const ScatterConfig& config);

/// Like scatter() but only computes the planes `selection` needs; unselected
/// planes in the result are left empty. Selected planes are bit-identical to
/// the ones scatter() produces.
ScatterOutput scatter_selected(const ImagePlane& plane, const ScatterConfig& config,
                               Selection selection);

/// Selected planes concatenated in the order S0, U1..Um, S1..Sm, each
/// flattened row-major.
std::vector<double> feature_vector(const ScatterOutput& output, Selection selection);

/// Shorthand for feature_vector(scatter_selected(plane, config, config.selection)).
std::vector<double> extract_features(const ImagePlane& plane, const ScatterConfig& config);

struct PlaneShape {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t size() const noexcept { return width * height; }
    friend bool operator==(PlaneShape, PlaneShape) = default;
};

/// Output dimensions of a strided convolution along one axis: ceil(n / d).
constexpr std::size_t decimated_length(std::size_t n, int decimate) noexcept {
    const auto d = static_cast<std::size_t>(decimate);
    return (n + d - 1) / d;
}

/// Shapes of every plane scatter() would produce for a width x height input,
/// without computing anything.
struct ScatterShapes {
    PlaneShape s0;
    std::vector<PlaneShape> u_levels;
    std::vector<PlaneShape> s_levels;
};
ScatterShapes scatter_shapes(std::size_t width, std::size_t height, const ScatterConfig& config);

std::size_t feature_length(std::size_t width, std::size_t height, const ScatterConfig& config);

}  // namespace iwsn
