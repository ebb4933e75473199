#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iwsn {

struct ScatterConfig;

namespace flops {

/// Operation counts are exact integers; anything past 2^63 - 1 is rejected.
using Count = std::uint64_t;

/// floor((n - D(K-1) - 1 + 2P) / S) + 1. Throws DataError if the result is < 1.
std::int64_t conv_out_size(std::int64_t n, std::int64_t k, std::int64_t padding,
                           std::int64_t stride, std::int64_t dilation = 1);

/// M1 * M2 * (K^2 * C_in + [bias]) * C_out
Count conv_flops(std::int64_t m1, std::int64_t m2, std::int64_t k, std::int64_t c_in,
                 std::int64_t c_out, bool bias);
/// (I + [bias]) * O
Count fc_flops(std::int64_t inputs, std::int64_t outputs, bool bias);
/// C_in * W_in * H_in * K^2, counted over the pooling input.
Count avgpool_flops(std::int64_t c_in, std::int64_t w_in, std::int64_t h_in, std::int64_t k);
/// Max pooling has no multiply-add work.
Count maxpool_flops() noexcept;
Count relu_flops(std::int64_t elements);

enum class LayerKind { conv2d, avgpool, maxpool, fc, relu };

std::string_view layer_kind_name(LayerKind kind) noexcept;

/// One layer of a NetworkSpec. Zero-valued optional sizes are inferred from
/// the incoming shape: c_out defaults to the input channel count, fc inputs to
/// the flattened input size, relu elements to the input size.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::int64_t k = 1;
    std::int64_t padding = 0;
    std::int64_t stride = 1;
    std::int64_t dilation = 1;
    std::int64_t c_out = 0;
    std::int64_t inputs = 0;
    std::int64_t outputs = 0;
    std::int64_t elements = 0;
    bool bias = false;
};

struct NetworkSpec {
    std::int64_t width = 0;   // N
    std::int64_t height = 0;  // L
    std::int64_t channels = 1;
    std::vector<LayerSpec> layers;
};

/// Parses the plain-text layer list:
///
///     input width=1280 height=720 channels=3
///     conv2d k=7 p=0 s=1 d=1 out=3 bias=1
///     relu
///     avgpool k=5
///     fc out=128 bias=1
///
/// Blank lines and text after '#' are ignored. Throws DataError with the line
/// number on malformed input.
NetworkSpec parse_network_spec(std::istream& in);
NetworkSpec parse_network_spec_file(const std::string& path);

struct LayerFlops {
    std::size_t index = 0;
    std::string label;
    Count flops = 0;
    std::int64_t out_channels = 0;
    std::int64_t out_width = 0;
    std::int64_t out_height = 0;
};

struct FlopsReport {
    std::vector<LayerFlops> per_layer;
    Count total = 0;
    std::optional<double> theoretical_time_s;
};

/// Threads shapes through the layer list and counts every layer.
FlopsReport network_flops(const NetworkSpec& spec);

/// total / peak_flops in seconds. Throws DataError for a non-positive peak.
double theoretical_time(const FlopsReport& report, double peak_flops);

/// Counts the scattering front end plus MLP for a width x height plane.
///
/// Every strided convolution the feature extraction executes is counted as a
/// single-channel conv layer with the kernel's true side length and no bias;
/// every modulus adds one op per element; the MLP adds (I + 1) * O per dense
/// layer and one op per hidden activation.
FlopsReport pipeline_flops(std::int64_t width, std::int64_t height, const ScatterConfig& config,
                           const std::vector<std::size_t>& mlp_dims);

/// Plain-text table, one layer per line, then the total.
std::string format_report(const FlopsReport& report);
std::string report_csv(const FlopsReport& report);

}  // namespace flops
}  // namespace iwsn
