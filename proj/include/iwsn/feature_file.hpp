#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "iwsn/classifier.hpp"
#include "iwsn/ppm.hpp"
#include "iwsn/scattering.hpp"

namespace iwsn {

inline constexpr std::uint64_t kNoLabel = std::numeric_limits<std::uint64_t>::max();

/// Binary feature file layout, every integer a u64 little-endian:
///
///     "IWSNFV01"
///     width height depth basis_id[depth]
///     variant boundary decimate smooth_with decimate_smoothing channel
///     selection_bits vector_length record_count
///     record_count x { label, vector_length x f32 LE }
///
/// Labels index the class list of the pipeline config; kNoLabel marks an
/// unlabelled record.
struct FeatureHeader {
    std::uint64_t width = 0;
    std::uint64_t height = 0;
    ScatterConfig scatter;
    Channel channel = Channel::B;
    std::uint64_t vector_length = 0;
    std::uint64_t record_count = 0;

    friend bool operator==(const FeatureHeader&, const FeatureHeader&) = default;
};

/// Streams records to disk and patches the record count on close().
class FeatureWriter {
public:
    FeatureWriter(const std::string& path, FeatureHeader header);
    ~FeatureWriter();
    FeatureWriter(const FeatureWriter&) = delete;
    FeatureWriter& operator=(const FeatureWriter&) = delete;

    void append(std::span<const float> values, std::uint64_t label);
    void close();
    std::uint64_t records() const noexcept { return header_.record_count; }

private:
    std::string path_;
    FeatureHeader header_;
    std::ofstream out_;
    std::streampos count_pos_{};
    bool closed_ = false;
};

struct FeatureFile {
    FeatureHeader header;
    std::vector<std::uint64_t> labels;
    std::vector<float> values;  // record_count x vector_length

    std::span<const float> row(std::size_t i) const noexcept {
        return {values.data() + i * header.vector_length, static_cast<std::size_t>(header.vector_length)};
    }
};

FeatureFile read_feature_file(const std::string& path);

/// Features widened to double for the classifier. Unlabelled records are
/// rejected.
Dataset to_dataset(const FeatureFile& file);

}  // namespace iwsn
