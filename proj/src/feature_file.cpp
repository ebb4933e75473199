#include "iwsn/feature_file.hpp"

#include "iwsn/bytes.hpp"
#include "iwsn/error.hpp"

namespace iwsn {
namespace {

constexpr std::string_view kFeatureMagic = "IWSNFV01";

void encode_header(ByteWriter& w, const FeatureHeader& h) {
    w.raw(kFeatureMagic);
    w.u64(h.width);
    w.u64(h.height);
    w.u64(static_cast<std::uint64_t>(h.scatter.depth));
    for (Basis b : h.scatter.level_bases) w.u64(static_cast<std::uint64_t>(b));
    w.u64(static_cast<std::uint64_t>(h.scatter.variant));
    w.u64(static_cast<std::uint64_t>(h.scatter.boundary));
    w.u64(static_cast<std::uint64_t>(h.scatter.decimate));
    w.u64(static_cast<std::uint64_t>(h.scatter.smooth_with));
    w.u64(h.scatter.decimate_smoothing ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(h.channel));
    w.u64(h.scatter.selection.bits());
    w.u64(h.vector_length);
}

template <typename E>
E enum_field(ByteReader& r, std::uint64_t max, const char* what) {
    const std::size_t at = r.offset();
    const std::uint64_t v = r.u64();
    if (v > max) {
        throw DataError("feature file: bad " + std::string(what) + " " + std::to_string(v) + " at byte offset " +
                        std::to_string(at));
    }
    return static_cast<E>(v);
}

}  // namespace

FeatureWriter::FeatureWriter(const std::string& path, FeatureHeader header)
    : path_(path), header_(std::move(header)), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open '" + path + "' for writing");
    header_.scatter.validate();
    header_.record_count = 0;
    ByteWriter w;
    encode_header(w, header_);
    out_.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    count_pos_ = out_.tellp();
    ByteWriter zero;
    zero.u64(0);
    out_.write(reinterpret_cast<const char*>(zero.bytes().data()), 8);
}

FeatureWriter::~FeatureWriter() {
    try {
        close();
    } catch (...) {
    }
}

void FeatureWriter::append(std::span<const float> values, std::uint64_t label) {
    if (closed_) throw DataError("feature writer already closed");
    if (values.size() != header_.vector_length) {
        throw DataError("feature record has " + std::to_string(values.size()) + " values, header declares " +
                        std::to_string(header_.vector_length));
    }
    ByteWriter w;
    w.u64(label);
    for (float v : values) w.f32(v);
    out_.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    if (!out_) throw DataError("failed writing '" + path_ + "'");
    ++header_.record_count;
}

void FeatureWriter::close() {
    if (closed_) return;
    closed_ = true;
    ByteWriter w;
    w.u64(header_.record_count);
    out_.seekp(count_pos_);
    out_.write(reinterpret_cast<const char*>(w.bytes().data()), 8);
    out_.close();
    if (!out_) throw DataError("failed finalising '" + path_ + "'");
}

FeatureFile read_feature_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes, path);
    r.expect_magic(kFeatureMagic);
    FeatureFile f;
    auto& h = f.header;
    h.width = r.u64();
    h.height = r.u64();
    const std::size_t depth_at = r.offset();
    const std::uint64_t depth = r.u64();
    if (depth < 1 || depth > static_cast<std::uint64_t>(Selection::kMaxDepth)) {
        throw DataError(path + ": bad depth " + std::to_string(depth) + " at byte offset " + std::to_string(depth_at));
    }
    h.scatter.depth = static_cast<int>(depth);
    h.scatter.level_bases.clear();
    for (std::uint64_t i = 0; i < depth; ++i) h.scatter.level_bases.push_back(enum_field<Basis>(r, 3, "basis id"));
    h.scatter.variant = enum_field<Variant>(r, 1, "variant");
    h.scatter.boundary = enum_field<Boundary>(r, 1, "boundary");
    const std::size_t dec_at = r.offset();
    const std::uint64_t dec = r.u64();
    if (dec < 1 || dec > 1024) {
        throw DataError(path + ": bad decimation " + std::to_string(dec) + " at byte offset " + std::to_string(dec_at));
    }
    h.scatter.decimate = static_cast<int>(dec);
    h.scatter.smooth_with = enum_field<SmoothWith>(r, 1, "smooth_with");
    h.scatter.decimate_smoothing = enum_field<std::uint64_t>(r, 1, "decimate_smoothing flag") != 0;
    h.channel = enum_field<Channel>(r, 2, "channel");
    h.scatter.selection = Selection(r.u64());
    h.vector_length = r.u64();
    const std::size_t count_at = r.offset();
    h.record_count = r.u64();
    try {
        h.scatter.validate();
    } catch (const DataError& e) {
        throw DataError(path + ": inconsistent header: " + e.what());
    }

    const std::uint64_t rec_bytes = 8 + 4 * h.vector_length;
    if ((h.vector_length == 0 && h.record_count != 0) || h.record_count > r.remaining() / rec_bytes) {
        throw DataError(path + ": truncated at byte offset " + std::to_string(bytes.size()) + " (header at offset " +
                        std::to_string(count_at) + " declares " + std::to_string(h.record_count) + " records of " +
                        std::to_string(h.vector_length) + " values)");
    }
    f.labels.reserve(h.record_count);
    f.values.reserve(h.record_count * h.vector_length);
    for (std::uint64_t i = 0; i < h.record_count; ++i) {
        f.labels.push_back(r.u64());
        for (std::uint64_t k = 0; k < h.vector_length; ++k) f.values.push_back(r.f32());
    }
    r.expect_end();
    return f;
}

Dataset to_dataset(const FeatureFile& file) {
    Dataset d;
    d.dim = file.header.vector_length;
    d.features.reserve(file.values.size());
    for (float v : file.values) d.features.push_back(static_cast<double>(v));
    for (std::size_t i = 0; i < file.labels.size(); ++i) {
        if (file.labels[i] == kNoLabel) throw DataError("feature record " + std::to_string(i) + " has no label");
        d.labels.push_back(static_cast<std::size_t>(file.labels[i]));
    }
    return d;
}

}  // namespace iwsn
