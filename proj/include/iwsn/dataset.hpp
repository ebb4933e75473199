#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iwsn {

struct ManifestRecord {
    std::string path;
    std::string label;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// One record per line, `path<TAB>label`. Blank lines are skipped.
std::vector<ManifestRecord> read_manifest(const std::string& manifest_path);
void write_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records);

/// Relative record paths are taken relative to the manifest's directory.
std::string resolve_record_path(const std::string& manifest_path, const ManifestRecord& record);

/// The five procedural families, in label order.
const std::vector<std::string>& synth_class_names();

struct SynthSpec {
    std::size_t classes = 5;
    std::size_t per_class = 20;
    std::size_t width = 128;
    std::size_t height = 128;
    std::uint64_t seed = 7;
};

/// Writes `classes * per_class` PPM images plus `manifest.tsv` into out_dir
/// and returns the manifest. Output is a pure function of the spec.
///
/// Families: "nest" (tangle of thin dark sticks), "kite" (flat-coloured
/// diamond with a tail), "textile" (two-tone striped patch), "plastic" (bag
/// with creases) and "background" (object-free). Every image sits on a smooth
/// randomised backdrop with mild sensor noise.
std::vector<ManifestRecord> synth_dataset(const SynthSpec& spec, const std::string& out_dir);

/// Per-class seeded split: within each class the sample indices are shuffled
/// and the first round(fraction * n) go to training. Both outputs are sorted.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
Split split_by_class(const std::vector<std::size_t>& labels, double train_fraction, std::uint64_t seed);

}  // namespace iwsn
