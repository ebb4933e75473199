#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iwsn/classifier.hpp"
#include "iwsn/dataset.hpp"
#include "iwsn/feature_file.hpp"
#include "iwsn/metrics.hpp"
#include "iwsn/ppm.hpp"
#include "iwsn/scattering.hpp"

namespace iwsn {

struct PipelineConfig {
    Channel channel = Channel::B;
    ScatterConfig scatter;
    std::vector<std::string> classes = synth_class_names();
    // Expected input dimensions; 0 adopts the first image's size.
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::size_t> hidden{64, 16};
    std::string model_path;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    TrainConfig train;

    void validate() const;
    std::vector<std::size_t> mlp_dims(std::size_t feature_len) const;
    std::size_t class_index(const std::string& label) const;
};

/// Plain-text key=value lines; '#' starts a comment. Unknown keys are
/// rejected. Keys: channel, depth, bases, boundary, decimate, variant,
/// smooth_with, decimate_smoothing, selection, classes, width, height, hidden,
/// model, threads, seed, train_fraction, lr, momentum, epochs, batch_size,
/// steps_per_epoch.
PipelineConfig parse_pipeline_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base = {});
std::string format_pipeline_config(const PipelineConfig& config);

/// Calls fn(i) for i in [0, n) on `threads` workers. Each index runs exactly
/// once; callers write results into per-index slots.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Scattering features rounded through f32, the precision they are stored with.
std::vector<float> image_features(const ImagePlane& plane, const ScatterConfig& config);

struct ExtractSummary {
    std::size_t written = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // path, reason
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t vector_length = 0;
};

/// Load channel -> scatter -> feature vector for every manifest record, in
/// manifest order. Per-image failures (unreadable file, wrong size) are
/// reported in the summary and skipped; labels outside config.classes reject
/// the whole run.
ExtractSummary run_extract(const PipelineConfig& config, const std::string& manifest_path,
                           const std::string& out_path);

struct TrainReport {
    TrainResult result;
    Split split;
    ConfusionMatrix train_matrix;
    ConfusionMatrix test_matrix;
};

/// Seeded per-class split, trains a freshly initialised MLP on the training
/// part and writes the model to model_out (when non-empty).
TrainReport run_train(const PipelineConfig& config, const std::string& feature_path, const std::string& model_out);

enum class EvalSplit { train, test, all };

ConfusionMatrix evaluate(const MlpModel& model, const Dataset& data, const std::vector<std::size_t>& rows,
                         const std::vector<std::string>& classes);
ConfusionMatrix run_eval(const PipelineConfig& config, const MlpModel& model, const std::string& feature_path,
                         EvalSplit which);

struct InferResult {
    std::string path;
    std::size_t class_index = 0;
    std::string class_name;
    std::vector<double> scores;
};

InferResult infer_plane(const PipelineConfig& config, const MlpModel& model, const ImagePlane& plane);
InferResult run_infer(const PipelineConfig& config, const MlpModel& model, const std::string& image_path);
/// `path<TAB>class<TAB>s0,s1,...` with scores printed to 17 significant digits.
std::string format_infer(const InferResult& r);

enum class Precision { f64, f32 };

struct BenchReport {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t frames = 0;
    unsigned threads = 1;
    Precision precision = Precision::f32;
    double wall_seconds = 0.0;
    double fps = 0.0;
    double extract_ms = 0.0;   // mean per frame
    double classify_ms = 0.0;  // mean per frame
    std::optional<double> efficiency;
};

/// Repeats scattering + classification on an already decoded plane. Decoding
/// is not timed. f32 runs the MLP on a single-precision copy of the weights
/// (the scattering stage is f64 either way).
BenchReport run_bench(const PipelineConfig& config, const MlpModel& model, const ImagePlane& plane,
                      std::size_t frames, unsigned threads, Precision precision = Precision::f32,
                      std::optional<double> peak_flops = std::nullopt);
std::string format_bench(const BenchReport& r);
std::string bench_csv(const BenchReport& r);

}  // namespace iwsn
