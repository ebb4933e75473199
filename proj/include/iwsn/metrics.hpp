#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iwsn {

/// counts[actual][predicted] over an ordered label set.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::uint64_t>> counts;

    explicit ConfusionMatrix(std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t index_of(const std::string& label) const;
    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    std::uint64_t row_sum(std::size_t actual) const noexcept;
    std::uint64_t col_sum(std::size_t predicted) const noexcept;
    void add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_from_predictions(const std::vector<std::pair<std::string, std::string>>& pairs,
                                           const std::vector<std::string>& labels);
ConfusionMatrix confusion_from_indices(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                       const std::vector<std::string>& labels);

struct BinaryTally {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const BinaryTally&, const BinaryTally&) = default;
};

/// One-vs-rest reduction for `positive`.
BinaryTally binary_tally(const ConfusionMatrix& m, std::size_t positive);
BinaryTally binary_tally(const ConfusionMatrix& m, const std::string& positive);

// Each ratio is std::nullopt when its denominator is zero.
std::optional<double> tpr(const BinaryTally& t);
std::optional<double> ppv(const BinaryTally& t);
std::optional<double> acc(const BinaryTally& t);

/// Multiclass accuracy trace / total. Coincides with acc() of a class tally
/// only when there are exactly two classes.
std::optional<double> overall_accuracy(const ConfusionMatrix& m);

/// Frames per second per GFLOPS of device peak: fps / (peak_flops / 1e9).
double efficiency(double fps, double peak_flops);

/// Matrix followed by per-class TPR/PPV/ACC ("n/a" where undefined).
std::string format_evaluation(const ConfusionMatrix& m);
std::string evaluation_csv(const ConfusionMatrix& m);

}  // namespace iwsn
