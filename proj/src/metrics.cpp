#include "iwsn/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "iwsn/error.hpp"

namespace iwsn {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(std::optional<double> v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> l)
    : labels(std::move(l)), counts(labels.size(), std::vector<std::uint64_t>(labels.size(), 0)) {}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return i;
    }
    throw DataError("unknown class label '" + label + "'");
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts) {
        for (auto c : row) t += c;
    }
    return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts[actual]) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts) t += row[predicted];
    return t;
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted, std::uint64_t n) {
    if (actual >= size() || predicted >= size()) {
        throw DataError("class index out of range (" + std::to_string(actual) + ", " + std::to_string(predicted) +
                        ") for " + std::to_string(size()) + " classes");
    }
    counts[actual][predicted] += n;
}

ConfusionMatrix confusion_from_predictions(const std::vector<std::pair<std::string, std::string>>& pairs,
                                           const std::vector<std::string>& labels) {
    ConfusionMatrix m(labels);
    for (const auto& [actual, predicted] : pairs) m.add(m.index_of(actual), m.index_of(predicted));
    return m;
}

ConfusionMatrix confusion_from_indices(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                       const std::vector<std::string>& labels) {
    ConfusionMatrix m(labels);
    for (const auto& [actual, predicted] : pairs) m.add(actual, predicted);
    return m;
}

BinaryTally binary_tally(const ConfusionMatrix& m, std::size_t positive) {
    if (positive >= m.size()) throw DataError("positive class index " + std::to_string(positive) + " out of range");
    BinaryTally t;
    t.tp = m.counts[positive][positive];
    t.fn = m.row_sum(positive) - t.tp;
    t.fp = m.col_sum(positive) - t.tp;
    t.tn = m.total() - t.tp - t.fn - t.fp;
    return t;
}

BinaryTally binary_tally(const ConfusionMatrix& m, const std::string& positive) {
    return binary_tally(m, m.index_of(positive));
}

std::optional<double> tpr(const BinaryTally& t) { return ratio(t.tp, t.tp + t.fn); }
std::optional<double> ppv(const BinaryTally& t) { return ratio(t.tp, t.tp + t.fp); }
std::optional<double> acc(const BinaryTally& t) { return ratio(t.tp + t.tn, t.total()); }

std::optional<double> overall_accuracy(const ConfusionMatrix& m) { return ratio(m.trace(), m.total()); }

double efficiency(double fps, double peak_flops) {
    if (!(peak_flops > 0.0)) throw DataError("device peak FLOPS must be positive");
    if (fps < 0.0) throw DataError("fps must be >= 0");
    return fps / (peak_flops / 1e9);
}

std::string format_evaluation(const ConfusionMatrix& m) {
    std::ostringstream os;
    os << "actual\\predicted";
    for (const auto& l : m.labels) os << '\t' << l;
    os << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << m.labels[i];
        for (auto c : m.counts[i]) os << '\t' << c;
        os << '\n';
    }
    os << "\nclass\tTPR\tPPV\tACC\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto t = binary_tally(m, i);
        os << m.labels[i] << '\t' << fmt(tpr(t)) << '\t' << fmt(ppv(t)) << '\t' << fmt(acc(t)) << '\n';
    }
    os << "overall_accuracy\t" << fmt(overall_accuracy(m)) << '\n';
    return os.str();
}

std::string evaluation_csv(const ConfusionMatrix& m) {
    std::ostringstream os;
    os << "class,tp,fp,fn,tn,tpr,ppv,acc\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto t = binary_tally(m, i);
        os << m.labels[i] << ',' << t.tp << ',' << t.fp << ',' << t.fn << ',' << t.tn << ',' << fmt(tpr(t)) << ','
           << fmt(ppv(t)) << ',' << fmt(acc(t)) << '\n';
    }
    os << "overall,,,,," << ",," << fmt(overall_accuracy(m)) << '\n';
    return os.str();
}

}  // namespace iwsn
