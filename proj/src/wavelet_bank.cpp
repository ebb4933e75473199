#include "iwsn/wavelet_bank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "iwsn/error.hpp"

namespace iwsn {
namespace {

struct Rational {
    double num;
    double den;
};

// Decomposition low-pass filters from the Cohen-Daubechies-Feauveau spline
// construction, normalised to unit sum. Multiplied by sqrt(2) below. Values
// agree with PyWavelets' dec_lo tables to the last digit.
constexpr Rational kLowBior11[] = {{1, 2}, {1, 2}};
constexpr Rational kLowBior22[] = {{-1, 8}, {1, 4}, {3, 4}, {1, 4}, {-1, 8}};
constexpr Rational kLowBior13[] = {{-1, 16}, {1, 16}, {1, 2}, {1, 2}, {1, 16}, {-1, 16}};
constexpr Rational kLowBior26[] = {{-5, 1024}, {5, 512},    {17, 512},  {-39, 512}, {-123, 1024},
                                   {81, 256},  {175, 256},  {81, 256},  {-123, 1024},
                                   {-39, 512}, {17, 512},   {5, 512},   {-5, 1024}};

// Synthesis low-pass: the B-spline of order 1 (box) or 2 (hat).
constexpr Rational kSplineOrder1[] = {{1, 2}, {1, 2}};
constexpr Rational kSplineOrder2[] = {{1, 4}, {1, 2}, {1, 4}};

template <std::size_t N>
std::vector<double> scaled(const Rational (&table)[N]) {
    std::vector<double> out;
    out.reserve(N);
    for (const auto& r : table) {
        out.push_back(r.num / r.den * std::numbers::sqrt2);
    }
    return out;
}

std::vector<double> modulate(const std::vector<double>& f) {
    std::vector<double> out(f.size());
    for (std::size_t n = 0; n < f.size(); ++n) {
        out[n] = (n % 2 == 0) ? f[n] : -f[n];
    }
    return out;
}

std::vector<double> decomposition_low(Basis basis) {
    switch (basis) {
        case Basis::bior1_1: return scaled(kLowBior11);
        case Basis::bior2_2: return scaled(kLowBior22);
        case Basis::bior1_3: return scaled(kLowBior13);
        case Basis::bior2_6: return scaled(kLowBior26);
    }
    throw std::logic_error("unhandled basis");
}

std::vector<double> synthesis_low(Basis basis) {
    switch (basis) {
        case Basis::bior1_1:
        case Basis::bior1_3: return scaled(kSplineOrder1);
        case Basis::bior2_2:
        case Basis::bior2_6: return scaled(kSplineOrder2);
    }
    throw std::logic_error("unhandled basis");
}

void self_check(const FilterPair& pair) {
    const double sum_h = std::accumulate(pair.h.begin(), pair.h.end(), 0.0);
    const double sum_g = std::accumulate(pair.g.begin(), pair.g.end(), 0.0);
    if (std::abs(sum_h - std::numbers::sqrt2) > 1e-12 || std::abs(sum_g) > 1e-12 ||
        perfect_reconstruction_error(pair, make_dual_pair(pair.basis)) > 1e-10) {
        throw std::logic_error("filter table for " + std::string(basis_name(pair.basis)) +
                               " fails its self-check");
    }
}

}  // namespace

std::string_view basis_name(Basis basis) noexcept {
    switch (basis) {
        case Basis::bior1_1: return "bior1.1";
        case Basis::bior2_2: return "bior2.2";
        case Basis::bior1_3: return "bior1.3";
        case Basis::bior2_6: return "bior2.6";
    }
    return "unknown";
}

Basis parse_basis(std::string_view name) {
    for (Basis b : kAllBases) {
        if (basis_name(b) == name) return b;
    }
    throw DataError("unknown wavelet basis '" + std::string(name) +
                    "' (expected bior1.1, bior2.2, bior1.3 or bior2.6)");
}

DualPair make_dual_pair(Basis basis) {
    DualPair dual;
    dual.h = synthesis_low(basis);
    dual.g = modulate(decomposition_low(basis));
    return dual;
}

FilterPair make_filter_pair(Basis basis) {
    FilterPair pair;
    pair.basis = basis;
    pair.h = decomposition_low(basis);
    // Alias cancellation: the analysis high-pass is the modulated synthesis low-pass.
    pair.g = modulate(synthesis_low(basis));
    self_check(pair);
    return pair;
}

FilterPair make_filter_pair(std::string_view name) { return make_filter_pair(parse_basis(name)); }

double perfect_reconstruction_error(const FilterPair& pair, const DualPair& dual) {
    const auto& h = pair.h;
    const auto& d = dual.h;
    if (h.empty() || d.empty() || (h.size() % 2) != (d.size() % 2) || pair.g.size() != d.size()) {
        return std::numeric_limits<double>::infinity();
    }
    // Lag that aligns the centres of the two symmetric filters.
    const long aligned = (static_cast<long>(d.size()) - static_cast<long>(h.size())) / 2;
    const long hn = static_cast<long>(h.size());
    const long dn = static_cast<long>(d.size());

    double worst = 0.0;
    for (long lag = aligned - hn - dn; lag <= aligned + hn + dn; lag += 2) {
        double r = 0.0;
        for (long n = 0; n < hn; ++n) {
            const long m = n + lag;
            if (m >= 0 && m < dn) r += h[n] * d[m];
        }
        const double expected = (lag == aligned) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(r - expected));
    }

    const double sign = (pair.g[0] * d[0] >= 0.0) ? 1.0 : -1.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double expected = sign * ((n % 2 == 0) ? d[n] : -d[n]);
        worst = std::max(worst, std::abs(pair.g[n] - expected));
    }
    return worst;
}

Kernel2D make_kernel2d(const FilterPair& pair, KernelKind kind) {
    Kernel2D k;
    k.kind = kind;
    k.factor = (kind == KernelKind::scale) ? pair.h : pair.g;
    const std::size_t n = k.factor.size();
    k.taps.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            k.taps[i * n + j] = k.factor[i] * k.factor[j];
        }
    }
    k.dc_gain = std::accumulate(k.taps.begin(), k.taps.end(), 0.0);
    return k;
}

Kernel2D unit_dc(const Kernel2D& kernel) {
    if (kernel.kind != KernelKind::scale) return kernel;
    Kernel2D k = kernel;
    const double s = std::accumulate(k.factor.begin(), k.factor.end(), 0.0);
    for (double& f : k.factor) f /= s;
    const std::size_t n = k.factor.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            k.taps[i * n + j] = k.factor[i] * k.factor[j];
        }
    }
    k.dc_gain = std::accumulate(k.taps.begin(), k.taps.end(), 0.0);
    return k;
}

}  // namespace iwsn
