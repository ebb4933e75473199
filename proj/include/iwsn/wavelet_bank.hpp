#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iwsn {

enum class Basis : std::uint8_t { bior1_1 = 0, bior2_2 = 1, bior1_3 = 2, bior2_6 = 3 };

inline constexpr std::array<Basis, 4> kAllBases = {Basis::bior1_1, Basis::bior2_2, Basis::bior1_3,
                                                   Basis::bior2_6};

std::string_view basis_name(Basis basis) noexcept;

/// Parses "bior1.1", "bior2.2", "bior1.3" or "bior2.6". Throws DataError naming
/// the rejected string otherwise.
Basis parse_basis(std::string_view name);

/// Decomposition filters of one biorthogonal basis.
///
/// Filters are stored with minimal support (no zero padding). Sample k of a
/// filter of length n is aligned with input offset k - origin(n), where
/// origin(n) = (n - 1) / 2. Even-length filters are thus centred between the
/// current sample and the next one.
struct FilterPair {
    Basis basis{};
    std::vector<double> h;  // low-pass, sums to sqrt(2)
    std::vector<double> g;  // high-pass, sums to 0

    friend bool operator==(const FilterPair&, const FilterPair&) = default;
};

/// Reconstruction (synthesis) filters paired with a decomposition FilterPair.
/// Only used to verify the perfect-reconstruction identity.
struct DualPair {
    std::vector<double> h;
    std::vector<double> g;
};

constexpr std::size_t filter_origin(std::size_t length) noexcept {
    return length == 0 ? 0 : (length - 1) / 2;
}

FilterPair make_filter_pair(Basis basis);
FilterPair make_filter_pair(std::string_view basis_name);

DualPair make_dual_pair(Basis basis);

/// Largest deviation from the biorthogonality relations between the
/// decomposition low-pass h and the synthesis low-pass, plus the alias
/// cancellation relation tying g to the synthesis low-pass. Zero for an exact
/// perfect-reconstruction bank.
double perfect_reconstruction_error(const FilterPair& pair, const DualPair& dual);

enum class KernelKind : std::uint8_t { scale, wavelet_diagonal };

/// Separable 2D kernel taps[i][j] = factor[i] * factor[j].
struct Kernel2D {
    KernelKind kind{};
    std::vector<double> factor;  // 1D factor applied along both axes
    std::vector<double> taps;    // side x side, row-major
    double dc_gain = 0.0;        // sum of taps

    std::size_t side() const noexcept { return factor.size(); }
    std::size_t origin() const noexcept { return filter_origin(factor.size()); }
    double tap(std::size_t i, std::size_t j) const noexcept { return taps[i * side() + j]; }
};

/// Outer product h (x) h for KernelKind::scale, g (x) g for wavelet_diagonal.
Kernel2D make_kernel2d(const FilterPair& pair, KernelKind kind);

/// Rescales a scale kernel so its taps sum to one. The 1D factor is divided by
/// its own sum so the kernel stays an exact outer product. Wavelet kernels are
/// returned unchanged (their DC gain is zero).
Kernel2D unit_dc(const Kernel2D& kernel);

}  // namespace iwsn
