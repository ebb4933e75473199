#include "iwsn/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iwsn/error.hpp"

namespace iwsn {
namespace {

std::string dims(std::size_t w, std::size_t h) {
    return std::to_string(w) + "x" + std::to_string(h);
}

// Source index for every (output sample, tap) pair along one axis.
std::vector<std::size_t> axis_indices(std::size_t n, std::size_t out, std::size_t side,
                                      std::size_t origin, int decimate, Boundary boundary) {
    std::vector<std::size_t> idx(out * side);
    const auto ln = static_cast<long>(n);
    for (std::size_t i = 0; i < out; ++i) {
        for (std::size_t a = 0; a < side; ++a) {
            long p = static_cast<long>(i) * decimate + static_cast<long>(a) - static_cast<long>(origin);
            if (p < 0) {
                p = (boundary == Boundary::symmetric) ? -p - 1 : p + ln;
            } else if (p >= ln) {
                p = (boundary == Boundary::symmetric) ? 2 * ln - 1 - p : p - ln;
            }
            idx[i * side + a] = static_cast<std::size_t>(p);
        }
    }
    return idx;
}

bool axis_fits(std::size_t n, std::size_t out, std::size_t side, std::size_t origin, int decimate) {
    if (origin > n) return false;
    const std::size_t reach = (out - 1) * static_cast<std::size_t>(decimate) + (side - 1 - origin);
    return reach <= 2 * n - 1;
}

struct LevelKernels {
    Kernel2D phi;
    Kernel2D psi;
};

std::vector<LevelKernels> level_kernels(const ScatterConfig& config) {
    std::vector<LevelKernels> out;
    out.reserve(config.level_bases.size());
    for (Basis b : config.level_bases) {
        const FilterPair pair = make_filter_pair(b);
        out.push_back({unit_dc(make_kernel2d(pair, KernelKind::scale)),
                       make_kernel2d(pair, KernelKind::wavelet_diagonal)});
    }
    return out;
}

ImagePlane abs_of(ImagePlane p) {
    modulus(p);
    return p;
}

// Highest U level that must be computed to serve `sel`.
int needed_u_depth(Selection sel) {
    int m = 0;
    for (int k = 1; k <= Selection::kMaxDepth; ++k) {
        if (sel.has_u(k) || sel.has_s(k)) m = k;
    }
    return m;
}

}  // namespace

std::string_view boundary_name(Boundary b) noexcept {
    return b == Boundary::symmetric ? "symmetric" : "periodic";
}
std::string_view variant_name(Variant v) noexcept {
    return v == Variant::classic ? "classic" : "improved";
}
std::string_view smooth_with_name(SmoothWith s) noexcept {
    return s == SmoothWith::first ? "first" : "last";
}

Boundary parse_boundary(std::string_view s) {
    if (s == "symmetric") return Boundary::symmetric;
    if (s == "periodic") return Boundary::periodic;
    throw DataError("unknown boundary mode '" + std::string(s) + "'");
}
Variant parse_variant(std::string_view s) {
    if (s == "classic") return Variant::classic;
    if (s == "improved") return Variant::improved;
    throw DataError("unknown scattering variant '" + std::string(s) + "'");
}
SmoothWith parse_smooth_with(std::string_view s) {
    if (s == "first") return SmoothWith::first;
    if (s == "last") return SmoothWith::last;
    throw DataError("unknown smooth_with value '" + std::string(s) + "'");
}

Selection Selection::modulus_levels(int depth) {
    Selection sel;
    for (int k = 1; k <= depth; ++k) sel = sel | u(k);
    return sel;
}

Selection Selection::parse(std::string_view text) {
    Selection sel;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view tok = text.substr(pos, comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        if (!tok.empty()) {
            const char kind = tok.front();
            int level = -1;
            try {
                std::size_t used = 0;
                level = std::stoi(std::string(tok.substr(1)), &used);
                if (used != tok.size() - 1) level = -1;
            } catch (const std::exception&) {
                level = -1;
            }
            if ((kind == 'S' || kind == 's') && level == 0) {
                sel = sel | s0();
            } else if ((kind == 'U' || kind == 'u') && level >= 1 && level <= kMaxDepth) {
                sel = sel | u(level);
            } else if ((kind == 'S' || kind == 's') && level >= 1 && level <= kMaxDepth) {
                sel = sel | s(level);
            } else {
                throw DataError("bad selection entry '" + std::string(tok) + "'");
            }
        }
        pos = comma + 1;
    }
    return sel;
}

std::string Selection::to_string() const {
    std::string out;
    auto add = [&out](const std::string& t) {
        if (!out.empty()) out += ',';
        out += t;
    };
    if (has_s0()) add("S0");
    for (int k = 1; k <= kMaxDepth; ++k) {
        if (has_u(k)) add("U" + std::to_string(k));
    }
    for (int k = 1; k <= kMaxDepth; ++k) {
        if (has_s(k)) add("S" + std::to_string(k));
    }
    return out;
}

int Selection::max_level() const noexcept {
    int m = 0;
    for (int k = 1; k <= kMaxDepth; ++k) {
        if (has_u(k) || has_s(k)) m = k;
    }
    return m;
}

void ScatterConfig::validate() const {
    if (depth < 1 || depth > Selection::kMaxDepth) {
        throw DataError("scattering depth must be in [1, 31], got " + std::to_string(depth));
    }
    if (level_bases.size() != static_cast<std::size_t>(depth)) {
        throw DataError("scattering depth " + std::to_string(depth) + " needs " +
                        std::to_string(depth) + " level bases, got " +
                        std::to_string(level_bases.size()));
    }
    if (decimate < 1) {
        throw DataError("decimation factor must be >= 1, got " + std::to_string(decimate));
    }
    if (selection.max_level() > depth) {
        throw DataError("selection " + selection.to_string() + " references levels beyond depth " +
                        std::to_string(depth));
    }
}

ImagePlane conv2_decimated(const ImagePlane& plane, const Kernel2D& kernel, Boundary boundary,
                           int decimate) {
    if (decimate < 1) {
        throw DataError("decimation factor must be >= 1, got " + std::to_string(decimate));
    }
    const std::size_t side = kernel.side();
    if (side == 0) throw DataError("empty convolution kernel");
    const std::size_t origin = kernel.origin();
    const std::size_t w = plane.width();
    const std::size_t h = plane.height();
    const std::size_t out_w = decimated_length(w, decimate);
    const std::size_t out_h = decimated_length(h, decimate);
    if (!axis_fits(w, out_w, side, origin, decimate) || !axis_fits(h, out_h, side, origin, decimate)) {
        throw DataError("kernel " + dims(side, side) + " is larger than the " +
                        std::string(boundary_name(boundary)) + "-extended " + dims(w, h) + " plane");
    }

    const auto col_idx = axis_indices(w, out_w, side, origin, decimate, boundary);
    const auto row_idx = axis_indices(h, out_h, side, origin, decimate, boundary);
    const double* f = kernel.factor.data();

    // Horizontal pass over every input row.
    std::vector<double> tmp(h * out_w);
    for (std::size_t r = 0; r < h; ++r) {
        const double* src = plane.row(r).data();
        double* dst = tmp.data() + r * out_w;
        for (std::size_t j = 0; j < out_w; ++j) {
            const std::size_t* ix = col_idx.data() + j * side;
            double acc = 0.0;
            for (std::size_t b = 0; b < side; ++b) acc += f[b] * src[ix[b]];
            dst[j] = acc;
        }
    }

    // Vertical pass, accumulating whole rows in tap order.
    ImagePlane out(out_w, out_h);
    for (std::size_t i = 0; i < out_h; ++i) {
        double* dst = out.row(i).data();
        const std::size_t* ix = row_idx.data() + i * side;
        for (std::size_t a = 0; a < side; ++a) {
            const double c = f[a];
            const double* src = tmp.data() + ix[a] * out_w;
            for (std::size_t j = 0; j < out_w; ++j) dst[j] += c * src[j];
        }
    }
    return out;
}

void modulus(ImagePlane& plane) noexcept {
    for (double& v : plane.values()) v = std::abs(v);
}

ScatterOutput scatter_selected(const ImagePlane& plane, const ScatterConfig& config,
                               Selection selection) {
    config.validate();
    if (selection.max_level() > config.depth) {
        throw DataError("selection " + selection.to_string() + " references levels beyond depth " +
                        std::to_string(config.depth));
    }
    if (plane.empty()) throw DataError("cannot scatter an empty plane");
    if (!plane.all_finite()) throw DataError("input plane contains non-finite values");

    const auto kernels = level_kernels(config);
    const Boundary bnd = config.boundary;
    const int d = config.decimate;
    const int smooth_stride = config.decimate_smoothing ? d : 1;
    const int depth_needed = needed_u_depth(selection);

    ScatterOutput out;
    out.config_echo = config;
    out.u_levels.resize(config.depth);
    out.s_levels.resize(config.depth);

    if (config.variant == Variant::classic) {
        if (selection.has_s0()) out.s0 = conv2_decimated(plane, kernels[0].phi, bnd, d);
        for (int m = 1; m <= depth_needed; ++m) {
            const ImagePlane& prev = (m == 1) ? plane : out.u_levels[m - 2];
            out.u_levels[m - 1] = abs_of(conv2_decimated(prev, kernels[m - 1].psi, bnd, d));
        }
        for (int m = 1; m <= depth_needed; ++m) {
            if (selection.has_s(m)) {
                out.s_levels[m - 1] =
                    conv2_decimated(out.u_levels[m - 1], kernels[m - 1].phi, bnd, smooth_stride);
            }
        }
    } else {
        // Low-pass chain L_k = |L_{k-1} * phi_k| with L_0 = x; U_m = |L_{m-1} * psi_m|.
        const bool need_chain = depth_needed >= 2;
        if (selection.has_s0() || need_chain) out.s0 = conv2_decimated(plane, kernels[0].phi, bnd, d);
        ImagePlane low;
        if (need_chain) low = abs_of(out.s0);
        for (int m = 1; m <= depth_needed; ++m) {
            const ImagePlane& src = (m == 1) ? plane : low;
            out.u_levels[m - 1] = abs_of(conv2_decimated(src, kernels[m - 1].psi, bnd, d));
            if (m >= 2 && m < depth_needed) {
                low = abs_of(conv2_decimated(low, kernels[m - 1].phi, bnd, d));
            }
        }
        const auto& smooth = (config.smooth_with == SmoothWith::first) ? kernels.front() : kernels.back();
        for (int m = 1; m <= depth_needed; ++m) {
            if (selection.has_s(m)) {
                out.s_levels[m - 1] = conv2_decimated(out.u_levels[m - 1], smooth.phi, bnd, smooth_stride);
            }
        }
        if (!selection.has_s0()) out.s0 = ImagePlane{};
    }

    for (int m = 1; m <= config.depth; ++m) {
        if (!selection.has_u(m)) out.u_levels[m - 1] = ImagePlane{};
    }
    return out;
}

ScatterOutput scatter_classic(const ImagePlane& plane, const ScatterConfig& config) {
    if (config.variant != Variant::classic) {
        throw DataError("scatter_classic called with the improved variant");
    }
    return scatter(plane, config);
}

ScatterOutput scatter_improved(const ImagePlane& plane, const ScatterConfig& config) {
    if (config.variant != Variant::improved) {
        throw DataError("scatter_improved called with the classic variant");
    }
    return scatter(plane, config);
}

ScatterOutput scatter(const ImagePlane& plane, const ScatterConfig& config) {
    config.validate();
    Selection all = Selection::s0();
    for (int m = 1; m <= config.depth; ++m) all = all | Selection::u(m) | Selection::s(m);
    return scatter_selected(plane, config, all);
}

std::vector<double> feature_vector(const ScatterOutput& output, Selection selection) {
    if (selection.empty()) throw DataError("feature selection is empty");
    std::vector<const ImagePlane*> planes;
    auto take = [&planes](const ImagePlane& p, const std::string& name) {
        if (p.empty()) throw DataError("selected plane " + name + " is not present in the output");
        planes.push_back(&p);
    };
    const int depth = static_cast<int>(output.u_levels.size());
    if (selection.max_level() > depth) {
        throw DataError("selection " + selection.to_string() + " exceeds output depth " +
                        std::to_string(depth));
    }
    if (selection.has_s0()) take(output.s0, "S0");
    for (int m = 1; m <= depth; ++m) {
        if (selection.has_u(m)) take(output.u_levels[m - 1], "U" + std::to_string(m));
    }
    for (int m = 1; m <= depth; ++m) {
        if (selection.has_s(m)) take(output.s_levels[m - 1], "S" + std::to_string(m));
    }
    std::size_t total = 0;
    for (const auto* p : planes) total += p->size();
    std::vector<double> out;
    out.reserve(total);
    for (const auto* p : planes) out.insert(out.end(), p->values().begin(), p->values().end());
    return out;
}

std::vector<double> extract_features(const ImagePlane& plane, const ScatterConfig& config) {
    return feature_vector(scatter_selected(plane, config, config.selection), config.selection);
}

ScatterShapes scatter_shapes(std::size_t width, std::size_t height, const ScatterConfig& config) {
    config.validate();
    const int d = config.decimate;
    const int sd = config.decimate_smoothing ? d : 1;
    auto shrink = [](PlaneShape s, int f) {
        return PlaneShape{decimated_length(s.width, f), decimated_length(s.height, f)};
    };
    ScatterShapes out;
    PlaneShape cur{width, height};
    out.s0 = shrink(cur, d);
    for (int m = 1; m <= config.depth; ++m) {
        cur = shrink(cur, d);
        out.u_levels.push_back(cur);
        out.s_levels.push_back(shrink(cur, sd));
    }
    return out;
}

std::size_t feature_length(std::size_t width, std::size_t height, const ScatterConfig& config) {
    const auto shapes = scatter_shapes(width, height, config);
    const Selection sel = config.selection;
    if (sel.empty()) throw DataError("feature selection is empty");
    std::size_t n = sel.has_s0() ? shapes.s0.size() : 0;
    for (int m = 1; m <= config.depth; ++m) {
        if (sel.has_u(m)) n += shapes.u_levels[m - 1].size();
        if (sel.has_s(m)) n += shapes.s_levels[m - 1].size();
    }
    return n;
}

}  // namespace iwsn
