#include "iwsn/flops.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "iwsn/error.hpp"
#include "iwsn/scattering.hpp"

namespace iwsn::flops {
namespace {

constexpr Count kLimit = static_cast<Count>(std::numeric_limits<std::int64_t>::max());

void require_positive(std::int64_t v, const char* what) {
    if (v < 1) throw DataError(std::string(what) + " must be >= 1, got " + std::to_string(v));
}

Count mul(Count a, Count b) {
    Count r = 0;
    if (__builtin_mul_overflow(a, b, &r) || r > kLimit) {
        throw DataError("operation count overflows 2^63");
    }
    return r;
}

Count add(Count a, Count b) {
    Count r = 0;
    if (__builtin_add_overflow(a, b, &r) || r > kLimit) {
        throw DataError("operation count overflows 2^63");
    }
    return r;
}

Count u(std::int64_t v) { return static_cast<Count>(v); }

}  // namespace

std::int64_t conv_out_size(std::int64_t n, std::int64_t k, std::int64_t padding,
                           std::int64_t stride, std::int64_t dilation) {
    require_positive(n, "input size");
    require_positive(k, "kernel size");
    require_positive(stride, "stride");
    require_positive(dilation, "dilation");
    if (padding < 0) throw DataError("padding must be >= 0");
    const std::int64_t span = n - dilation * (k - 1) - 1 + 2 * padding;
    if (span < 0) {
        throw DataError("kernel " + std::to_string(k) + " (dilation " + std::to_string(dilation) +
                        ", padding " + std::to_string(padding) + ") shrinks input size " +
                        std::to_string(n) + " below 1");
    }
    return span / stride + 1;
}

Count conv_flops(std::int64_t m1, std::int64_t m2, std::int64_t k, std::int64_t c_in,
                 std::int64_t c_out, bool bias) {
    require_positive(m1, "M1");
    require_positive(m2, "M2");
    require_positive(k, "K");
    require_positive(c_in, "C_in");
    require_positive(c_out, "C_out");
    const Count per_out = add(mul(mul(u(k), u(k)), u(c_in)), bias ? 1 : 0);
    return mul(mul(mul(u(m1), u(m2)), per_out), u(c_out));
}

Count fc_flops(std::int64_t inputs, std::int64_t outputs, bool bias) {
    require_positive(inputs, "I");
    require_positive(outputs, "O");
    return mul(add(u(inputs), bias ? 1 : 0), u(outputs));
}

Count avgpool_flops(std::int64_t c_in, std::int64_t w_in, std::int64_t h_in, std::int64_t k) {
    require_positive(c_in, "C_in");
    require_positive(w_in, "W_in");
    require_positive(h_in, "H_in");
    require_positive(k, "K");
    return mul(mul(mul(u(c_in), u(w_in)), u(h_in)), mul(u(k), u(k)));
}

Count maxpool_flops() noexcept { return 0; }

Count relu_flops(std::int64_t elements) {
    if (elements < 0) throw DataError("element count must be >= 0");
    return u(elements);
}

std::string_view layer_kind_name(LayerKind kind) noexcept {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::fc: return "fc";
        case LayerKind::relu: return "relu";
    }
    return "?";
}

NetworkSpec parse_network_spec(std::istream& in) {
    NetworkSpec spec;
    bool have_input = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;

        std::map<std::string, std::int64_t> kv;
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw DataError("line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
            }
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            try {
                std::size_t used = 0;
                const long long v = std::stoll(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
                kv[key] = v;
            } catch (const std::exception&) {
                throw DataError("line " + std::to_string(lineno) + ": '" + key +
                                "' needs an integer value, got '" + val + "'");
            }
        }
        auto take = [&](const char* key, std::int64_t dflt) {
            auto it = kv.find(key);
            if (it == kv.end()) return dflt;
            const auto v = it->second;
            kv.erase(it);
            return v;
        };

        LayerSpec layer;
        if (kind == "input") {
            spec.width = take("width", 0);
            spec.height = take("height", 0);
            spec.channels = take("channels", 1);
            have_input = true;
        } else if (kind == "conv2d" || kind == "conv") {
            layer.kind = LayerKind::conv2d;
            layer.k = take("k", 1);
            layer.padding = take("p", 0);
            layer.stride = take("s", 1);
            layer.dilation = take("d", 1);
            layer.c_out = take("out", 0);
            layer.bias = take("bias", 0) != 0;
        } else if (kind == "avgpool" || kind == "maxpool") {
            layer.kind = (kind == "avgpool") ? LayerKind::avgpool : LayerKind::maxpool;
            layer.k = take("k", 1);
            layer.padding = take("p", 0);
            layer.stride = take("s", 1);
            layer.dilation = take("d", 1);
        } else if (kind == "fc" || kind == "linear") {
            layer.kind = LayerKind::fc;
            layer.inputs = take("in", 0);
            layer.outputs = take("out", 0);
            layer.bias = take("bias", 0) != 0;
            if (layer.outputs < 1) {
                throw DataError("line " + std::to_string(lineno) + ": fc layer needs out=<n>");
            }
        } else if (kind == "relu") {
            layer.kind = LayerKind::relu;
            layer.elements = take("n", 0);
        } else {
            throw DataError("line " + std::to_string(lineno) + ": unknown layer kind '" + kind + "'");
        }
        if (!kv.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": unknown key '" + kv.begin()->first +
                            "' for " + kind);
        }
        if (kind != "input") spec.layers.push_back(layer);
    }
    if (!have_input) throw DataError("network spec has no 'input' line");
    return spec;
}

NetworkSpec parse_network_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network spec '" + path + "'");
    return parse_network_spec(in);
}

FlopsReport network_flops(const NetworkSpec& spec) {
    require_positive(spec.width, "input width");
    require_positive(spec.height, "input height");
    require_positive(spec.channels, "input channels");

    std::int64_t c = spec.channels;
    std::int64_t w = spec.width;
    std::int64_t h = spec.height;
    FlopsReport report;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerFlops lf;
        lf.index = i;
        try {
            switch (l.kind) {
                case LayerKind::conv2d: {
                    const auto m1 = conv_out_size(w, l.k, l.padding, l.stride, l.dilation);
                    const auto m2 = conv_out_size(h, l.k, l.padding, l.stride, l.dilation);
                    const auto c_out = l.c_out > 0 ? l.c_out : c;
                    lf.flops = conv_flops(m1, m2, l.k, c, c_out, l.bias);
                    lf.label = "conv2d " + std::to_string(l.k) + "x" + std::to_string(l.k);
                    c = c_out;
                    w = m1;
                    h = m2;
                    break;
                }
                case LayerKind::avgpool:
                case LayerKind::maxpool: {
                    const auto m1 = conv_out_size(w, l.k, l.padding, l.stride, l.dilation);
                    const auto m2 = conv_out_size(h, l.k, l.padding, l.stride, l.dilation);
                    lf.flops = (l.kind == LayerKind::avgpool) ? avgpool_flops(c, w, h, l.k) : maxpool_flops();
                    lf.label = std::string(layer_kind_name(l.kind)) + " " + std::to_string(l.k) + "x" +
                               std::to_string(l.k);
                    w = m1;
                    h = m2;
                    break;
                }
                case LayerKind::fc: {
                    const std::int64_t flat = c * w * h;
                    if (l.inputs > 0 && l.inputs != flat) {
                        throw DataError("fc declares " + std::to_string(l.inputs) + " inputs but receives " +
                                        std::to_string(flat));
                    }
                    lf.flops = fc_flops(flat, l.outputs, l.bias);
                    lf.label = "fc " + std::to_string(flat) + "->" + std::to_string(l.outputs);
                    c = l.outputs;
                    w = 1;
                    h = 1;
                    break;
                }
                case LayerKind::relu: {
                    const std::int64_t n = l.elements > 0 ? l.elements : c * w * h;
                    lf.flops = relu_flops(n);
                    lf.label = "relu";
                    break;
                }
            }
        } catch (const DataError& e) {
            throw DataError("layer " + std::to_string(i) + " (" + std::string(layer_kind_name(l.kind)) +
                            "): " + e.what());
        }
        lf.out_channels = c;
        lf.out_width = w;
        lf.out_height = h;
        report.total = add(report.total, lf.flops);
        report.per_layer.push_back(std::move(lf));
    }
    return report;
}

double theoretical_time(const FlopsReport& report, double peak_flops) {
    if (!(peak_flops > 0.0)) throw DataError("peak FLOPS must be positive");
    return static_cast<double>(report.total) / peak_flops;
}

FlopsReport pipeline_flops(std::int64_t width, std::int64_t height, const ScatterConfig& config,
                           const std::vector<std::size_t>& mlp_dims) {
    config.validate();
    require_positive(width, "width");
    require_positive(height, "height");
    const Selection sel = config.selection;
    const int d = config.decimate;
    const int sd = config.decimate_smoothing ? d : 1;

    std::vector<std::int64_t> phi_side, psi_side;
    for (Basis b : config.level_bases) {
        const FilterPair p = make_filter_pair(b);
        phi_side.push_back(static_cast<std::int64_t>(p.h.size()));
        psi_side.push_back(static_cast<std::int64_t>(p.g.size()));
    }

    FlopsReport report;
    auto push = [&report](std::string label, Count f, std::int64_t w, std::int64_t h) {
        LayerFlops lf;
        lf.index = report.per_layer.size();
        lf.label = std::move(label);
        lf.flops = f;
        lf.out_channels = 1;
        lf.out_width = w;
        lf.out_height = h;
        report.total = add(report.total, f);
        report.per_layer.push_back(std::move(lf));
    };
    struct Shape {
        std::int64_t w, h;
    };
    auto shrink = [](Shape s, int f) {
        return Shape{static_cast<std::int64_t>(decimated_length(static_cast<std::size_t>(s.w), f)),
                     static_cast<std::int64_t>(decimated_length(static_cast<std::size_t>(s.h), f))};
    };
    auto conv = [&](const std::string& what, Shape in, std::int64_t k, int stride) {
        const Shape o = shrink(in, stride);
        push("conv " + what + " " + std::to_string(k) + "x" + std::to_string(k), conv_flops(o.h, o.w, k, 1, 1, false),
             o.w, o.h);
        return o;
    };
    auto mod = [&](const std::string& what, Shape s) {
        push("modulus " + what, relu_flops(s.w * s.h), s.w, s.h);
    };

    int depth_needed = 0;
    for (int m = 1; m <= config.depth; ++m) {
        if (sel.has_u(m) || sel.has_s(m)) depth_needed = m;
    }
    const Shape input{width, height};
    std::vector<Shape> u_shape(config.depth + 1);

    if (config.variant == Variant::classic) {
        if (sel.has_s0()) conv("phi1 -> S0", input, phi_side[0], d);
        Shape prev = input;
        for (int m = 1; m <= depth_needed; ++m) {
            const std::string tag = "U" + std::to_string(m);
            prev = conv("psi" + std::to_string(m) + " -> " + tag, prev, psi_side[m - 1], d);
            mod(tag, prev);
            u_shape[m] = prev;
        }
        for (int m = 1; m <= depth_needed; ++m) {
            if (sel.has_s(m)) {
                conv("phi" + std::to_string(m) + " -> S" + std::to_string(m), u_shape[m], phi_side[m - 1], sd);
            }
        }
    } else {
        const bool need_chain = depth_needed >= 2;
        Shape low{};
        if (sel.has_s0() || need_chain) low = conv("phi1 -> S0", input, phi_side[0], d);
        if (need_chain) mod("L1", low);
        for (int m = 1; m <= depth_needed; ++m) {
            const std::string tag = "U" + std::to_string(m);
            const Shape src = (m == 1) ? input : low;
            u_shape[m] = conv("psi" + std::to_string(m) + " -> " + tag, src, psi_side[m - 1], d);
            mod(tag, u_shape[m]);
            if (m >= 2 && m < depth_needed) {
                const std::string ltag = "L" + std::to_string(m);
                low = conv("phi" + std::to_string(m) + " -> " + ltag, low, phi_side[m - 1], d);
                mod(ltag, low);
            }
        }
        const std::int64_t smooth = (config.smooth_with == SmoothWith::first) ? phi_side.front() : phi_side.back();
        for (int m = 1; m <= depth_needed; ++m) {
            if (sel.has_s(m)) conv("phi -> S" + std::to_string(m), u_shape[m], smooth, sd);
        }
    }

    for (std::size_t i = 0; i + 1 < mlp_dims.size(); ++i) {
        const auto in = static_cast<std::int64_t>(mlp_dims[i]);
        const auto out = static_cast<std::int64_t>(mlp_dims[i + 1]);
        push("fc " + std::to_string(in) + "->" + std::to_string(out), fc_flops(in, out, true), out, 1);
        if (i + 2 < mlp_dims.size()) push("relu", relu_flops(out), out, 1);
    }
    return report;
}

std::string format_report(const FlopsReport& report) {
    std::ostringstream os;
    os << "layer\tkind\toutput\tflops\n";
    for (const auto& l : report.per_layer) {
        os << l.index << '\t' << l.label << '\t' << l.out_channels << 'x' << l.out_width << 'x' << l.out_height
           << '\t' << l.flops << '\n';
    }
    os << "total\t\t\t" << report.total << '\n';
    if (report.theoretical_time_s) {
        os.precision(6);
        os << "theoretical_time_ms\t\t\t" << *report.theoretical_time_s * 1e3 << '\n';
    }
    return os.str();
}

std::string report_csv(const FlopsReport& report) {
    std::ostringstream os;
    os << "index,label,out_channels,out_width,out_height,flops\n";
    for (const auto& l : report.per_layer) {
        os << l.index << ',' << '"' << l.label << '"' << ',' << l.out_channels << ',' << l.out_width << ','
           << l.out_height << ',' << l.flops << '\n';
    }
    os << "total,,,,," << report.total << '\n';
    if (report.theoretical_time_s) {
        os.precision(9);
        os << "theoretical_time_s,,,,," << *report.theoretical_time_s << '\n';
    }
    return os.str();
}

}  // namespace iwsn::flops
