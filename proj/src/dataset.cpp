#include "iwsn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include "iwsn/error.hpp"
#include "iwsn/ppm.hpp"
#include "iwsn/rng.hpp"

namespace fs = std::filesystem;

namespace iwsn {

std::vector<ManifestRecord> read_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path + "'");
    std::vector<ManifestRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw DataError(manifest_path + ":" + std::to_string(lineno) + ": expected 'path<TAB>label'");
        }
        out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return out;
}

void write_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest '" + manifest_path + "'");
    for (const auto& r : records) {
        if (r.path.empty() || r.path.find_first_of("\t\n") != std::string::npos ||
            r.label.find_first_of("\t\n") != std::string::npos) {
            throw DataError("manifest record cannot be written: '" + r.path + "'");
        }
        out << r.path << '\t' << r.label << '\n';
    }
    if (!out) throw DataError("failed writing manifest '" + manifest_path + "'");
}

std::string resolve_record_path(const std::string& manifest_path, const ManifestRecord& record) {
    const fs::path p(record.path);
    if (p.is_absolute()) return p.string();
    return (fs::path(manifest_path).parent_path() / p).string();
}

const std::vector<std::string>& synth_class_names() {
    static const std::vector<std::string> names = {"nest", "kite", "textile", "plastic", "background"};
    return names;
}

namespace {

struct Canvas {
    std::size_t w, h;
    std::vector<std::array<double, 3>> px;

    Canvas(std::size_t w_, std::size_t h_) : w(w_), h(h_), px(w_ * h_) {}
    std::array<double, 3>& at(long x, long y) { return px[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)]; }
    bool inside(long x, long y) const { return x >= 0 && y >= 0 && x < static_cast<long>(w) && y < static_cast<long>(h); }
    void blend(long x, long y, const std::array<double, 3>& c, double alpha) {
        if (!inside(x, y)) return;
        auto& p = at(x, y);
        for (int k = 0; k < 3; ++k) p[k] = (1.0 - alpha) * p[k] + alpha * c[k];
    }
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void paint_backdrop(Canvas& cv, Rng& rng) {
    static constexpr std::array<std::array<double, 3>, 4> palette = {{
        {0.55, 0.70, 0.88},  // sky
        {0.35, 0.50, 0.30},  // vegetation
        {0.55, 0.47, 0.38},  // soil
        {0.70, 0.72, 0.74},  // overcast
    }};
    std::array<double, 3> base = palette[rng.below(palette.size())];
    for (double& v : base) v += rng.uniform(-0.08, 0.08);

    struct Wave {
        double fx, fy, phase, amp;
    };
    std::array<Wave, 3> waves{};
    const double diag = std::hypot(static_cast<double>(cv.w), static_cast<double>(cv.h));
    for (auto& wv : waves) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double freq = rng.uniform(0.5, 2.0) * 2.0 * std::numbers::pi / diag;
        wv = {freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
              rng.uniform(0.02, 0.07)};
    }
    for (std::size_t y = 0; y < cv.h; ++y) {
        for (std::size_t x = 0; x < cv.w; ++x) {
            double shade = 0.0;
            for (const auto& wv : waves) {
                shade += wv.amp * std::sin(wv.fx * static_cast<double>(x) + wv.fy * static_cast<double>(y) + wv.phase);
            }
            auto& p = cv.at(static_cast<long>(x), static_cast<long>(y));
            for (int k = 0; k < 3; ++k) p[k] = base[k] + shade;
        }
    }
}

void draw_line(Canvas& cv, double x0, double y0, double x1, double y1, const std::array<double, 3>& c,
               double alpha = 1.0) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(len * 2.0));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        cv.blend(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c, alpha);
    }
}

struct Placement {
    double cx, cy, size;
};

Placement place(const Canvas& cv, Rng& rng, double lo, double hi) {
    const double m = static_cast<double>(std::min(cv.w, cv.h));
    return {static_cast<double>(cv.w) * (0.5 + rng.uniform(-0.08, 0.08)),
            static_cast<double>(cv.h) * (0.5 + rng.uniform(-0.08, 0.08)), m * rng.uniform(lo, hi)};
}

void paint_nest(Canvas& cv, Rng& rng) {
    const auto [cx, cy, r] = place(cv, rng, 0.22, 0.32);
    const int sticks = 70 + static_cast<int>(rng.below(40));
    for (int i = 0; i < sticks; ++i) {
        const double rr = r * std::sqrt(rng.uniform());
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double mx = cx + rr * std::cos(a);
        const double my = cy + 0.7 * rr * std::sin(a);
        const double dir = rng.uniform(0.0, std::numbers::pi);
        const double half = r * rng.uniform(0.1, 0.3);
        const std::array<double, 3> c = {rng.uniform(0.22, 0.42), rng.uniform(0.15, 0.30), rng.uniform(0.05, 0.15)};
        draw_line(cv, mx - half * std::cos(dir), my - half * std::sin(dir), mx + half * std::cos(dir),
                  my + half * std::sin(dir), c);
    }
}

void paint_kite(Canvas& cv, Rng& rng) {
    const auto [cx, cy, a] = place(cv, rng, 0.18, 0.28);
    const double b = 0.7 * a;
    const double rot = rng.uniform(-0.4, 0.4);
    const double cr = std::cos(rot), sr = std::sin(rot);
    static constexpr std::array<std::array<double, 3>, 4> colours = {
        {{0.90, 0.15, 0.12}, {0.95, 0.80, 0.10}, {0.10, 0.55, 0.20}, {0.85, 0.25, 0.45}}};
    std::array<double, 3> c = colours[rng.below(colours.size())];
    for (double& v : c) v += rng.uniform(-0.05, 0.05);
    const long x_lo = std::max(0L, static_cast<long>(cx - a - 2)), x_hi = std::min<long>(cv.w - 1, static_cast<long>(cx + a + 2));
    const long y_lo = std::max(0L, static_cast<long>(cy - a - 2)), y_hi = std::min<long>(cv.h - 1, static_cast<long>(cy + a + 2));
    for (long y = y_lo; y <= y_hi; ++y) {
        for (long x = x_lo; x <= x_hi; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double u = cr * dx + sr * dy;
            const double v = -sr * dx + cr * dy;
            if (std::abs(u) / b + std::abs(v) / a <= 1.0) cv.blend(x, y, c, 1.0);
        }
    }
    const std::array<double, 3> spar = {0.15, 0.12, 0.10};
    draw_line(cv, cx + sr * a, cy - cr * a, cx - sr * a, cy + cr * a, spar);
    draw_line(cv, cx - cr * b, cy - sr * b, cx + cr * b, cy + sr * b, spar);
    // Tail hanging from the lower tip.
    double tx = cx - sr * a, ty = cy + cr * a;
    for (int seg = 0; seg < 5; ++seg) {
        const double nx = tx + rng.uniform(-0.08, 0.08) * a * 2.0;
        const double ny = ty + 0.18 * a;
        draw_line(cv, tx, ty, nx, ny, spar);
        tx = nx;
        ty = ny;
    }
}

// Striped cloth patch: two-tone bands, period scaled with the image.
void paint_textile(Canvas& cv, Rng& rng) {
    const auto [cx, cy, m] = place(cv, rng, 0.6, 0.75);
    const double hw = m / 2.0, hh = m * rng.uniform(0.35, 0.5);
    const double rot = rng.uniform(-0.8, 0.8);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double period = rng.uniform(5.0, 7.0) * static_cast<double>(std::min(cv.w, cv.h)) / 64.0;
    const std::array<double, 3> c1 = {rng.uniform(0.75, 1.0), rng.uniform(0.75, 1.0), rng.uniform(0.75, 1.0)};
    const std::array<double, 3> c2 = {c1[0] * 0.25, c1[1] * 0.25, c1[2] * 0.25};
    const double reach = std::hypot(hw, hh) + 2;
    for (long y = static_cast<long>(cy - reach); y <= static_cast<long>(cy + reach); ++y) {
        for (long x = static_cast<long>(cx - reach); x <= static_cast<long>(cx + reach); ++x) {
            if (!cv.inside(x, y)) continue;
            const double dx = x - cx, dy = y - cy;
            const double u = cr * dx + sr * dy;
            const double v = -sr * dx + cr * dy;
            if (std::abs(u) > hw || std::abs(v) > hh) continue;
            const bool band = std::sin(2.0 * std::numbers::pi * u / period) >= 0.0;
            cv.blend(x, y, band ? c1 : c2, 1.0);
        }
    }
}

// Crumpled bag: smooth body in one of a few tones, darker rim and fold creases.
void paint_plastic(Canvas& cv, Rng& rng) {
    const auto [cx, cy, rx] = place(cv, rng, 0.2, 0.3);
    const double ry = rx * rng.uniform(0.6, 1.0);
    static constexpr std::array<std::array<double, 3>, 3> tones = {{
        {0.95, 0.95, 0.93},  // white
        {0.12, 0.12, 0.14},  // black
        {0.30, 0.55, 0.95},  // blue
    }};
    const std::array<double, 3> c = tones[rng.below(tones.size())];
    const double hx = cx - 0.35 * rx, hy = cy - 0.35 * ry;
    for (long y = static_cast<long>(cy - ry - 3); y <= static_cast<long>(cy + ry + 3); ++y) {
        for (long x = static_cast<long>(cx - rx - 3); x <= static_cast<long>(cx + rx + 3); ++x) {
            if (!cv.inside(x, y)) continue;
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            const double d = std::sqrt(dx * dx + dy * dy);
            const double edge = std::clamp((1.0 - d) * rx / 2.0, 0.0, 1.0);
            if (edge <= 0.0) continue;
            const double shade = 0.55 + 0.45 * std::max(0.0, 1.0 - d * d);
            const double spec = 0.3 * std::exp(-((x - hx) * (x - hx) + (y - hy) * (y - hy)) / (0.05 * rx * rx));
            std::array<double, 3> p;
            for (int k = 0; k < 3; ++k) p[k] = c[k] * shade + spec;
            cv.blend(x, y, p, edge);
        }
    }
    const std::array<double, 3> crease = {c[0] * 0.35, c[1] * 0.35, c[2] * 0.35};
    const int folds = 4 + static_cast<int>(rng.below(4));
    for (int i = 0; i < folds; ++i) {
        const double a0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double a1 = a0 + rng.uniform(2.0, 4.0);
        const double r0 = rng.uniform(0.5, 0.9), r1 = rng.uniform(0.1, 0.6);
        draw_line(cv, cx + r0 * rx * std::cos(a0), cy + r0 * ry * std::sin(a0), cx + r1 * rx * std::cos(a1),
                  cy + r1 * ry * std::sin(a1), crease, 0.8);
    }
}

RgbImage render(std::size_t family, std::size_t w, std::size_t h, std::uint64_t seed) {
    Rng rng(seed);
    Canvas cv(w, h);
    paint_backdrop(cv, rng);
    switch (family) {
        case 0: paint_nest(cv, rng); break;
        case 1: paint_kite(cv, rng); break;
        case 2: paint_textile(cv, rng); break;
        case 3: paint_plastic(cv, rng); break;
        default: break;
    }
    RgbImage img(w, h);
    for (std::size_t i = 0; i < cv.px.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            const double v = std::clamp(cv.px[i][k] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
            img.pixels[3 * i + k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return img;
}

}  // namespace

std::vector<ManifestRecord> synth_dataset(const SynthSpec& spec, const std::string& out_dir) {
    const auto& names = synth_class_names();
    if (spec.classes < 1 || spec.classes > names.size()) {
        throw DataError("synth supports 1 to " + std::to_string(names.size()) + " classes");
    }
    if (spec.width < 64 || spec.height < 64) throw DataError("synth images must be at least 64x64");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory '" + out_dir + "'");

    // With fewer than five classes the object-free family is kept last.
    std::vector<std::size_t> families;
    for (std::size_t c = 0; c + 1 < spec.classes; ++c) families.push_back(c);
    families.push_back(names.size() - 1);
    if (spec.classes == names.size()) families = {0, 1, 2, 3, 4};

    std::vector<ManifestRecord> records;
    for (std::size_t c = 0; c < families.size(); ++c) {
        const std::size_t fam = families[c];
        for (std::size_t i = 0; i < spec.per_class; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%04zu.ppm", names[fam].c_str(), i);
            const auto img = render(fam, spec.width, spec.height, mix_seed(spec.seed, fam * 1000003ULL + i));
            write_ppm((fs::path(out_dir) / name).string(), img);
            records.push_back({name, names[fam]});
        }
    }
    write_manifest((fs::path(out_dir) / "manifest.tsv").string(), records);
    return records;
}

Split split_by_class(const std::vector<std::size_t>& labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw DataError("train fraction must be in [0, 1]");
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    Rng rng(seed);
    Split split;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(std::span<std::size_t>(idx));
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
        split.test.insert(split.test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace iwsn
