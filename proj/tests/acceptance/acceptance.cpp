// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// usage: acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "iwsn/bytes.hpp"
#include "iwsn/classifier.hpp"
#include "iwsn/flops.hpp"
#include "iwsn/metrics.hpp"
#include "iwsn/pipeline.hpp"
#include "iwsn/scattering.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

using namespace iwsn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1. reference CNN totals

Outcome reference_cnn() {
    const auto base = flops::parse_network_spec_file(std::string(IWSN_TEST_DATA) + "/cnn_small.net");
    struct Row {
        std::int64_t w, h;
        double gflops;
    };
    const Row rows[] = {{960, 540, 0.46}, {1280, 720, 0.82}, {1920, 1080, 1.85}};
    Outcome o{true, ""};
    for (const auto& r : rows) {
        auto spec = base;
        spec.width = r.w;
        spec.height = r.h;
        const double g = static_cast<double>(flops::network_flops(spec).total) / 1e9;
        const double dev = g / r.gflops - 1.0;
        o.pass = o.pass && std::abs(dev) <= 0.02;
        o.detail += fmt("%lldx%lld %.6fG (%+.2f%%)  ", static_cast<long long>(r.w), static_cast<long long>(r.h), g,
                        100 * dev);
    }
    return o;
}

// ---- 2. three-layer head

Outcome mlp_head() {
    const auto fc1 = flops::fc_flops(1036800, 64, true);
    const auto fc2 = flops::fc_flops(64, 16, true);
    const auto fc3 = flops::fc_flops(16, 16, true);
    const bool ok = fc1 >= 66'300'000 && fc1 <= 66'400'000 && fc2 == 1040 && flops::relu_flops(64) == 64 &&
                    flops::relu_flops(16) == 16 && fc1 == oracle::fc_flops_loop(1036800, 64, true) &&
                    fc2 == oracle::fc_flops_loop(64, 16, true);
    return {ok, fmt("fc1=%llu fc2=%llu relu=64/16 fc3(16->16)=%llu", static_cast<unsigned long long>(fc1),
                    static_cast<unsigned long long>(fc2), static_cast<unsigned long long>(fc3))};
}

// ---- 3. pipeline cost linear in pixels

Outcome pipeline_scaling() {
    const PipelineConfig cfg;
    const std::int64_t dims[3][2] = {{960, 540}, {1280, 720}, {1920, 1080}};
    double per_px[3];
    std::string d;
    for (int i = 0; i < 3; ++i) {
        const auto w = dims[i][0], h = dims[i][1];
        const auto len = feature_length(static_cast<std::size_t>(w), static_cast<std::size_t>(h), cfg.scatter);
        const auto rep = flops::pipeline_flops(w, h, cfg.scatter, cfg.mlp_dims(len));
        per_px[i] = static_cast<double>(rep.total) / static_cast<double>(w * h);
        d += fmt("%.1fM ", static_cast<double>(rep.total) / 1e6);
    }
    const double a = per_px[0] / per_px[1], b = per_px[2] / per_px[1];
    d += fmt("per-pixel ratios %.4f : 1 : %.4f", a, b);
    return {std::abs(a - 1) <= 0.02 && std::abs(b - 1) <= 0.02, d};
}

// ---- 4. scattering vs straight-line cascades

Outcome oracle_equivalence() {
    Rng rng(4001);
    int cases[2] = {0, 0};
    std::set<Basis> seen;
    double worst = 0;
    for (int v = 0; v < 2; ++v) {
        const Variant variant = v ? Variant::improved : Variant::classic;
        while (cases[v] < 150) {
            const auto cfg = testutil::random_config(rng, variant);
            const auto x = testutil::random_plane(rng, 4 + rng.below(29), 4 + rng.below(29));
            oracle::Scatter ref;
            try {
                ref = v ? oracle::improved(x, cfg) : oracle::classic(x, cfg);
            } catch (const std::out_of_range&) {
                continue;  // extension too short; the library rejects these
            }
            const auto got = v ? scatter_improved(x, cfg) : scatter_classic(x, cfg);
            const double floor = oracle::max_abs(x);
            worst = std::max(worst, oracle::rel_error(got.s0, ref.s0, floor));
            for (int m = 0; m < cfg.depth; ++m) {
                worst = std::max(worst, oracle::rel_error(got.u_levels[m], ref.u[m], floor));
                worst = std::max(worst, oracle::rel_error(got.s_levels[m], ref.s[m], floor));
            }
            seen.insert(cfg.level_bases.begin(), cfg.level_bases.end());
            ++cases[v];
        }
    }
    return {worst <= 1e-12 && seen.size() == 4,
            fmt("classic %d + improved %d cases, %zu bases, max rel err %.3g", cases[0], cases[1], seen.size(), worst)};
}

// ---- 5. depth 1

Outcome order1() {
    Rng rng(5001);
    double worst = 0;
    int n = 0;
    for (; n < 100; ++n) {
        auto cfg = testutil::random_config(rng, Variant::classic);
        cfg.depth = 1;
        cfg.level_bases.resize(1);
        cfg.selection = Selection::modulus_levels(1);
        const auto x = testutil::random_plane(rng, 16 + rng.below(17), 16 + rng.below(17));
        auto icfg = cfg;
        icfg.variant = Variant::improved;
        const auto a = scatter(x, cfg);
        const auto b = scatter(x, icfg);
        worst = std::max({worst, oracle::rel_error(b.s0, a.s0), oracle::rel_error(b.u_levels[0], a.u_levels[0]),
                          oracle::rel_error(b.s_levels[0], a.s_levels[0])});
    }
    return {worst <= 1e-12, fmt("%d cases, max rel err %.3g", n, worst)};
}

// ---- 6. shift equivariance

ImagePlane roll(const ImagePlane& x, std::size_t dr, std::size_t dc) {
    ImagePlane y(x.width(), x.height());
    for (std::size_t r = 0; r < x.height(); ++r)
        for (std::size_t c = 0; c < x.width(); ++c) y.at((r + dr) % x.height(), (c + dc) % x.width()) = x.at(r, c);
    return y;
}

Outcome shift() {
    Rng rng(6001);
    int cases = 0, bad = 0;
    for (int t = 0; t < 60; ++t) {
        ScatterConfig cfg;
        cfg.variant = t % 2 ? Variant::improved : Variant::classic;
        cfg.boundary = Boundary::periodic;
        cfg.level_bases.assign(3, Basis::bior1_1);
        cfg.decimate_smoothing = rng.below(2) != 0;
        const std::size_t w = 16 * (1 + rng.below(3)), h = 16 * (1 + rng.below(3));
        const auto x = testutil::random_plane(rng, w, h);
        const auto base = scatter(x, cfg);
        // S0 lives on the level-1 grid.
        bad += scatter(roll(x, 2, 2), cfg).s0 != roll(base.s0, 1, 1);
        for (int m = 1; m <= 3; ++m) {
            const std::size_t s = std::size_t{1} << m;
            const auto dr = rng.below(2) ? s : 0, dc = rng.below(2) || dr == 0 ? s : 0;
            const auto moved = scatter(roll(x, dr, dc), cfg);
            bad += moved.u_levels[m - 1] != roll(base.u_levels[m - 1], dr / s, dc / s);
            if (!cfg.decimate_smoothing) {
                bad += moved.s_levels[m - 1] != roll(base.s_levels[m - 1], dr / s, dc / s);
            } else {
                // extra smoothing decimation puts S_m one grid further down
                const auto far = scatter(roll(x, 2 * dr, 2 * dc), cfg);
                bad += far.s_levels[m - 1] != roll(base.s_levels[m - 1], dr / s, dc / s);
            }
        }
        ++cases;
    }
    return {bad == 0 && cases >= 50, fmt("%d random cases, %d mismatching planes", cases, bad)};
}

// ---- 7. gradients

Outcome gradients() {
    Rng rng(7001);
    int pairs = 0;
    long compared = 0;
    double worst = 0;
    for (; pairs < 120; ++pairs) {
        std::vector<std::size_t> dims{1 + rng.below(10)};
        for (std::size_t i = 0, n = rng.below(3); i < n; ++i) dims.push_back(1 + rng.below(8));
        dims.push_back(2 + rng.below(4));
        auto m = make_mlp(dims, rng.next());
        for (auto& l : m.layers)
            for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
        std::vector<double> x(dims[0]);
        for (double& v : x) v = rng.uniform(-1, 1);
        const std::size_t target = rng.below(m.classes());
        const auto g = mlp_backward(m, x, target);
        auto check = [&](double ana, double num) {
            if (std::abs(ana) < 1e-7 && std::abs(num) < 1e-7) return;
            worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-8}));
            ++compared;
        };
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
            const auto& l = m.layers[li];
            for (std::size_t j = 0; j < l.inputs; ++j)
                for (std::size_t k = 0; k < l.outputs; ++k)
                    check(g.weights[li][j * l.outputs + k],
                          oracle::numeric_grad(m, x, target, li, static_cast<long>(j), k, 1e-6));
            for (std::size_t k = 0; k < l.outputs; ++k)
                check(g.bias[li][k], oracle::numeric_grad(m, x, target, li, -1, k, 1e-6));
        }
    }
    return {worst <= 1e-4, fmt("%d model/input pairs, %ld entries, max rel err %.3g", pairs, compared, worst)};
}

// ---- 8 and 11 share the synthetic fixture

constexpr SynthSpec kFixture{.classes = 5, .per_class = 200, .width = 64, .height = 64, .seed = 7};

struct Fixture {
    fs::path dir;
    std::string manifest;
    PipelineConfig cfg;
    TrainReport report;
    std::string background_pick;
    double seconds = 0;
};

Fixture build_fixture(const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    Fixture f;
    f.dir = work / "fixture";
    fs::remove_all(f.dir);
    synth_dataset(kFixture, (f.dir / "images").string());
    f.manifest = (f.dir / "images" / "manifest.tsv").string();
    f.cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    run_extract(f.cfg, f.manifest, (f.dir / "features.bin").string());
    f.report = run_train(f.cfg, (f.dir / "features.bin").string(), (f.dir / "model.bin").string());
    const auto model = load_model((f.dir / "model.bin").string());
    f.background_pick = run_infer(f.cfg, model, (f.dir / "images" / "background_0000.ppm").string()).class_name;
    f.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return f;
}

Outcome classification(const Fixture& f) {
    const double test_acc = *overall_accuracy(f.report.test_matrix);
    const double train_acc = *overall_accuracy(f.report.train_matrix);
    return {test_acc >= 0.90 && f.seconds < 300,
            fmt("test ACC %.4f, train ACC %.4f on %zu/%zu images, background exemplar -> %s, %.1f s", test_acc,
                train_acc, f.report.split.test.size(), f.report.split.train.size(), f.background_pick.c_str(),
                f.seconds)};
}

// ---- 9. 720P frame budget

Outcome realtime() {
    const PipelineConfig cfg;
    Rng rng(9001);
    const auto plane = testutil::random_plane(rng, 1280, 720, 0.0, 1.0);
    const auto model = make_mlp(cfg.mlp_dims(feature_length(1280, 720, cfg.scatter)), 9001);
    (void)run_bench(cfg, model, plane, 2, 1);  // warm-up
    const auto r = run_bench(cfg, model, plane, 30, 1);
    const double ms = 1e3 * r.wall_seconds / static_cast<double>(r.frames);
    return {ms < 33.0, fmt("%.2f ms/frame (%.1f FPS), scatter %.2f ms + MLP %.2f ms, 1 thread, %s", ms, r.fps,
                           r.extract_ms, r.classify_ms, r.precision == Precision::f32 ? "f32" : "f64")};
}

// ---- 10. metrics

Outcome metrics() {
    Rng rng(10001);
    int bad = 0, matrices = 0;
    for (; matrices < 300; ++matrices) {
        const std::size_t k = 2 + rng.below(6);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < k; ++i) labels.push_back("c" + std::to_string(i));
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0, n = 1 + rng.below(400); i < n; ++i) pairs.emplace_back(rng.below(k), rng.below(k));
        const auto m = confusion_from_indices(pairs, labels);
        for (std::size_t c = 0; c < k; ++c) {
            const auto t = binary_tally(m, c);
            const auto ref = oracle::tally(pairs, c);
            bad += t.tp != ref.tp || t.fp != ref.fp || t.fn != ref.fn || t.tn != ref.tn;
            const auto d = [](std::uint64_t a, std::uint64_t b) {
                return b ? std::optional<double>(static_cast<double>(a) / static_cast<double>(b)) : std::nullopt;
            };
            bad += tpr(t) != d(ref.tp, ref.tp + ref.fn);
            bad += ppv(t) != d(ref.tp, ref.tp + ref.fp);
            bad += acc(t) != d(ref.tp + ref.tn, ref.tp + ref.fp + ref.fn + ref.tn);
        }
    }
    const double e1 = efficiency(66.7, 472e9), e2 = efficiency(149.3, 3000e9);
    const bool eff = std::round(e1 * 1000) == 141 && std::round(e2 * 1000) == 50;
    return {bad == 0 && eff, fmt("%d matrices, %d mismatches; efficiency %.3f and %.3f", matrices, bad, e1, e2)};
}

// ---- 11. determinism

Outcome determinism(const Fixture& f, const fs::path& work) {
    std::vector<std::string> broken;
    const auto same = [&](const std::string& what, const auto& a, const auto& b) {
        if (a != b) broken.push_back(what);
    };

    const auto again = work / "synth_again";
    fs::remove_all(again);
    synth_dataset(kFixture, again.string());
    for (const auto& rec : read_manifest(f.manifest))
        same("images", read_file_bytes((f.dir / "images" / rec.path).string()),
             read_file_bytes((again / rec.path).string()));

    auto one = f.cfg;
    one.threads = 1;
    auto three = f.cfg;
    three.threads = 3;
    run_extract(one, f.manifest, (f.dir / "features_t1.bin").string());
    run_extract(three, f.manifest, (f.dir / "features_t3.bin").string());
    const auto ref = read_file_bytes((f.dir / "features.bin").string());
    same("features (1 thread)", ref, read_file_bytes((f.dir / "features_t1.bin").string()));
    same("features (3 threads)", ref, read_file_bytes((f.dir / "features_t3.bin").string()));

    const auto r2 = run_train(one, (f.dir / "features_t1.bin").string(), (f.dir / "model_again.bin").string());
    same("model", read_file_bytes((f.dir / "model.bin").string()),
         read_file_bytes((f.dir / "model_again.bin").string()));
    same("evaluation report", format_evaluation(f.report.test_matrix), format_evaluation(r2.test_matrix));
    same("loss history", f.report.result.loss_history, r2.result.loss_history);

    const auto model = load_model((f.dir / "model.bin").string());
    const auto img = (f.dir / "images" / "kite_0003.ppm").string();
    same("infer report", format_infer(run_infer(one, model, img)), format_infer(run_infer(three, model, img)));

    std::string d = "images, features (1/3/" + std::to_string(f.cfg.threads) + " threads), model, reports";
    if (!broken.empty()) {
        d = "differs:";
        for (const auto& b : broken) d += " " + b + ";";
    }
    return {broken.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "iwsn_acceptance";
    fs::create_directories(work);

    std::optional<Fixture> fixture;
    const auto need_fixture = [&]() -> const Fixture& {
        if (!fixture) fixture = build_fixture(work);
        return *fixture;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"reference CNN FLOPs within 2% of 0.46/0.82/1.85 G", reference_cnn},
        {"three-layer head FLOPs", mlp_head},
        {"pipeline FLOPs linear in pixel count", pipeline_scaling},
        {"classic/improved scattering equal brute-force cascades", oracle_equivalence},
        {"depth-1 classic == improved", order1},
        {"periodic bior1.1 shift equivariance", shift},
        {"MLP gradients vs central differences", gradients},
        {"synthetic 5-class fixture test ACC >= 90%", [&] { return classification(need_fixture()); }},
        {"720P scatter + MLP under 33 ms/frame", realtime},
        {"TPR/PPV/ACC tallies and efficiency", metrics},
        {"bitwise determinism across runs and thread counts", [&] { return determinism(need_fixture(), work); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu  %s  [%s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
