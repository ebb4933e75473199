#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "iwsn/bytes.hpp"
#include "iwsn/error.hpp"
#include "iwsn/pipeline.hpp"
#include "test_util.hpp"

using namespace iwsn;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
    PipelineConfig c;
    c.train.epochs = 30;
    c.train.learning_rate = 0.01;
    c.hidden = {16};
    c.seed = 3;
    return c;
}

// 5 classes x 6 images of 64x64 written once per scratch name.
std::string small_set(const std::string& name) {
    const auto dir = testutil::scratch(name);
    SynthSpec s;
    s.per_class = 6;
    s.width = 64;
    s.height = 64;
    synth_dataset(s, dir.string());
    return (dir / "manifest.tsv").string();
}

}  // namespace

TEST_CASE("config text parses, validates and round-trips") {
    std::istringstream in(
        "# comment\nchannel = G\ndepth=2\nbases=bior2.2,bior1.3\nvariant=classic\nboundary=periodic\n"
        "selection=S0,U2\nclasses=a,b\nhidden=8,4\nseed=9\nepochs=5\nlr=0.5\nbatch_size=4\n");
    const auto c = parse_pipeline_config(in);
    CHECK(c.channel == Channel::G);
    CHECK(c.scatter.depth == 2);
    CHECK(c.scatter.level_bases == std::vector<Basis>{Basis::bior2_2, Basis::bior1_3});
    CHECK(c.scatter.variant == Variant::classic);
    CHECK(c.scatter.selection == Selection::parse("S0,U2"));
    CHECK(c.classes == std::vector<std::string>{"a", "b"});
    CHECK(c.train.seed == 9);
    CHECK(c.mlp_dims(10) == std::vector<std::size_t>{10, 8, 4, 2});

    std::istringstream again(format_pipeline_config(c));
    const auto d = parse_pipeline_config(again);
    CHECK(format_pipeline_config(d) == format_pipeline_config(c));
    CHECK(d.scatter == c.scatter);

    std::istringstream depth_only("depth=2\n");
    const auto e = parse_pipeline_config(depth_only);
    CHECK(e.scatter.level_bases.size() == 2);
    CHECK(e.scatter.selection == Selection::modulus_levels(2));

    for (const char* bad : {"nokey\n", "colour=R\n", "depth=x\n", "bases=bior9.9\n", "classes=a\n",
                            "classes=a,a\n", "selection=U4\n", "momentum=1\n", "threads=0\n"}) {
        std::istringstream b(bad);
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_pipeline_config(b), DataError);
    }
}

TEST_CASE("parallel_for runs every index once for any worker count") {
    for (unsigned t : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), t, [&](std::size_t i) { ++hits[i]; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) { if (i == 3) throw DataError("x"); }), DataError);
}

TEST_CASE("extract: empty manifest, failures skipped, thread-count invariant") {
    const auto manifest = small_set("pipe_extract");
    const auto dir = fs::path(manifest).parent_path();
    const auto cfg = small_config();

    std::ofstream(dir / "empty.tsv") << "";
    const auto e = run_extract(cfg, (dir / "empty.tsv").string(), (dir / "empty.bin").string());
    CHECK(e.written == 0);
    CHECK(read_feature_file((dir / "empty.bin").string()).header.record_count == 0);

    auto c1 = cfg;
    c1.threads = 1;
    auto c3 = cfg;
    c3.threads = 3;
    const auto s1 = run_extract(c1, manifest, (dir / "f1.bin").string());
    const auto s3 = run_extract(c3, manifest, (dir / "f3.bin").string());
    CHECK(s1.written == 30);
    CHECK(s1.failures.empty());
    CHECK(s1.vector_length == feature_length(64, 64, cfg.scatter));
    CHECK(read_file_bytes((dir / "f1.bin").string()) == read_file_bytes((dir / "f3.bin").string()));
    const auto f = read_feature_file((dir / "f1.bin").string());
    CHECK(f.labels[0] == 0);
    CHECK(f.labels.back() == 4);

    auto recs = read_manifest(manifest);
    recs.insert(recs.begin() + 1, ManifestRecord{"missing.ppm", "kite"});
    write_manifest((dir / "holes.tsv").string(), recs);
    const auto s = run_extract(cfg, (dir / "holes.tsv").string(), (dir / "holes.bin").string());
    CHECK(s.written == 30);
    REQUIRE(s.failures.size() == 1);
    CHECK(s.failures[0].first == "missing.ppm");

    recs.push_back({"x.ppm", "airplane"});
    write_manifest((dir / "badlabel.tsv").string(), recs);
    CHECK_THROWS_AS(run_extract(cfg, (dir / "badlabel.tsv").string(), (dir / "bl.bin").string()), DataError);

    auto pinned = cfg;
    pinned.width = 128;
    pinned.height = 128;
    const auto p = run_extract(pinned, manifest, (dir / "pinned.bin").string());
    CHECK(p.written == 0);
    CHECK(p.failures.size() == 30);
}

TEST_CASE("train / eval / infer end to end, deterministic") {
    const auto manifest = small_set("pipe_train");
    const auto dir = fs::path(manifest).parent_path();
    const auto cfg = small_config();
    run_extract(cfg, manifest, (dir / "f.bin").string());

    const auto r1 = run_train(cfg, (dir / "f.bin").string(), (dir / "m1.bin").string());
    const auto r2 = run_train(cfg, (dir / "f.bin").string(), (dir / "m2.bin").string());
    CHECK(read_file_bytes((dir / "m1.bin").string()) == read_file_bytes((dir / "m2.bin").string()));
    CHECK(r1.split.train.size() == 25);
    CHECK(r1.split.test.size() == 5);
    CHECK(r1.train_matrix.total() == 25);
    CHECK(r1.result.loss_history.back() < r1.result.loss_history.front());

    const auto model = load_model((dir / "m1.bin").string());
    const auto m = run_eval(cfg, model, (dir / "f.bin").string(), EvalSplit::test);
    CHECK(m == r1.test_matrix);
    CHECK(run_eval(cfg, model, (dir / "f.bin").string(), EvalSplit::all).total() == 30);

    const auto recs = read_manifest(manifest);
    const auto img = resolve_record_path(manifest, recs[0]);
    const auto a = run_infer(cfg, model, img);
    const auto b = run_infer(cfg, model, img);
    CHECK(a.scores == b.scores);
    CHECK(format_infer(a) == format_infer(b));
    CHECK(format_infer(a).rfind(img + "\t", 0) == 0);

    const auto zero = zero_mlp(model.dims);
    const auto z = run_infer(cfg, zero, img);
    CHECK(z.class_index == 0);
    for (double s : z.scores) CHECK(s == 0.0);

    auto untrained = cfg;
    untrained.train.learning_rate = 0.0;
    const auto u = run_train(untrained, (dir / "f.bin").string(), "");
    CHECK(u.result.model == make_mlp(cfg.mlp_dims(model.input_len()), cfg.seed));

    auto other = cfg;
    other.scatter.variant = Variant::classic;
    CHECK_THROWS_AS(run_train(other, (dir / "f.bin").string(), ""), DataError);
    auto two = cfg;
    two.classes = {"a", "b"};
    CHECK_THROWS_AS(run_infer(two, model, img), DataError);
}

TEST_CASE("bench reports what it measured") {
    const auto cfg = small_config();
    Rng rng(1);
    const auto plane = testutil::random_plane(rng, 64, 48, 0.0, 1.0);
    const auto model = make_mlp(cfg.mlp_dims(feature_length(64, 48, cfg.scatter)), 1);
    const auto r = run_bench(cfg, model, plane, 1, 1, Precision::f64, 1e9);
    CHECK(r.frames == 1);
    CHECK(r.fps == doctest::Approx(1.0 / r.wall_seconds));
    REQUIRE(r.efficiency);
    CHECK(*r.efficiency == doctest::Approx(r.fps));
    const auto r2 = run_bench(cfg, model, plane, 6, 2, Precision::f32);
    CHECK(r2.frames == 6);
    CHECK(r2.threads == 2);
    CHECK(format_bench(r2).find("decode excluded") != std::string::npos);
    CHECK(bench_csv(r2).find("f32") != std::string::npos);
    CHECK_THROWS_AS(run_bench(cfg, model, plane, 0, 1), DataError);
    CHECK_THROWS_AS(run_bench(cfg, make_mlp({3, 5}, 1), plane, 1, 1), DataError);
}

TEST_CASE("bench: 1080P frames cost roughly 4x the 540P ones") {
    const PipelineConfig cfg;
    Rng rng(2);
    double ms[2];
    const std::size_t dims[2][2] = {{960, 540}, {1920, 1080}};
    for (int i = 0; i < 2; ++i) {
        const auto plane = testutil::random_plane(rng, dims[i][0], dims[i][1], 0.0, 1.0);
        const auto model = make_mlp(cfg.mlp_dims(feature_length(dims[i][0], dims[i][1], cfg.scatter)), 1);
        (void)run_bench(cfg, model, plane, 1, 1);
        const auto r = run_bench(cfg, model, plane, 4, 1);
        ms[i] = 1e3 * r.wall_seconds / 4.0;
    }
    CAPTURE(ms[0]);
    CAPTURE(ms[1]);
    CHECK(ms[1] > ms[0]);
    CHECK(ms[1] / ms[0] >= 2.5);
    CHECK(ms[1] / ms[0] <= 4.5);
}
