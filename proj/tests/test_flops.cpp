#include <cmath>
#include <sstream>

#include "doctest.h"
#include "iwsn/error.hpp"
#include "iwsn/flops.hpp"
#include "iwsn/scattering.hpp"
#include "oracles/oracles.hpp"

using namespace iwsn;
using namespace iwsn::flops;

namespace {

NetworkSpec reference_cnn(std::int64_t w, std::int64_t h) {
    auto spec = parse_network_spec_file(std::string(IWSN_TEST_DATA) + "/cnn_small.net");
    spec.width = w;
    spec.height = h;
    return spec;
}

}  // namespace

TEST_CASE("output size arithmetic") {
    CHECK(conv_out_size(1280, 7, 0, 1) == 1274);
    CHECK(conv_out_size(720, 1, 0, 1) == 720);
    CHECK(conv_out_size(1274, 5, 0, 1) == 1270);
    CHECK(conv_out_size(10, 3, 1, 2) == 5);
    CHECK(conv_out_size(10, 3, 0, 1, 2) == 6);
    CHECK_THROWS_AS(conv_out_size(4, 7, 0, 1), DataError);
    CHECK_THROWS_AS(conv_out_size(4, 1, 0, 0), DataError);
    CHECK_THROWS_AS(conv_out_size(4, 1, -1, 1), DataError);
}

TEST_CASE("layer formulas: worked values") {
    CHECK(conv_flops(1274, 714, 7, 3, 3, true) == 403'878'384ULL);
    CHECK(conv_flops(1, 1, 1, 1, 1, false) == 1);
    CHECK(conv_flops(2, 2, 3, 2, 4, true) == 304);
    CHECK(fc_flops(64, 16, true) == 1040);
    CHECK(fc_flops(1'036'800, 64, true) == 66'355'264ULL);
    CHECK(fc_flops(1, 1, false) == 1);
    CHECK(avgpool_flops(3, 1274, 714, 5) == 68'222'700ULL);
    CHECK(avgpool_flops(1, 1, 1, 1) == 1);
    CHECK(maxpool_flops() == 0);
    CHECK(relu_flops(64) == 64);
    CHECK(relu_flops(16) == 16);
    CHECK(relu_flops(0) == 0);
    CHECK_THROWS_AS(relu_flops(-1), DataError);
    CHECK_THROWS_AS(conv_flops(0, 1, 1, 1, 1, false), DataError);
}

TEST_CASE("layer formulas agree with counting loops") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const int m1 = 1 + static_cast<int>(rng.below(6)), m2 = 1 + static_cast<int>(rng.below(6));
        const int k = 1 + static_cast<int>(rng.below(5));
        const int ci = 1 + static_cast<int>(rng.below(4)), co = 1 + static_cast<int>(rng.below(4));
        const bool bias = rng.below(2) != 0;
        CHECK(conv_flops(m1, m2, k, ci, co, bias) == oracle::conv_flops_loop(m1, m2, k, ci, co, bias));
        CHECK(fc_flops(m1 * 7, co, bias) == oracle::fc_flops_loop(m1 * 7, co, bias));
        CHECK(avgpool_flops(ci, m1, m2, k) == oracle::avgpool_flops_loop(ci, m1, m2, k));
    }
}

TEST_CASE("overflow past 2^63 is rejected") {
    CHECK_THROWS_AS(conv_flops(1 << 30, 1 << 30, 1 << 10, 1, 1, false), DataError);
    CHECK_THROWS_AS(fc_flops(std::int64_t{1} << 62, 4, false), DataError);
}

TEST_CASE("reference CNN totals") {
    const double expect[] = {0.46e9, 0.82e9, 1.85e9};
    const std::int64_t dims[][2] = {{960, 540}, {1280, 720}, {1920, 1080}};
    for (int i = 0; i < 3; ++i) {
        const auto rep = network_flops(reference_cnn(dims[i][0], dims[i][1]));
        CHECK(std::abs(static_cast<double>(rep.total) / expect[i] - 1.0) <= 0.02);
        Count sum = 0;
        for (const auto& l : rep.per_layer) sum += l.flops;
        CHECK(sum == rep.total);
    }
    const auto rep = network_flops(reference_cnn(1280, 720));
    REQUIRE(rep.per_layer.size() == 6);
    CHECK(rep.per_layer[0].flops == 403'878'384ULL);
    CHECK(rep.per_layer[1].flops == 3ULL * 1274 * 714);
    CHECK(rep.per_layer[2].flops == 68'222'700ULL);
    CHECK(rep.per_layer[2].out_width == 1270);
    CHECK(rep.per_layer[3].flops == (3ULL * 1270 * 710 + 1) * 128);
    CHECK(rep.total == 821'091'304ULL);
}

TEST_CASE("three-layer head") {
    const auto rep = network_flops(parse_network_spec_file(std::string(IWSN_TEST_DATA) + "/mlp_head.net"));
    REQUIRE(rep.per_layer.size() == 5);
    CHECK(rep.per_layer[0].flops == 66'355'264ULL);
    CHECK(rep.per_layer[1].flops == 64);
    CHECK(rep.per_layer[2].flops == 1040);
    CHECK(rep.per_layer[3].flops == 16);
    CHECK(rep.per_layer[4].flops == 272);
    CHECK(rep.total == 66'356'656ULL);
    // I*O1 + O1 + (O1+1)*O2 + O2 + (O2+1)*O3, first product without bias
    const Count closed = fc_flops(1'036'800, 64, false) + relu_flops(64) + fc_flops(64, 16, true) + relu_flops(16) +
                         fc_flops(16, 16, true);
    CHECK(closed == 66'356'592ULL);
}

TEST_CASE("theoretical time") {
    FlopsReport r;
    r.total = 81'100'000;
    CHECK(theoretical_time(r, 81.1e6 / 0.87e-3) == doctest::Approx(0.87e-3));
    r.total = 0;
    CHECK(theoretical_time(r, 1e9) == 0.0);
    CHECK_THROWS_AS(theoretical_time(r, 0.0), DataError);
}

TEST_CASE("spec parsing errors carry line numbers and layer indices") {
    std::istringstream bad_kind("input width=8 height=8\nconv2d k=3\nflatten\n");
    try {
        (void)parse_network_spec(bad_kind);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream bad_val("input width=8 height=8\nconv2d k=x\n");
    CHECK_THROWS_AS(parse_network_spec(bad_val), DataError);
    std::istringstream no_input("conv2d k=3\n");
    CHECK_THROWS_AS(parse_network_spec(no_input), DataError);
    std::istringstream unknown_key("input width=8 height=8\nrelu q=2\n");
    CHECK_THROWS_AS(parse_network_spec(unknown_key), DataError);

    std::istringstream shrink("input width=8 height=8 channels=1\nconv2d k=3\nconv2d k=3\nconv2d k=5\n");
    const auto spec = parse_network_spec(shrink);
    try {
        (void)network_flops(spec);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
}

TEST_CASE("pipeline accounting scales with pixel count") {
    ScatterConfig cfg;
    const std::int64_t dims[][2] = {{960, 540}, {1280, 720}, {1920, 1080}};
    double per_pixel[3];
    for (int i = 0; i < 3; ++i) {
        const auto w = dims[i][0], h = dims[i][1];
        const auto len = feature_length(static_cast<std::size_t>(w), static_cast<std::size_t>(h), cfg);
        const auto rep = pipeline_flops(w, h, cfg, {len, 64, 16, 5});
        per_pixel[i] = static_cast<double>(rep.total) / static_cast<double>(w * h);
    }
    CHECK(std::abs(per_pixel[0] / per_pixel[1] - 1.0) <= 0.02);
    CHECK(std::abs(per_pixel[2] / per_pixel[1] - 1.0) <= 0.02);
}

TEST_CASE("pipeline accounting itemises convolutions, moduli and the head") {
    ScatterConfig cfg;  // improved, U1..U3
    const auto rep = pipeline_flops(64, 32, cfg, {10, 4, 3});
    // phi1 -> S0 (25 taps on 32x16), |S0|, psi1 -> U1 (4 taps on 32x16), |U1|, psi2 -> U2, |U2|,
    // phi2 -> L2, |L2|, psi3 -> U3, |U3|, fc, relu, fc
    Count expect = 32 * 16 * 4 + 32 * 16;  // S0 with bior1.1 phi
    expect += 32 * 16 * 4 + 32 * 16;       // U1
    expect += 16 * 8 * 9 + 16 * 8;         // U2 (bior2.2 g has 3 taps)
    expect += 16 * 8 * 25 + 16 * 8;        // L2 (bior2.2 h has 5 taps)
    expect += 8 * 4 * 4 + 8 * 4;           // U3 (bior1.3 g has 2 taps)
    expect += 11 * 4 + 4 + 5 * 3;
    CHECK(rep.total == expect);
}
