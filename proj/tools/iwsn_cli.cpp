// iwsn: synth / extract / train / infer / eval / bench / flops
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iwsn/dataset.hpp"
#include "iwsn/error.hpp"
#include "iwsn/flops.hpp"
#include "iwsn/pipeline.hpp"
#include "iwsn/wavelet_bank.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::string csv_path;
};

iwsn::PipelineConfig load_config(const Globals& g) {
    iwsn::PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = iwsn::load_pipeline_config(g.config_path);
    if (g.threads) cfg.threads = *g.threads;
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.train.seed = *g.seed;
    }
    cfg.validate();
    return cfg;
}

void write_csv(const Globals& g, const std::string& text) {
    if (g.csv_path.empty()) return;
    std::ofstream out(g.csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw iwsn::DataError("cannot open '" + g.csv_path + "' for writing");
    out << text;
    if (!out) throw iwsn::DataError("failed writing '" + g.csv_path + "'");
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void dump_filters(const iwsn::ScatterConfig& sc) {
    std::vector<iwsn::Basis> seen;
    for (auto b : sc.level_bases) {
        if (std::find(seen.begin(), seen.end(), b) != seen.end()) continue;
        seen.push_back(b);
        const auto pair = iwsn::make_filter_pair(b);
        std::cout << "# " << iwsn::basis_name(b) << " h\n";
        for (double v : pair.h) std::cout << g17(v) << '\n';
        std::cout << "# " << iwsn::basis_name(b) << " g\n";
        for (double v : pair.g) std::cout << g17(v) << '\n';
    }
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

iwsn::MlpModel load_checked_model(const iwsn::PipelineConfig& cfg, const std::string& path) {
    auto model = iwsn::load_model(path);
    if (model.classes() != cfg.classes.size()) {
        throw iwsn::DataError("model has " + std::to_string(model.classes()) + " outputs, config lists " +
                              std::to_string(cfg.classes.size()) + " classes");
    }
    return model;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Improved wavelet scattering network: features, classifier, FLOPs model"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "key=value config file");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "seed for synth, split and init");
    app.add_option("--csv", g.csv_path, "also write the report as CSV");

    // synth
    auto* synth = app.add_subcommand("synth", "write the seeded synthetic 5-class PPM set and manifest");
    std::string synth_out;
    iwsn::SynthSpec spec;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", spec.classes)->check(CLI::Range(2, 5));
    synth->add_option("--per-class", spec.per_class);
    synth->add_option("--width", spec.width);
    synth->add_option("--height", spec.height);

    // extract
    auto* extract = app.add_subcommand("extract", "manifest -> binary feature file");
    std::string manifest, features_out;
    bool dump = false;
    extract->add_option("--manifest", manifest);
    extract->add_option("--out", features_out);
    extract->add_flag("--dump-filters", dump, "print the configured filter taps and exit");

    // train
    auto* trainc = app.add_subcommand("train", "train the MLP on a feature file");
    std::string train_features, model_out;
    trainc->add_option("--features", train_features)->required();
    trainc->add_option("--model", model_out, "model output path (default: config model=)");

    // infer
    auto* infer = app.add_subcommand("infer", "classify images");
    std::string infer_model;
    std::vector<std::string> images;
    infer->add_option("--model", infer_model);
    infer->add_option("images", images, "PPM/PGM images")->required();

    // eval
    auto* evalc = app.add_subcommand("eval", "confusion matrix and TPR/PPV/ACC on a feature file");
    std::string eval_model, eval_features, split_name = "test";
    evalc->add_option("--model", eval_model);
    evalc->add_option("--features", eval_features)->required();
    evalc->add_option("--split", split_name)->check(CLI::IsMember({"train", "test", "all"}));

    // bench
    auto* bench = app.add_subcommand("bench", "time scattering + classification per frame (decode excluded)");
    std::string bench_model, bench_image, precision = "f32";
    std::size_t frames = 100, bench_w = 1280, bench_h = 720;
    std::optional<double> bench_peak;
    bench->add_option("--model", bench_model, "model file (default: seeded untrained model)");
    bench->add_option("--image", bench_image, "input image (default: seeded noise plane)");
    bench->add_option("--width", bench_w);
    bench->add_option("--height", bench_h);
    bench->add_option("--frames", frames)->check(CLI::PositiveNumber);
    bench->add_option("--precision", precision)->check(CLI::IsMember({"f64", "f32"}));
    bench->add_option("--peak", bench_peak, "device peak FLOPS for the efficiency figure");

    // flops
    auto* flopsc = app.add_subcommand("flops", "analytic FLOPs of a network spec or of the pipeline");
    std::string net_spec;
    bool pipeline = false, flops_dump = false;
    std::int64_t fw = 1280, fh = 720;
    std::optional<double> peak;
    flopsc->add_option("--spec", net_spec, "layer list file");
    flopsc->add_flag("--pipeline", pipeline, "count the configured scattering + MLP pipeline");
    auto* fw_opt = flopsc->add_option("--width", fw, "input width (overrides a spec's input line)");
    auto* fh_opt = flopsc->add_option("--height", fh, "input height");
    flopsc->add_option("--peak", peak, "device peak FLOPS; adds theoretical time");
    flopsc->add_flag("--dump-filters", flops_dump, "print the configured filter taps and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*synth) {
            if (g.seed) spec.seed = *g.seed;
            const auto records = iwsn::synth_dataset(spec, synth_out);
            std::cout << "wrote " << records.size() << " images + manifest.tsv to " << synth_out << '\n';
            if (!g.csv_path.empty()) {
                std::string csv = "path,label\n";
                for (const auto& r : records) csv += r.path + ',' + r.label + '\n';
                write_csv(g, csv);
            }
            return 0;
        }

        const auto cfg = load_config(g);

        if (*extract) {
            if (dump) {
                dump_filters(cfg.scatter);
                return 0;
            }
            require(manifest, "--manifest");
            require(features_out, "--out");
            const auto s = iwsn::run_extract(cfg, manifest, features_out);
            std::cout << "records\t" << s.written << "\nimage\t" << s.width << "x" << s.height << "\nvector_length\t"
                      << s.vector_length << "\nfailures\t" << s.failures.size() << '\n';
            for (const auto& [path, why] : s.failures) std::cerr << "skipped " << path << ": " << why << '\n';
            std::string csv = "path,status,reason\n";
            for (const auto& [path, why] : s.failures) csv += path + ",skipped,\"" + why + "\"\n";
            write_csv(g, csv);
            return s.failures.empty() ? 0 : kData;
        }

        if (*trainc) {
            const std::string out = model_out.empty() ? cfg.model_path : model_out;
            require(out, "--model");
            const auto rep = iwsn::run_train(cfg, train_features, out);
            const auto& loss = rep.result.loss_history;
            for (std::size_t e = 0; e < loss.size(); ++e) std::cout << "epoch\t" << e + 1 << "\tloss\t" << g17(loss[e]) << '\n';
            const auto tr = iwsn::overall_accuracy(rep.train_matrix);
            const auto te = iwsn::overall_accuracy(rep.test_matrix);
            std::cout << "train_samples\t" << rep.split.train.size() << "\ntest_samples\t" << rep.split.test.size()
                      << "\ntrain_accuracy\t" << (tr ? g17(*tr) : "nan") << "\ntest_accuracy\t"
                      << (te ? g17(*te) : "nan") << "\n\n"
                      << iwsn::format_evaluation(rep.test_matrix);
            std::string csv = "epoch,loss\n";
            for (std::size_t e = 0; e < loss.size(); ++e) csv += std::to_string(e + 1) + ',' + g17(loss[e]) + '\n';
            write_csv(g, csv);
            std::cout << "model\t" << out << '\n';
            return 0;
        }

        if (*infer) {
            const std::string path = infer_model.empty() ? cfg.model_path : infer_model;
            require(path, "--model");
            const auto model = load_checked_model(cfg, path);
            std::string csv = "path,class,scores\n";
            for (const auto& img : images) {
                const auto r = iwsn::run_infer(cfg, model, img);
                const auto line = iwsn::format_infer(r);
                std::cout << line << '\n';
                std::string scores;
                for (std::size_t i = 0; i < r.scores.size(); ++i) scores += (i ? " " : "") + g17(r.scores[i]);
                csv += r.path + ',' + r.class_name + ',' + scores + '\n';
            }
            write_csv(g, csv);
            return 0;
        }

        if (*evalc) {
            const std::string path = eval_model.empty() ? cfg.model_path : eval_model;
            require(path, "--model");
            const auto model = load_checked_model(cfg, path);
            const auto which = split_name == "train" ? iwsn::EvalSplit::train
                               : split_name == "all" ? iwsn::EvalSplit::all
                                                     : iwsn::EvalSplit::test;
            const auto m = iwsn::run_eval(cfg, model, eval_features, which);
            std::cout << "split\t" << split_name << '\n' << iwsn::format_evaluation(m);
            write_csv(g, iwsn::evaluation_csv(m));
            return 0;
        }

        if (*bench) {
            iwsn::ImagePlane plane;
            if (!bench_image.empty()) {
                plane = iwsn::load_image_channel(bench_image, cfg.channel);
            } else {
                if (bench_w == 0 || bench_h == 0) throw iwsn::DataError("bench dims must be positive");
                plane = iwsn::ImagePlane(bench_w, bench_h);
                iwsn::Rng rng(cfg.seed);
                for (double& v : plane.values()) v = rng.uniform();
            }
            const std::size_t len = iwsn::feature_length(plane.width(), plane.height(), cfg.scatter);
            const std::string path = bench_model.empty() ? cfg.model_path : bench_model;
            const auto model = path.empty() ? iwsn::make_mlp(cfg.mlp_dims(len), cfg.seed)
                                            : load_checked_model(cfg, path);
            const unsigned threads = g.threads ? *g.threads : 1u;
            const auto r = iwsn::run_bench(cfg, model, plane, frames, threads,
                                           precision == "f32" ? iwsn::Precision::f32 : iwsn::Precision::f64,
                                           bench_peak);
            std::cout << iwsn::format_bench(r);
            write_csv(g, iwsn::bench_csv(r));
            return 0;
        }

        if (*flopsc) {
            if (flops_dump) {
                dump_filters(cfg.scatter);
                return 0;
            }
            if (pipeline == !net_spec.empty()) throw UsageError("flops needs exactly one of --spec FILE or --pipeline");
            iwsn::flops::FlopsReport rep;
            if (pipeline) {
                if (fw <= 0 || fh <= 0) throw iwsn::DataError("pipeline dims must be positive");
                const auto len = iwsn::feature_length(static_cast<std::size_t>(fw), static_cast<std::size_t>(fh),
                                                      cfg.scatter);
                rep = iwsn::flops::pipeline_flops(fw, fh, cfg.scatter, cfg.mlp_dims(len));
            } else {
                auto net = iwsn::flops::parse_network_spec_file(net_spec);
                if (fw_opt->count()) net.width = fw;
                if (fh_opt->count()) net.height = fh;
                rep = iwsn::flops::network_flops(net);
            }
            if (peak) rep.theoretical_time_s = iwsn::flops::theoretical_time(rep, *peak);
            std::cout << iwsn::flops::format_report(rep);
            write_csv(g, iwsn::flops::report_csv(rep));
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const iwsn::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
