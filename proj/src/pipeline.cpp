#include "iwsn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "iwsn/error.hpp"

namespace iwsn {
namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const auto x = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' needs a non-negative integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' needs a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw DataError("config key '" + key + "' needs a boolean, got '" + v + "'");
}

std::vector<float> to_f32(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

void PipelineConfig::validate() const {
    scatter.validate();
    train.validate();
    if (classes.size() < 2) throw DataError("at least two classes are required");
    std::set<std::string> seen(classes.begin(), classes.end());
    if (seen.size() != classes.size()) throw DataError("class names must be unique");
    if (threads < 1) throw DataError("threads must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DataError("train_fraction must be in (0, 1]");
    for (auto h : hidden) {
        if (h == 0) throw DataError("hidden layer widths must be >= 1");
    }
}

std::vector<std::size_t> PipelineConfig::mlp_dims(std::size_t feature_len) const {
    std::vector<std::size_t> dims{feature_len};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(classes.size());
    return dims;
}

std::size_t PipelineConfig::class_index(const std::string& label) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == label) return i;
    }
    throw DataError("label '" + label + "' is not one of the configured classes");
}

PipelineConfig parse_pipeline_config(std::istream& in, PipelineConfig cfg) {
    std::string line;
    std::size_t lineno = 0;
    bool depth_set = false, bases_set = false, selection_set = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "channel") {
            cfg.channel = parse_channel(val);
        } else if (key == "depth") {
            cfg.scatter.depth = static_cast<int>(to_u64(key, val));
            depth_set = true;
        } else if (key == "bases") {
            cfg.scatter.level_bases.clear();
            for (const auto& b : split_list(val)) cfg.scatter.level_bases.push_back(parse_basis(b));
            bases_set = true;
        } else if (key == "boundary") {
            cfg.scatter.boundary = parse_boundary(val);
        } else if (key == "decimate") {
            cfg.scatter.decimate = static_cast<int>(to_u64(key, val));
        } else if (key == "variant") {
            cfg.scatter.variant = parse_variant(val);
        } else if (key == "smooth_with") {
            cfg.scatter.smooth_with = parse_smooth_with(val);
        } else if (key == "decimate_smoothing") {
            cfg.scatter.decimate_smoothing = to_bool(key, val);
        } else if (key == "selection") {
            cfg.scatter.selection = Selection::parse(val);
            selection_set = true;
        } else if (key == "classes") {
            cfg.classes = split_list(val);
        } else if (key == "width") {
            cfg.width = to_u64(key, val);
        } else if (key == "height") {
            cfg.height = to_u64(key, val);
        } else if (key == "hidden") {
            cfg.hidden.clear();
            for (const auto& h : split_list(val)) cfg.hidden.push_back(to_u64(key, h));
        } else if (key == "model") {
            cfg.model_path = val;
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(to_u64(key, val));
        } else if (key == "seed") {
            cfg.seed = to_u64(key, val);
            cfg.train.seed = cfg.seed;
        } else if (key == "train_fraction") {
            cfg.train_fraction = to_double(key, val);
        } else if (key == "lr") {
            cfg.train.learning_rate = to_double(key, val);
        } else if (key == "momentum") {
            cfg.train.momentum = to_double(key, val);
        } else if (key == "epochs") {
            cfg.train.epochs = static_cast<int>(to_u64(key, val));
        } else if (key == "batch_size") {
            cfg.train.batch_size = to_u64(key, val);
        } else if (key == "steps_per_epoch") {
            cfg.train.steps_per_epoch = to_u64(key, val);
        } else {
            throw DataError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    // A depth change without explicit bases/selection keeps the defaults consistent.
    if (depth_set && !bases_set) {
        cfg.scatter.level_bases.assign(static_cast<std::size_t>(std::max(cfg.scatter.depth, 0)), Basis::bior1_1);
        const std::vector<Basis> preferred{Basis::bior1_1, Basis::bior2_2, Basis::bior1_3};
        for (std::size_t i = 0; i < cfg.scatter.level_bases.size() && i < preferred.size(); ++i) {
            cfg.scatter.level_bases[i] = preferred[i];
        }
    }
    if (depth_set && !selection_set) cfg.scatter.selection = Selection::modulus_levels(cfg.scatter.depth);
    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    try {
        return parse_pipeline_config(in, std::move(base));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string format_pipeline_config(const PipelineConfig& c) {
    std::ostringstream os;
    auto join = [](const auto& items, auto&& fn) {
        std::string s;
        for (const auto& it : items) {
            if (!s.empty()) s += ',';
            s += fn(it);
        }
        return s;
    };
    os << "channel=" << channel_name(c.channel) << '\n'
       << "depth=" << c.scatter.depth << '\n'
       << "bases=" << join(c.scatter.level_bases, [](Basis b) { return std::string(basis_name(b)); }) << '\n'
       << "boundary=" << boundary_name(c.scatter.boundary) << '\n'
       << "decimate=" << c.scatter.decimate << '\n'
       << "variant=" << variant_name(c.scatter.variant) << '\n'
       << "smooth_with=" << smooth_with_name(c.scatter.smooth_with) << '\n'
       << "decimate_smoothing=" << (c.scatter.decimate_smoothing ? 1 : 0) << '\n'
       << "selection=" << c.scatter.selection.to_string() << '\n'
       << "classes=" << join(c.classes, [](const std::string& s) { return s; }) << '\n'
       << "width=" << c.width << '\n'
       << "height=" << c.height << '\n'
       << "hidden=" << join(c.hidden, [](std::size_t h) { return std::to_string(h); }) << '\n';
    if (!c.model_path.empty()) os << "model=" << c.model_path << '\n';
    os << "threads=" << c.threads << '\n'
       << "seed=" << c.seed << '\n'
       << "train_fraction=" << c.train_fraction << '\n'
       << "lr=" << c.train.learning_rate << '\n'
       << "momentum=" << c.train.momentum << '\n'
       << "epochs=" << c.train.epochs << '\n'
       << "batch_size=" << c.train.batch_size << '\n'
       << "steps_per_epoch=" << c.train.steps_per_epoch << '\n';
    return os.str();
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<float> image_features(const ImagePlane& plane, const ScatterConfig& config) {
    return to_f32(extract_features(plane, config));
}

ExtractSummary run_extract(const PipelineConfig& config, const std::string& manifest_path,
                           const std::string& out_path) {
    config.validate();
    const auto records = read_manifest(manifest_path);
    std::vector<std::uint64_t> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(config.class_index(r.label));

    ExtractSummary summary;
    summary.width = config.width;
    summary.height = config.height;
    std::optional<FeatureWriter> writer;
    auto open_writer = [&] {
        FeatureHeader h;
        h.width = summary.width;
        h.height = summary.height;
        h.scatter = config.scatter;
        h.channel = config.channel;
        h.vector_length = summary.vector_length;
        writer.emplace(out_path, h);
    };
    if (summary.width > 0 && summary.height > 0) {
        summary.vector_length = feature_length(summary.width, summary.height, config.scatter);
        open_writer();
    }

    struct Outcome {
        std::size_t width = 0, height = 0;
        std::variant<std::vector<float>, std::string> value;
    };
    constexpr std::size_t kChunk = 64;
    for (std::size_t begin = 0; begin < records.size(); begin += kChunk) {
        const std::size_t end = std::min(records.size(), begin + kChunk);
        std::vector<Outcome> out(end - begin);
        parallel_for(end - begin, config.threads, [&](std::size_t k) {
            const std::size_t i = begin + k;
            try {
                const auto plane = load_image_channel(resolve_record_path(manifest_path, records[i]), config.channel);
                out[k].width = plane.width();
                out[k].height = plane.height();
                if (config.width > 0 && (plane.width() != config.width || plane.height() != config.height)) {
                    out[k].value = "image is " + std::to_string(plane.width()) + "x" + std::to_string(plane.height()) +
                                   ", config expects " + std::to_string(config.width) + "x" +
                                   std::to_string(config.height);
                    return;
                }
                out[k].value = image_features(plane, config.scatter);
            } catch (const std::exception& e) {
                out[k].value = std::string(e.what());
            }
        });
        for (std::size_t k = 0; k < out.size(); ++k) {
            const auto& rec = records[begin + k];
            if (auto* err = std::get_if<std::string>(&out[k].value)) {
                summary.failures.emplace_back(rec.path, *err);
                continue;
            }
            if (!writer) {
                summary.width = out[k].width;
                summary.height = out[k].height;
                summary.vector_length = feature_length(summary.width, summary.height, config.scatter);
                open_writer();
            }
            if (out[k].width != summary.width || out[k].height != summary.height) {
                summary.failures.emplace_back(rec.path, "image is " + std::to_string(out[k].width) + "x" +
                                                            std::to_string(out[k].height) + ", run uses " +
                                                            std::to_string(summary.width) + "x" +
                                                            std::to_string(summary.height));
                continue;
            }
            writer->append(std::get<std::vector<float>>(out[k].value), labels[begin + k]);
            ++summary.written;
        }
    }
    if (!writer) open_writer();
    writer->close();
    return summary;
}

ConfusionMatrix evaluate(const MlpModel& model, const Dataset& data, const std::vector<std::size_t>& rows,
                         const std::vector<std::string>& classes) {
    ConfusionMatrix m(classes);
    for (std::size_t i : rows) {
        const auto scores = mlp_forward(model, data.row(i));
        m.add(data.labels[i], argmax(scores));
    }
    return m;
}

namespace {

void check_header(const PipelineConfig& config, const FeatureHeader& h) {
    if (!(h.scatter == config.scatter) || h.channel != config.channel) {
        throw DataError("feature file was extracted with a different scattering/channel config");
    }
    if (config.width > 0 && (h.width != config.width || h.height != config.height)) {
        throw DataError("feature file holds " + std::to_string(h.width) + "x" + std::to_string(h.height) +
                        " images, config expects " + std::to_string(config.width) + "x" + std::to_string(config.height));
    }
    if (h.width > 0 && h.vector_length != feature_length(h.width, h.height, config.scatter)) {
        throw DataError("feature length " + std::to_string(h.vector_length) + " does not match the config");
    }
}

}  // namespace

TrainReport run_train(const PipelineConfig& config, const std::string& feature_path, const std::string& model_out) {
    config.validate();
    const FeatureFile file = read_feature_file(feature_path);
    check_header(config, file.header);
    const Dataset data = to_dataset(file);
    for (std::size_t l : data.labels) {
        if (l >= config.classes.size()) throw DataError("feature label " + std::to_string(l) + " out of class range");
    }
    if (std::set<std::size_t>(data.labels.begin(), data.labels.end()).size() < 2) {
        throw DataError("training needs at least two classes present");
    }

    TrainReport report{.result = {}, .split = split_by_class(data.labels, config.train_fraction, config.seed),
                       .train_matrix = ConfusionMatrix(config.classes), .test_matrix = ConfusionMatrix(config.classes)};
    Dataset train_set;
    train_set.dim = data.dim;
    for (std::size_t i : report.split.train) train_set.push(data.row(i), data.labels[i]);

    TrainConfig tc = config.train;
    tc.seed = config.seed;
    report.result = train(make_mlp(config.mlp_dims(data.dim), config.seed), train_set, tc);
    report.train_matrix = evaluate(report.result.model, data, report.split.train, config.classes);
    report.test_matrix = evaluate(report.result.model, data, report.split.test, config.classes);
    if (!model_out.empty()) save_model(report.result.model, model_out);
    return report;
}

ConfusionMatrix run_eval(const PipelineConfig& config, const MlpModel& model, const std::string& feature_path,
                         EvalSplit which) {
    config.validate();
    const FeatureFile file = read_feature_file(feature_path);
    check_header(config, file.header);
    const Dataset data = to_dataset(file);
    if (model.input_len() != data.dim || model.classes() != config.classes.size()) {
        throw DataError("model dims do not match the feature file / class list");
    }
    std::vector<std::size_t> rows;
    if (which == EvalSplit::all) {
        for (std::size_t i = 0; i < data.size(); ++i) rows.push_back(i);
    } else {
        const Split s = split_by_class(data.labels, config.train_fraction, config.seed);
        rows = (which == EvalSplit::train) ? s.train : s.test;
    }
    return evaluate(model, data, rows, config.classes);
}

InferResult infer_plane(const PipelineConfig& config, const MlpModel& model, const ImagePlane& plane) {
    if (model.classes() != config.classes.size()) {
        throw DataError("model has " + std::to_string(model.classes()) + " outputs, config lists " +
                        std::to_string(config.classes.size()) + " classes");
    }
    if (config.width > 0 && (plane.width() != config.width || plane.height() != config.height)) {
        throw DataError("image is " + std::to_string(plane.width()) + "x" + std::to_string(plane.height()) +
                        ", config expects " + std::to_string(config.width) + "x" + std::to_string(config.height));
    }
    const auto f = image_features(plane, config.scatter);
    const std::vector<double> x(f.begin(), f.end());
    InferResult r;
    r.scores = mlp_forward(model, x);
    r.class_index = argmax(r.scores);
    r.class_name = config.classes[r.class_index];
    return r;
}

InferResult run_infer(const PipelineConfig& config, const MlpModel& model, const std::string& image_path) {
    config.validate();
    InferResult r = infer_plane(config, model, load_image_channel(image_path, config.channel));
    r.path = image_path;
    return r;
}

std::string format_infer(const InferResult& r) {
    std::string out = r.path + '\t' + r.class_name + '\t';
    char buf[40];
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r.scores[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

BenchReport run_bench(const PipelineConfig& config, const MlpModel& model, const ImagePlane& plane,
                      std::size_t frames, unsigned threads, Precision precision, std::optional<double> peak_flops) {
    config.validate();
    if (frames < 1) throw DataError("bench needs at least one frame");
    const std::size_t len = feature_length(plane.width(), plane.height(), config.scatter);
    if (model.input_len() != len) {
        throw DataError("model expects " + std::to_string(model.input_len()) + " features, the config yields " +
                        std::to_string(len));
    }
    const MlpModelF32 model32 = to_f32(model);
    using clock = std::chrono::steady_clock;
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), frames);
    std::vector<double> extract_s(workers, 0.0), classify_s(workers, 0.0);
    std::vector<double> sink(workers, 0.0);

    const auto start = clock::now();
    parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
        for (std::size_t f = w; f < frames; f += workers) {
            const auto t0 = clock::now();
            const auto feats = image_features(plane, config.scatter);
            const auto t1 = clock::now();
            if (precision == Precision::f32) {
                const auto scores = mlp_forward_f32(model32, feats);
                sink[w] += scores[0];
            } else {
                const std::vector<double> x(feats.begin(), feats.end());
                const auto scores = mlp_forward(model, x);
                sink[w] += scores[0];
            }
            const auto t2 = clock::now();
            extract_s[w] += std::chrono::duration<double>(t1 - t0).count();
            classify_s[w] += std::chrono::duration<double>(t2 - t1).count();
        }
    });
    const double wall = std::chrono::duration<double>(clock::now() - start).count();

    BenchReport r;
    r.width = plane.width();
    r.height = plane.height();
    r.frames = frames;
    r.threads = static_cast<unsigned>(workers);
    r.precision = precision;
    r.wall_seconds = wall;
    r.fps = static_cast<double>(frames) / wall;
    double ex = 0.0, cl = 0.0;
    for (std::size_t w = 0; w < workers; ++w) {
        ex += extract_s[w];
        cl += classify_s[w];
    }
    r.extract_ms = ex * 1e3 / static_cast<double>(frames);
    r.classify_ms = cl * 1e3 / static_cast<double>(frames);
    if (peak_flops) r.efficiency = efficiency(r.fps, *peak_flops);
    return r;
}

std::string format_bench(const BenchReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "timed: channel plane -> scattering -> feature vector -> MLP (image decode excluded)\n"
       << "image\t" << r.width << "x" << r.height << '\n'
       << "frames\t" << r.frames << '\n'
       << "threads\t" << r.threads << '\n'
       << "precision\t" << (r.precision == Precision::f32 ? "f32" : "f64") << '\n'
       << "wall_seconds\t" << r.wall_seconds << '\n'
       << "fps\t" << r.fps << '\n'
       << "ms_per_frame\t" << 1e3 / r.fps << '\n'
       << "extract_ms\t" << r.extract_ms << '\n'
       << "classify_ms\t" << r.classify_ms << '\n';
    if (r.efficiency) os << "efficiency_fps_per_gflops\t" << *r.efficiency << '\n';
    return os.str();
}

std::string bench_csv(const BenchReport& r) {
    std::ostringstream os;
    os.precision(9);
    os << "width,height,frames,threads,precision,wall_seconds,fps,extract_ms,classify_ms,efficiency\n"
       << r.width << ',' << r.height << ',' << r.frames << ',' << r.threads << ','
       << (r.precision == Precision::f32 ? "f32" : "f64") << ',' << r.wall_seconds << ',' << r.fps << ','
       << r.extract_ms << ',' << r.classify_ms << ',';
    if (r.efficiency) os << *r.efficiency;
    os << '\n';
    return os.str();
}

}  // namespace iwsn
