// iwsn._core: thin numpy-facing wrappers over the C++ library.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "iwsn/classifier.hpp"
#include "iwsn/dataset.hpp"
#include "iwsn/error.hpp"
#include "iwsn/flops.hpp"
#include "iwsn/metrics.hpp"
#include "iwsn/pipeline.hpp"
#include "iwsn/ppm.hpp"
#include "iwsn/scattering.hpp"
#include "iwsn/wavelet_bank.hpp"

namespace py = pybind11;
using namespace iwsn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImagePlane to_plane(const Array& a) {
    if (a.ndim() != 2) throw DataError("expected a 2-D array (height, width)");
    ImagePlane p(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), p.values().begin());
    return p;
}

Array to_array(const ImagePlane& p) {
    Array a({p.height(), p.width()});
    std::copy(p.values().begin(), p.values().end(), a.mutable_data());
    return a;
}

Array to_array(const std::vector<double>& v) {
    Array a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<double> to_vec(const Array& a) { return {a.data(), a.data() + a.size()}; }

// Keyword form of ScatterConfig; unset bases follow the depth.
ScatterConfig make_config(const std::string& variant, int depth, const std::vector<std::string>& bases,
                          const std::string& boundary, int decimate, const std::string& smooth_with,
                          bool decimate_smoothing, const std::string& selection) {
    ScatterConfig c;
    c.variant = parse_variant(variant);
    c.depth = depth;
    c.level_bases.clear();
    if (bases.empty()) {
        const Basis defaults[] = {Basis::bior1_1, Basis::bior2_2, Basis::bior1_3};
        for (int m = 0; m < depth; ++m) c.level_bases.push_back(defaults[std::min(m, 2)]);
    } else {
        for (const auto& b : bases) c.level_bases.push_back(parse_basis(b));
    }
    c.boundary = parse_boundary(boundary);
    c.decimate = decimate;
    c.smooth_with = parse_smooth_with(smooth_with);
    c.decimate_smoothing = decimate_smoothing;
    c.selection = selection.empty() ? Selection::modulus_levels(depth) : Selection::parse(selection);
    c.validate();
    return c;
}

#define SCATTER_KWARGS                                                                                        \
    py::kw_only(), py::arg("variant") = "improved", py::arg("depth") = 3,                                     \
        py::arg("bases") = std::vector<std::string>{}, py::arg("boundary") = "symmetric", py::arg("decimate") = 2, \
        py::arg("smooth_with") = "first", py::arg("decimate_smoothing") = true, py::arg("selection") = ""

PipelineConfig pipeline_config(const std::string& text) {
    std::istringstream in(text);
    return parse_pipeline_config(in);
}

py::dict report_dict(const flops::FlopsReport& r) {
    py::list layers;
    for (const auto& l : r.per_layer) {
        py::dict d;
        d["label"] = l.label;
        d["flops"] = l.flops;
        d["out_channels"] = l.out_channels;
        d["out_width"] = l.out_width;
        d["out_height"] = l.out_height;
        layers.append(d);
    }
    py::dict out;
    out["total"] = r.total;
    out["layers"] = layers;
    return out;
}

ConfusionMatrix matrix_from(const std::vector<std::vector<std::uint64_t>>& counts, std::vector<std::string> labels) {
    if (labels.empty())
        for (std::size_t i = 0; i < counts.size(); ++i) labels.push_back("c" + std::to_string(i));
    ConfusionMatrix m(labels);
    if (counts.size() != labels.size()) throw DataError("counts must be square with one row per label");
    for (std::size_t a = 0; a < counts.size(); ++a) {
        if (counts[a].size() != labels.size()) throw DataError("counts must be square with one row per label");
        for (std::size_t p = 0; p < counts[a].size(); ++p) m.add(a, p, counts[a][p]);
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Improved wavelet scattering network: features, MLP, FLOPs model, metrics";

    static py::exception<DataError> data_error(m, "DataError", PyExc_ValueError);
    static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NumericError& e) {
            py::set_error(numeric_error, e.what());
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        }
    });

    // wavelet bank
    m.def("bases", [] {
        std::vector<std::string> out;
        for (auto b : kAllBases) out.emplace_back(basis_name(b));
        return out;
    });
    m.def(
        "filter_pair",
        [](const std::string& basis) {
            const auto f = make_filter_pair(basis);
            return py::make_tuple(to_array(f.h), to_array(f.g));
        },
        py::arg("basis"), "decomposition (h, g) taps for a basis name such as 'bior2.2'");

    // scattering
    m.def(
        "scatter",
        [](const Array& x, const std::string& variant, int depth, const std::vector<std::string>& bases,
           const std::string& boundary, int decimate, const std::string& smooth_with, bool decimate_smoothing,
           const std::string& selection) {
            const auto cfg = make_config(variant, depth, bases, boundary, decimate, smooth_with, decimate_smoothing,
                                         selection);
            const auto out = iwsn::scatter(to_plane(x), cfg);
            py::list u, s;
            for (const auto& p : out.u_levels) u.append(to_array(p));
            for (const auto& p : out.s_levels) s.append(to_array(p));
            py::dict d;
            d["S0"] = to_array(out.s0);
            d["U"] = u;
            d["S"] = s;
            return d;
        },
        py::arg("plane"), SCATTER_KWARGS, "full cascade: {'S0': array, 'U': [U1..], 'S': [S1..]}");
    m.def(
        "extract_features",
        [](const Array& x, const std::string& variant, int depth, const std::vector<std::string>& bases,
           const std::string& boundary, int decimate, const std::string& smooth_with, bool decimate_smoothing,
           const std::string& selection) {
            const auto cfg = make_config(variant, depth, bases, boundary, decimate, smooth_with, decimate_smoothing,
                                         selection);
            return to_array(iwsn::extract_features(to_plane(x), cfg));
        },
        py::arg("plane"), SCATTER_KWARGS);
    m.def(
        "feature_length",
        [](std::size_t width, std::size_t height, const std::string& variant, int depth,
           const std::vector<std::string>& bases, const std::string& boundary, int decimate,
           const std::string& smooth_with, bool decimate_smoothing, const std::string& selection) {
            return iwsn::feature_length(width, height,
                                        make_config(variant, depth, bases, boundary, decimate, smooth_with,
                                                    decimate_smoothing, selection));
        },
        py::arg("width"), py::arg("height"), SCATTER_KWARGS);

    // images and data
    m.def(
        "load_channel", [](const std::string& path, const std::string& channel) {
            return to_array(load_image_channel(path, parse_channel(channel)));
        },
        py::arg("path"), py::arg("channel") = "B", "one channel of a P6/P5 image scaled to [0, 1]");
    m.def(
        "synth_dataset",
        [](const std::string& out_dir, std::size_t classes, std::size_t per_class, std::size_t width,
           std::size_t height, std::uint64_t seed) {
            SynthSpec s{classes, per_class, width, height, seed};
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& r : iwsn::synth_dataset(s, out_dir)) out.emplace_back(r.path, r.label);
            return out;
        },
        py::arg("out_dir"), py::kw_only(), py::arg("classes") = 5, py::arg("per_class") = 20,
        py::arg("width") = 128, py::arg("height") = 128, py::arg("seed") = 7);

    // FLOPs
    m.def("conv_flops", &flops::conv_flops, py::arg("m1"), py::arg("m2"), py::arg("k"), py::arg("c_in"),
          py::arg("c_out"), py::arg("bias"));
    m.def("fc_flops", &flops::fc_flops, py::arg("inputs"), py::arg("outputs"), py::arg("bias"));
    m.def("avgpool_flops", &flops::avgpool_flops, py::arg("c_in"), py::arg("w_in"), py::arg("h_in"), py::arg("k"));
    m.def("relu_flops", &flops::relu_flops, py::arg("elements"));
    m.def(
        "network_flops",
        [](const std::string& spec_text) {
            std::istringstream in(spec_text);
            return report_dict(flops::network_flops(flops::parse_network_spec(in)));
        },
        py::arg("spec_text"), "count a layer-list network spec given as text");
    m.def(
        "pipeline_flops",
        [](std::int64_t width, std::int64_t height, const std::string& config_text) {
            const auto cfg = pipeline_config(config_text);
            const auto len = iwsn::feature_length(static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                                                  cfg.scatter);
            return report_dict(flops::pipeline_flops(width, height, cfg.scatter, cfg.mlp_dims(len)));
        },
        py::arg("width"), py::arg("height"), py::arg("config_text") = "");

    // classifier
    py::class_<MlpModel>(m, "MlpModel")
        .def_readonly("dims", &MlpModel::dims)
        .def_readonly("seed", &MlpModel::seed)
        .def("forward", [](const MlpModel& self, const Array& x) { return to_array(mlp_forward(self, to_vec(x))); })
        .def("weights",
             [](const MlpModel& self, std::size_t layer) {
                 if (layer >= self.layers.size()) throw DataError("no such layer");
                 const auto& l = self.layers[layer];
                 Array a({l.inputs, l.outputs});
                 std::copy(l.weights.begin(), l.weights.end(), a.mutable_data());
                 return a;
             })
        .def("bias",
             [](const MlpModel& self, std::size_t layer) {
                 if (layer >= self.layers.size()) throw DataError("no such layer");
                 return to_array(self.layers[layer].bias);
             })
        .def("save", [](const MlpModel& self, const std::string& path) { save_model(self, path); })
        .def_static("load", &load_model)
        .def("__eq__", [](const MlpModel& a, const MlpModel& b) { return a == b; });
    m.def("make_mlp", &make_mlp, py::arg("dims"), py::arg("seed"));
    m.def("zero_mlp", &zero_mlp, py::arg("dims"));
    m.def(
        "train",
        [](const MlpModel& model, const Array& x, const std::vector<std::size_t>& labels, double lr,
           double momentum, int epochs, std::size_t batch_size, std::uint64_t seed) {
            if (x.ndim() != 2 || static_cast<std::size_t>(x.shape(0)) != labels.size())
                throw DataError("features must be (n, dim) with one label per row");
            Dataset d;
            d.dim = static_cast<std::size_t>(x.shape(1));
            d.features = to_vec(x);
            d.labels = labels;
            TrainConfig c;
            c.learning_rate = lr;
            c.momentum = momentum;
            c.epochs = epochs;
            c.batch_size = batch_size;
            c.seed = seed;
            py::gil_scoped_release nogil;
            auto r = iwsn::train(model, d, c);
            return std::make_pair(std::move(r.model), std::move(r.loss_history));
        },
        py::arg("model"), py::arg("features"), py::arg("labels"), py::kw_only(), py::arg("lr") = 0.001,
        py::arg("momentum") = 0.9, py::arg("epochs") = 200, py::arg("batch_size") = 32, py::arg("seed") = 0,
        "mini-batch SGD with momentum; returns (model, per-epoch loss)");
    m.def("softmax", [](const Array& z) { return to_array(iwsn::softmax(to_vec(z))); });
    m.def(
        "cross_entropy", [](const Array& z, std::size_t target) { return softmax_cross_entropy(to_vec(z), target); },
        py::arg("scores"), py::arg("target"));

    // metrics
    m.def(
        "class_metrics",
        [](const std::vector<std::vector<std::uint64_t>>& counts, std::size_t positive) {
            const auto t = binary_tally(matrix_from(counts, {}), positive);
            py::dict d;
            d["tp"] = t.tp;
            d["fp"] = t.fp;
            d["fn"] = t.fn;
            d["tn"] = t.tn;
            d["tpr"] = tpr(t);
            d["ppv"] = ppv(t);
            d["acc"] = acc(t);
            return d;
        },
        py::arg("counts"), py::arg("positive"), "one-vs-rest tally of a confusion matrix (rows = actual)");
    m.def(
        "evaluation_report",
        [](const std::vector<std::vector<std::uint64_t>>& counts, const std::vector<std::string>& labels) {
            return format_evaluation(matrix_from(counts, labels));
        },
        py::arg("counts"), py::arg("labels") = std::vector<std::string>{});
    m.def("efficiency", &efficiency, py::arg("fps"), py::arg("peak_flops"));

    // pipeline
    m.def(
        "run_extract",
        [](const std::string& manifest, const std::string& out, const std::string& config_text) {
            const auto cfg = pipeline_config(config_text);
            ExtractSummary s;
            {
                py::gil_scoped_release nogil;
                s = iwsn::run_extract(cfg, manifest, out);
            }
            py::dict d;
            d["written"] = s.written;
            d["failures"] = s.failures;
            d["width"] = s.width;
            d["height"] = s.height;
            d["vector_length"] = s.vector_length;
            return d;
        },
        py::arg("manifest"), py::arg("out"), py::arg("config_text") = "");
    m.def(
        "run_train",
        [](const std::string& features, const std::string& model_out, const std::string& config_text) {
            const auto cfg = pipeline_config(config_text);
            TrainReport r;
            {
                py::gil_scoped_release nogil;
                r = iwsn::run_train(cfg, features, model_out);
            }
            py::dict d;
            d["model"] = r.result.model;
            d["loss"] = r.result.loss_history;
            d["train_accuracy"] = overall_accuracy(r.train_matrix);
            d["test_accuracy"] = overall_accuracy(r.test_matrix);
            d["report"] = format_evaluation(r.test_matrix);
            return d;
        },
        py::arg("features"), py::arg("model_out") = "", py::arg("config_text") = "");
    m.def(
        "run_infer",
        [](const MlpModel& model, const std::string& image, const std::string& config_text) {
            const auto r = iwsn::run_infer(pipeline_config(config_text), model, image);
            return py::make_tuple(r.class_name, to_array(r.scores));
        },
        py::arg("model"), py::arg("image"), py::arg("config_text") = "");
}
