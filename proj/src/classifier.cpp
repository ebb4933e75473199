#include "iwsn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwsn/bytes.hpp"
#include "iwsn/error.hpp"

namespace iwsn {
namespace {

constexpr std::string_view kModelMagic = "IWSNML01";
constexpr std::uint8_t kModelVersion = 1;

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw DataError("an MLP needs at least input and output dims");
    for (std::size_t d : dims) {
        if (d == 0) throw DataError("MLP layer widths must be >= 1");
    }
}

void check_input(const MlpModel& model, std::span<const double> features) {
    if (features.size() != model.input_len()) {
        throw DataError("feature length mismatch: model expects " + std::to_string(model.input_len()) +
                        ", got " + std::to_string(features.size()));
    }
}

// y = x W + b, bias first then inputs in index order.
void dense_forward(const DenseLayer& l, std::span<const double> x, std::vector<double>& y) {
    y.assign(l.bias.begin(), l.bias.end());
    const double* w = l.weights.data();
    for (std::size_t j = 0; j < l.inputs; ++j) {
        const double xj = x[j];
        const double* row = w + j * l.outputs;
        for (std::size_t k = 0; k < l.outputs; ++k) y[k] += xj * row[k];
    }
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

bool MlpModel::all_finite() const noexcept {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return std::all_of(layers.begin(), layers.end(),
                       [&](const DenseLayer& l) { return finite(l.weights) && finite(l.bias); });
}

std::vector<std::size_t> default_mlp_dims(std::size_t feature_len, std::size_t classes) {
    return {feature_len, 64, 16, classes};
}

MlpModel zero_mlp(const std::vector<std::size_t>& dims) {
    check_dims(dims);
    MlpModel m;
    m.dims = dims;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer l;
        l.inputs = dims[i];
        l.outputs = dims[i + 1];
        l.weights.assign(l.inputs * l.outputs, 0.0);
        l.bias.assign(l.outputs, 0.0);
        m.layers.push_back(std::move(l));
    }
    return m;
}

MlpModel make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    MlpModel m = zero_mlp(dims);
    m.seed = seed;
    Rng rng(seed);
    for (auto& l : m.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
        for (double& w : l.weights) w = rng.uniform(-limit, limit);
    }
    return m;
}

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> features) {
    check_input(model, features);
    std::vector<double> a(features.begin(), features.end());
    std::vector<double> z;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        dense_forward(model.layers[i], a, z);
        if (i + 1 < model.layers.size()) relu_inplace(z);
        a.swap(z);
    }
    return a;
}

MlpModelF32 to_f32(const MlpModel& model) {
    MlpModelF32 out;
    out.dims = model.dims;
    for (const auto& l : model.layers) {
        out.weights.emplace_back(l.weights.begin(), l.weights.end());
        out.bias.emplace_back(l.bias.begin(), l.bias.end());
    }
    return out;
}

std::vector<float> mlp_forward_f32(const MlpModelF32& model, std::span<const float> features) {
    if (model.dims.empty() || features.size() != model.dims.front()) {
        throw DataError("feature length mismatch: model expects " +
                        std::to_string(model.dims.empty() ? 0 : model.dims.front()) + ", got " +
                        std::to_string(features.size()));
    }
    std::vector<float> a(features.begin(), features.end());
    std::vector<float> z;
    const std::size_t n_layers = model.weights.size();
    for (std::size_t i = 0; i < n_layers; ++i) {
        const std::size_t in = model.dims[i];
        const std::size_t out = model.dims[i + 1];
        z.assign(model.bias[i].begin(), model.bias[i].end());
        const float* w = model.weights[i].data();
        for (std::size_t j = 0; j < in; ++j) {
            const float xj = a[j];
            const float* row = w + j * out;
            for (std::size_t k = 0; k < out; ++k) z[k] += xj * row[k];
        }
        if (i + 1 < n_layers) {
            for (float& v : z) v = v > 0.0f ? v : 0.0f;
        }
        a.swap(z);
    }
    return a;
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> p(scores.begin(), scores.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

double softmax_cross_entropy(std::span<const double> scores, std::size_t target) {
    if (target >= scores.size()) {
        throw DataError("target class " + std::to_string(target) + " out of range for " +
                        std::to_string(scores.size()) + " classes");
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - mx);
    return std::log(sum) - (scores[target] - mx);
}

std::size_t argmax(std::span<const double> scores) {
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

Gradients Gradients::zeros_like(const MlpModel& model) {
    Gradients g;
    for (const auto& l : model.layers) {
        g.weights.emplace_back(l.weights.size(), 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (std::size_t k = 0; k < weights[i].size(); ++k) weights[i][k] += other.weights[i][k];
        for (std::size_t k = 0; k < bias[i].size(); ++k) bias[i][k] += other.bias[i][k];
    }
}

void Gradients::scale(double s) {
    for (auto& w : weights) {
        for (double& v : w) v *= s;
    }
    for (auto& b : bias) {
        for (double& v : b) v *= s;
    }
}

namespace {

// Adds the per-sample gradient into `into`, element by element, and returns the loss.
double backward_into(const MlpModel& model, std::span<const double> features, std::size_t target,
                     Gradients& into) {
    check_input(model, features);
    if (target >= model.classes()) {
        throw DataError("target class " + std::to_string(target) + " out of range for " +
                        std::to_string(model.classes()) + " classes");
    }
    const std::size_t n = model.layers.size();
    // acts[i] is the input to layer i; pre[i] its pre-activation output.
    std::vector<std::vector<double>> acts(n + 1), pre(n);
    acts[0].assign(features.begin(), features.end());
    for (std::size_t i = 0; i < n; ++i) {
        dense_forward(model.layers[i], acts[i], pre[i]);
        acts[i + 1] = pre[i];
        if (i + 1 < n) relu_inplace(acts[i + 1]);
    }
    const auto& scores = pre[n - 1];
    const double loss = softmax_cross_entropy(scores, target);

    std::vector<double> delta = softmax(scores);
    delta[target] -= 1.0;
    for (std::size_t li = n; li-- > 0;) {
        const DenseLayer& l = model.layers[li];
        const auto& a = acts[li];
        auto& gw = into.weights[li];
        auto& gb = into.bias[li];
        for (std::size_t j = 0; j < l.inputs; ++j) {
            const double aj = a[j];
            double* row = gw.data() + j * l.outputs;
            for (std::size_t k = 0; k < l.outputs; ++k) row[k] += aj * delta[k];
        }
        for (std::size_t k = 0; k < l.outputs; ++k) gb[k] += delta[k];
        if (li == 0) break;
        std::vector<double> prev(l.inputs, 0.0);
        for (std::size_t j = 0; j < l.inputs; ++j) {
            if (pre[li - 1][j] <= 0.0) continue;
            const double* row = l.weights.data() + j * l.outputs;
            double s = 0.0;
            for (std::size_t k = 0; k < l.outputs; ++k) s += row[k] * delta[k];
            prev[j] = s;
        }
        delta.swap(prev);
    }
    return loss;
}

}  // namespace

Gradients mlp_backward(const MlpModel& model, std::span<const double> features, std::size_t target,
                       double* loss) {
    Gradients g = Gradients::zeros_like(model);
    const double l = backward_into(model, features, target, g);
    if (loss) *loss = l;
    return g;
}

void Dataset::push(std::span<const double> x, std::size_t label) {
    if (labels.empty() && features.empty()) dim = x.size();
    if (x.size() != dim) {
        throw DataError("dataset row has " + std::to_string(x.size()) + " features, expected " +
                        std::to_string(dim));
    }
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw DataError("learning rate must be finite and >= 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("momentum must be in [0, 1)");
    if (epochs < 1) throw DataError("epochs must be >= 1");
    if (batch_size < 1) throw DataError("batch size must be >= 1");
}

void next_epoch_order(Rng& rng, std::vector<std::size_t>& order) {
    rng.shuffle(std::span<std::size_t>(order));
}

TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.size() == 0) throw DataError("cannot train on an empty dataset");
    if (data.dim != model.input_len()) {
        throw DataError("dataset feature length " + std::to_string(data.dim) + " does not match model input " +
                        std::to_string(model.input_len()));
    }
    for (std::size_t label : data.labels) {
        if (label >= model.classes()) {
            throw DataError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(model.classes()) + " classes");
        }
    }

    const std::size_t n = data.size();
    const std::size_t bs = std::min(config.batch_size, n);
    const std::size_t steps =
        config.steps_per_epoch > 0 ? config.steps_per_epoch : (n + config.batch_size - 1) / config.batch_size;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(config.seed);

    Gradients velocity = Gradients::zeros_like(model);
    TrainResult result;
    std::size_t global_step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        next_epoch_order(rng, order);
        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        for (std::size_t s = 0; s < steps; ++s, ++global_step) {
            std::size_t count = bs;
            if (config.steps_per_epoch == 0) count = std::min(bs, n - cursor);
            Gradients grad = Gradients::zeros_like(model);
            double batch_loss = 0.0;
            for (std::size_t t = 0; t < count; ++t) {
                const std::size_t idx = order[cursor % n];
                ++cursor;
                batch_loss += backward_into(model, data.row(idx), data.labels[idx], grad);
            }
            batch_loss /= static_cast<double>(count);
            if (!std::isfinite(batch_loss)) {
                throw NumericError("non-finite training loss at step " + std::to_string(global_step) + " (epoch " +
                                   std::to_string(epoch) + ")");
            }
            grad.scale(1.0 / static_cast<double>(count));

            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                auto& l = model.layers[li];
                auto& vw = velocity.weights[li];
                auto& vb = velocity.bias[li];
                const auto& gw = grad.weights[li];
                const auto& gb = grad.bias[li];
                for (std::size_t k = 0; k < vw.size(); ++k) {
                    vw[k] = config.momentum * vw[k] - config.learning_rate * gw[k];
                    l.weights[k] += vw[k];
                }
                for (std::size_t k = 0; k < vb.size(); ++k) {
                    vb[k] = config.momentum * vb[k] - config.learning_rate * gb[k];
                    l.bias[k] += vb[k];
                }
            }
            epoch_loss += batch_loss;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(steps));
    }
    if (!model.all_finite()) throw NumericError("training produced non-finite parameters");
    result.model = std::move(model);
    return result;
}

std::vector<std::uint8_t> encode_model(const MlpModel& model) {
    ByteWriter w;
    w.raw(kModelMagic);
    w.u8(kModelVersion);
    w.u64(model.dims.size());
    for (std::size_t d : model.dims) w.u64(d);
    w.u64(model.seed);
    for (const auto& l : model.layers) {
        for (double v : l.weights) w.f64(v);
        for (double v : l.bias) w.f64(v);
    }
    return w.take();
}

MlpModel decode_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "model file");
    r.expect_magic(kModelMagic);
    const std::size_t version_at = r.offset();
    const std::uint8_t version = r.u8();
    if (version != kModelVersion) {
        throw DataError("model file: unsupported version " + std::to_string(version) + " at byte offset " +
                        std::to_string(version_at));
    }
    const std::size_t count_at = r.offset();
    const std::uint64_t count = r.u64();
    if (count < 2 || count > r.remaining() / 8) {
        throw DataError("model file: implausible layer count " + std::to_string(count) + " at byte offset " +
                        std::to_string(count_at));
    }
    std::vector<std::size_t> dims;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const std::uint64_t d = r.u64();
        if (d == 0 || d > (std::uint64_t{1} << 40)) {
            throw DataError("model file: bad layer width " + std::to_string(d) + " at byte offset " +
                            std::to_string(at));
        }
        dims.push_back(static_cast<std::size_t>(d));
    }
    const std::uint64_t seed = r.u64();

    std::uint64_t params = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) params += dims[i] * dims[i + 1] + dims[i + 1];
    if (params > r.remaining() / 8) {
        throw DataError("model file: truncated at byte offset " + std::to_string(bytes.size()) + ", needs " +
                        std::to_string(params * 8) + " parameter bytes from offset " + std::to_string(r.offset()));
    }
    MlpModel m = zero_mlp(dims);
    m.seed = seed;
    for (auto& l : m.layers) {
        for (double& v : l.weights) v = r.f64();
        for (double& v : l.bias) v = r.f64();
    }
    r.expect_end();
    return m;
}

void save_model(const MlpModel& model, const std::string& path) { write_file_bytes(path, encode_model(model)); }

MlpModel load_model(const std::string& path) { return decode_model(read_file_bytes(path)); }

}  // namespace iwsn
