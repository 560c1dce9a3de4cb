#include "stdw/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stdw/errors.hpp"
#include "stdw/rng.hpp"

namespace stdw {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'D', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

void check_batch_shape(const Model& model, const Tensor2& batch) {
    if (batch.cols != model.input_dim)
        throw ShapeError("batch has " + std::to_string(batch.cols) +
                         " features, model expects " + std::to_string(model.input_dim));
}

// Forward pass keeping post-activation outputs per layer; activations[0] is
// the input batch, activations[L] the logits.
std::vector<Tensor2> forward_cached(const Model& model, const Tensor2& batch) {
    check_batch_shape(model, batch);
    std::vector<Tensor2> activations;
    activations.reserve(model.layers.size() + 1);
    activations.push_back(batch);
    for (const Layer& layer : model.layers) {
        Tensor2 z = matmul_bt(activations.back(), layer.weight);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* zr = z.row(r);
            for (std::size_t c = 0; c < z.cols; ++c) zr[c] += layer.bias[c];
        }
        if (layer.activation == Activation::relu) {
            for (double& x : z.data) x = x > 0.0 ? x : 0.0;
        }
        activations.push_back(std::move(z));
    }
    return activations;
}

}  // namespace

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weight.data.size() + l.bias.size();
    return n;
}

Gradients Gradients::zeros_like(const Model& m) {
    Gradients g;
    g.dweight.reserve(m.layers.size());
    g.dbias.reserve(m.layers.size());
    for (const Layer& l : m.layers) {
        g.dweight.emplace_back(l.weight.rows, l.weight.cols);
        g.dbias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::scale(double s) {
    for (Tensor2& t : dweight)
        for (double& x : t.data) x *= s;
    for (auto& b : dbias)
        for (double& x : b) x *= s;
}

void Gradients::axpy(double s, const Gradients& other) {
    for (std::size_t l = 0; l < dweight.size(); ++l) {
        for (std::size_t i = 0; i < dweight[l].data.size(); ++i)
            dweight[l].data[i] += s * other.dweight[l].data[i];
        for (std::size_t i = 0; i < dbias[l].size(); ++i)
            dbias[l][i] += s * other.dbias[l][i];
    }
}

OptimState OptimState::sgd(double lr) {
    if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
    OptimState s;
    s.kind = OptimKind::sgd;
    s.learning_rate = lr;
    return s;
}

OptimState OptimState::adam(const Model& model, double lr, double beta1, double beta2,
                            double epsilon) {
    if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
    OptimState s;
    s.kind = OptimKind::adam;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.m = Gradients::zeros_like(model);
    s.v = Gradients::zeros_like(model);
    return s;
}

Model init_model(const std::vector<std::size_t>& arch, std::size_t class_count,
                 std::uint64_t seed) {
    if (arch.empty()) throw ConfigError("architecture must list at least the input width");
    for (std::size_t w : arch)
        if (w == 0) throw ConfigError("layer widths must be >= 1");
    if (class_count < 2) throw ConfigError("class_count must be >= 2");

    std::vector<std::size_t> widths = arch;
    widths.push_back(class_count);

    Model model;
    model.input_dim = widths.front();
    model.class_count = class_count;
    Rng rng(mix_seed(seed, 0x1217u));
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        layer.weight = Tensor2(fan_out, fan_in);
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& w : layer.weight.data) w = scale * rng.gaussian();
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (l + 2 == widths.size()) ? Activation::identity : Activation::relu;
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Tensor2 forward(const Model& model, const Tensor2& batch) {
    return forward_cached(model, batch).back();
}

Tensor2 softmax(const Tensor2& logits) {
    Tensor2 p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const double* lr = logits.row(r);
        double* pr = p.row(r);
        double mx = lr[0];
        for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, lr[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            pr[c] = std::exp(lr[c] - mx);
            sum += pr[c];
        }
        for (std::size_t c = 0; c < logits.cols; ++c) pr[c] /= sum;
    }
    return p;
}

CeResult ce_loss_and_grad(const Tensor2& logits, const std::vector<int>& labels,
                          const std::vector<double>& weights) {
    if (logits.rows == 0) throw UsageError("cross-entropy on an empty batch");
    if (labels.size() != logits.rows || weights.size() != logits.rows)
        throw ShapeError("labels/weights length must match the batch row count");
    if (!all_finite(logits)) throw NumericError("non-finite logits");

    double weight_sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw UsageError("sample weights must be >= 0");
        weight_sum += weights[i];
    }
    if (weight_sum <= 0.0) throw UsageError("at least one sample weight must be positive");

    const std::size_t k = logits.cols;
    CeResult res;
    res.dlogits = Tensor2(logits.rows, k);
    double loss = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw UsageError("label " + std::to_string(y) + " out of range [0, " +
                             std::to_string(k) + ")");
        const double* lr = logits.row(r);
        double mx = lr[0];
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, lr[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(lr[c] - mx);
        const double log_sum = std::log(sum);
        const double wn = weights[r] / weight_sum;
        loss += wn * (log_sum - (lr[y] - mx));
        double* dr = res.dlogits.row(r);
        for (std::size_t c = 0; c < k; ++c) {
            const double p = std::exp(lr[c] - mx) / sum;
            dr[c] = wn * (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0));
        }
    }
    res.loss = loss;
    return res;
}

Gradients param_gradients(const Model& model, const Tensor2& batch, const Tensor2& dlogits) {
    const std::vector<Tensor2> acts = forward_cached(model, batch);
    if (!dlogits.same_shape(acts.back()))
        throw ShapeError("dlogits shape does not match the model output for this batch");

    Gradients grads = Gradients::zeros_like(model);
    Tensor2 delta = dlogits;
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const Layer& layer = model.layers[li];
        // delta is d(loss)/d(post-activation output of layer li); fold the
        // activation derivative in first. Final layer is identity.
        if (layer.activation == Activation::relu) {
            const Tensor2& out = acts[li + 1];
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (out.data[i] <= 0.0) delta.data[i] = 0.0;
        }
        grads.dweight[li] = matmul_at(delta, acts[li]);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* dr = delta.row(r);
            for (std::size_t c = 0; c < delta.cols; ++c) grads.dbias[li][c] += dr[c];
        }
        if (li > 0) delta = matmul(delta, layer.weight);
    }

    for (std::size_t li = 0; li < grads.dweight.size(); ++li) {
        if (!all_finite(grads.dweight[li]) || !all_finite(grads.dbias[li]))
            throw NumericError("non-finite gradient in layer " + std::to_string(li));
    }
    return grads;
}

void apply_gradients(Model& model, const Gradients& grads, OptimState& opt) {
    const double lr = opt.learning_rate;
    if (opt.kind == OptimKind::sgd) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            Layer& layer = model.layers[l];
            for (std::size_t i = 0; i < layer.weight.data.size(); ++i)
                layer.weight.data[i] -= lr * grads.dweight[l].data[i];
            for (std::size_t i = 0; i < layer.bias.size(); ++i)
                layer.bias[i] -= lr * grads.dbias[l][i];
        }
        return;
    }

    if (opt.m.dweight.empty()) {
        opt.m = Gradients::zeros_like(model);
        opt.v = Gradients::zeros_like(model);
    }
    opt.step += 1;
    const double b1 = opt.beta1;
    const double b2 = opt.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
    auto adam_update = [&](double& param, double g, double& m, double& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        param -= lr * mhat / (std::sqrt(vhat) + opt.epsilon);
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Layer& layer = model.layers[l];
        for (std::size_t i = 0; i < layer.weight.data.size(); ++i)
            adam_update(layer.weight.data[i], grads.dweight[l].data[i],
                        opt.m.dweight[l].data[i], opt.v.dweight[l].data[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            adam_update(layer.bias[i], grads.dbias[l][i], opt.m.dbias[l][i],
                        opt.v.dbias[l][i]);
    }
}

void backward_apply(Model& model, const Tensor2& batch, const Tensor2& dlogits,
                    OptimState& opt) {
    const Gradients grads = param_gradients(model, batch, dlogits);
    apply_gradients(model, grads, opt);
}

namespace {

double loss_at(const Model& model, const Tensor2& batch, const std::vector<int>& labels,
               const std::vector<double>& weights) {
    return ce_loss_and_grad(forward(model, batch), labels, weights).loss;
}

}  // namespace

double gradient_check(const Model& model, const Tensor2& batch, const std::vector<int>& labels,
                      const std::vector<double>& weights, double h) {
    if (!(h > 0.0 && h <= 1e-2)) throw UsageError("finite-difference step must be in (0, 1e-2]");

    const Tensor2 logits = forward(model, batch);
    const CeResult ce = ce_loss_and_grad(logits, labels, weights);
    const Gradients analytic = param_gradients(model, batch, ce.dlogits);

    Model probe = model;
    double max_rel = 0.0;
    auto probe_param = [&](double& param, double analytic_g) {
        const double saved = param;
        param = saved + h;
        const double lp = loss_at(probe, batch, labels, weights);
        param = saved - h;
        const double lm = loss_at(probe, batch, labels, weights);
        param = saved;
        const double cd = (lp - lm) / (2.0 * h);
        const double rel =
            std::fabs(analytic_g - cd) / (std::fabs(analytic_g) + std::fabs(cd) + 1e-12);
        max_rel = std::max(max_rel, rel);
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        Layer& layer = probe.layers[l];
        for (std::size_t i = 0; i < layer.weight.data.size(); ++i)
            probe_param(layer.weight.data[i], analytic.dweight[l].data[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            probe_param(layer.bias[i], analytic.dbias[l][i]);
    }
    return max_rel;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated model file while reading " + what + " at byte " +
                      std::to_string(static_cast<long long>(is.tellg())));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is, const std::string& what) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw IoError("truncated model file while reading " + what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put_u32(os, kFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(model.layers.size()));
    for (const Layer& layer : model.layers) {
        put_u32(os, static_cast<std::uint32_t>(layer.out_dim()));
        put_u32(os, static_cast<std::uint32_t>(layer.in_dim()));
        put_u32(os, static_cast<std::uint32_t>(layer.activation));
        for (double w : layer.weight.data) put_f64(os, w);
        for (double b : layer.bias) put_f64(os, b);
    }
    if (!os) throw IoError("write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4)) throw IoError("truncated model file (missing magic)");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic in " + path + ", expected \"STDW\"");
    const std::uint32_t version = get_u32(is, "version");
    if (version != kFormatVersion)
        throw FormatError("unsupported model format version " + std::to_string(version));
    const std::uint32_t layer_count = get_u32(is, "layer count");

    Model model;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        Layer layer;
        const std::uint32_t out = get_u32(is, "layer out dim");
        const std::uint32_t in = get_u32(is, "layer in dim");
        const std::uint32_t act = get_u32(is, "layer activation");
        if (act > 1) throw FormatError("unknown activation code " + std::to_string(act));
        layer.activation = static_cast<Activation>(act);
        layer.weight = Tensor2(out, in);
        for (double& w : layer.weight.data) w = get_f64(is, "weights");
        layer.bias.resize(out);
        for (double& b : layer.bias) b = get_f64(is, "biases");
        model.layers.push_back(std::move(layer));
    }
    if (model.layers.empty()) throw FormatError("model file has no layers");
    model.input_dim = model.layers.front().in_dim();
    model.class_count = model.layers.back().out_dim();
    for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
        if (model.layers[l].out_dim() != model.layers[l + 1].in_dim())
            throw FormatError("layer dimension chain broken at layer " + std::to_string(l));
    }
    return model;
}

std::string model_to_json(const Model& model) {
    nlohmann::json j;
    j["input_dim"] = model.input_dim;
    j["class_count"] = model.class_count;
    j["layers"] = nlohmann::json::array();
    for (const Layer& layer : model.layers) {
        nlohmann::json lj;
        lj["in"] = layer.in_dim();
        lj["out"] = layer.out_dim();
        lj["activation"] = layer.activation == Activation::relu ? "relu" : "identity";
        lj["weight"] = layer.weight.data;
        lj["bias"] = layer.bias;
        j["layers"].push_back(std::move(lj));
    }
    return j.dump(2);
}

}  // namespace stdw
