#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdw/tensor.hpp"

namespace stdw {

enum class Activation : std::uint8_t { relu = 0, identity = 1 };

struct Layer {
    Tensor2 weight;             // out_dim x in_dim
    std::vector<double> bias;   // out_dim
    Activation activation = Activation::relu;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

// Feedforward dense classifier. The final layer always has identity
// activation and class_count outputs; hidden layers use ReLU.
struct Model {
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    std::size_t class_count = 0;

    std::size_t parameter_count() const;
};

enum class OptimKind : std::uint8_t { sgd = 0, adam = 1 };

// Per-layer gradient (or Adam moment) storage, shape-matching a Model.
struct Gradients {
    std::vector<Tensor2> dweight;
    std::vector<std::vector<double>> dbias;

    static Gradients zeros_like(const Model& m);
    void scale(double s);
    // this += s * other
    void axpy(double s, const Gradients& other);
};

struct OptimState {
    OptimKind kind = OptimKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    Gradients m;  // first moment (adam)
    Gradients v;  // second moment (adam)

    static OptimState sgd(double lr);
    static OptimState adam(const Model& model, double lr, double beta1 = 0.9,
                           double beta2 = 0.999, double epsilon = 1e-8);
};

// Scaled-Gaussian (He) init: weights ~ N(0, 2/fan_in), biases zero.
// Deterministic given seed. arch = layer widths starting at the input dim.
Model init_model(const std::vector<std::size_t>& arch, std::size_t class_count,
                 std::uint64_t seed);

// batch is rows x input_dim; result is rows x class_count logits.
Tensor2 forward(const Model& model, const Tensor2& batch);

// Row-wise softmax with max-subtraction. Rows sum to 1.
Tensor2 softmax(const Tensor2& logits);

struct CeResult {
    double loss = 0.0;
    Tensor2 dlogits;
};

// Weighted cross-entropy normalized by the weight sum:
//   loss = sum_i w_i * (-log softmax(logits_i)[y_i]) / sum_i w_i
// dlogits is the exact gradient of that expression.
CeResult ce_loss_and_grad(const Tensor2& logits, const std::vector<int>& labels,
                          const std::vector<double>& weights);

// Backpropagate dlogits through the model evaluated on batch. Recomputes the
// forward activations internally, so it stands alone.
Gradients param_gradients(const Model& model, const Tensor2& batch, const Tensor2& dlogits);

// One optimizer step with the given gradients.
void apply_gradients(Model& model, const Gradients& grads, OptimState& opt);

// Convenience composition used by the training loops: gradients from
// (batch, dlogits), then one optimizer step.
void backward_apply(Model& model, const Tensor2& batch, const Tensor2& dlogits,
                    OptimState& opt);

// Central-difference verification of the full analytic gradient. Returns
// max over parameters of |analytic - cd| / (|analytic| + |cd| + 1e-12).
double gradient_check(const Model& model, const Tensor2& batch, const std::vector<int>& labels,
                      const std::vector<double>& weights, double h);

// Versioned binary serialization (magic "STDW"); bit-exact round trip.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Human-readable JSON dump for debugging.
std::string model_to_json(const Model& model);

}  // namespace stdw
