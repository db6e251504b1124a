#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedif/matrix.hpp"
#include "fedif/rng.hpp"

namespace fedif::nn {

/// Single conv+ReLU front end: square kernel, stride 1, valid padding.
/// Inputs are channel-major: index = c*(h*w) + y*w + x.
struct ConvSpec {
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t in_c = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;

    std::size_t out_h() const { return in_h - kernel + 1; }
    std::size_t out_w() const { return in_w - kernel + 1; }
    std::size_t in_dim() const { return in_c * in_h * in_w; }
    std::size_t out_dim() const { return out_channels * out_h() * out_w(); }
    std::size_t param_count() const {
        return out_channels * in_c * kernel * kernel + out_channels;
    }
};

/// Feed-forward classifier: optional conv front end, then dense ReLU hidden
/// layers, logits at the end. layer_sizes describes the dense path
/// (input, hidden..., classes); with a conv front end, layer_sizes.front()
/// equals conv.out_dim().
struct ModelSpec {
    std::vector<std::size_t> layer_sizes;
    std::optional<ConvSpec> conv;

    static ModelSpec mlp(std::vector<std::size_t> sizes);
    /// dense_tail lists the dense sizes after the conv block (hidden..., classes).
    static ModelSpec conv_mlp(ConvSpec c, std::vector<std::size_t> dense_tail);

    std::size_t input_dim() const {
        return conv ? conv->in_dim() : layer_sizes.front();
    }
    std::size_t classes() const { return layer_sizes.back(); }
    std::size_t param_count() const;

    /// Throws ShapeError when the architecture invariants do not hold.
    void validate() const;
};

/// Structured view of a flat parameter vector; layout is the deterministic
/// concatenation [conv filters, conv bias,] then per dense layer [W, b]
/// with W row-major (out x in).
struct UnpackedParams {
    std::vector<double> conv_filters;
    std::vector<double> conv_bias;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

UnpackedParams unflatten(const ModelSpec& spec, std::span<const double> params);
std::vector<double> flatten(const ModelSpec& spec, const UnpackedParams& u);

struct OptimizerState {
    double lr = 0.001;
    double momentum = 0.9;
    std::vector<double> velocity;
};

/// Per-layer uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
std::vector<double> init_params(const ModelSpec& spec, rng::StreamRng& rng);

/// Logits for a batch (rows = examples, cols = classes).
Matrix forward(std::span<const double> params, const ModelSpec& spec,
               const Matrix& batch);

/// Mean softmax cross-entropy over the batch; fills grad with the gradient
/// of that mean loss with respect to params.
double loss_and_param_grad(std::span<const double> params, const ModelSpec& spec,
                           const Matrix& batch, std::span<const int> labels,
                           std::vector<double>& grad);

/// Mean softmax cross-entropy, forward only.
double batch_loss(std::span<const double> params, const ModelSpec& spec,
                  const Matrix& batch, std::span<const int> labels);

/// Per-example gradient of each example's own loss with respect to its input
/// features (same shape as batch). Duplicating the batch leaves rows unchanged.
Matrix loss_input_grad(std::span<const double> params, const ModelSpec& spec,
                       const Matrix& batch, std::span<const int> labels);

/// v' = momentum * v + g; params' = params - lr * v'. In place.
void sgd_step(std::vector<double>& params, std::span<const double> grad,
              OptimizerState& state);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Mean loss and accuracy over a full dataset, computed in deterministic
/// batch order. Argmax ties resolve to the lowest class index.
EvalResult evaluate(std::span<const double> params, const ModelSpec& spec,
                    const Matrix& features, std::span<const int> labels,
                    std::size_t eval_batch = 256);

}  // namespace fedif::nn
