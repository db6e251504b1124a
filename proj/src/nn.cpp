#include "fedif/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedif/util.hpp"

namespace fedif::nn {

namespace {

void check_params_finite(std::span<const double> params) {
    for (double v : params)
        if (!std::isfinite(v)) throw NumericError("non-finite parameter value");
}

void check_batch(const ModelSpec& spec, const Matrix& batch) {
    if (batch.cols != spec.input_dim())
        throw ShapeError("batch feature dim " + std::to_string(batch.cols) +
                         " does not match model input dim " +
                         std::to_string(spec.input_dim()));
}

void check_labels(const ModelSpec& spec, const Matrix& batch,
                  std::span<const int> labels) {
    if (labels.size() != batch.rows)
        throw ShapeError("label count does not match batch rows");
    if (batch.rows == 0) throw ShapeError("empty batch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= spec.classes())
            throw ShapeError("label out of range: " + std::to_string(y));
}

struct ForwardCache {
    Matrix conv_pre;            // pre-ReLU conv output, if conv
    std::vector<Matrix> pre;    // dense pre-activations, one per dense layer
    std::vector<Matrix> acts;   // acts[0] = dense input; acts[l+1] = post layer l
};

void conv_forward(const ConvSpec& c, std::span<const double> filters,
                  std::span<const double> bias, const Matrix& batch,
                  Matrix& out_pre) {
    const std::size_t oh = c.out_h(), ow = c.out_w(), k = c.kernel;
    const std::size_t plane = c.in_h * c.in_w;
    out_pre = Matrix(batch.rows, c.out_dim());
    for (std::size_t b = 0; b < batch.rows; ++b) {
        const double* x = batch.data.data() + b * batch.cols;
        double* z = out_pre.data.data() + b * out_pre.cols;
        for (std::size_t f = 0; f < c.out_channels; ++f) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double acc = bias[f];
                    for (std::size_t ch = 0; ch < c.in_c; ++ch) {
                        const double* xp = x + ch * plane;
                        const double* wp =
                            filters.data() + ((f * c.in_c + ch) * k) * k;
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx)
                                acc += xp[(oy + ky) * c.in_w + (ox + kx)] *
                                       wp[ky * k + kx];
                    }
                    z[f * oh * ow + oy * ow + ox] = acc;
                }
            }
        }
    }
}

// Runs the full forward pass, caching what backward needs.
void run_forward(std::span<const double> params, const ModelSpec& spec,
                 const Matrix& batch, ForwardCache& cache) {
    std::size_t off = 0;
    if (spec.conv) {
        const ConvSpec& c = *spec.conv;
        const std::size_t nf = c.out_channels * c.in_c * c.kernel * c.kernel;
        conv_forward(c, params.subspan(off, nf), params.subspan(off + nf, c.out_channels),
                     batch, cache.conv_pre);
        off += c.param_count();
        Matrix a0 = cache.conv_pre;
        for (double& v : a0.data) v = std::max(0.0, v);
        cache.acts.push_back(std::move(a0));
    } else {
        cache.acts.push_back(batch);
    }

    const std::size_t layers = spec.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double* w = params.data() + off;
        const double* bv = params.data() + off + in * out;
        off += in * out + out;

        const Matrix& a = cache.acts.back();
        Matrix z(a.rows, out);
        for (std::size_t b = 0; b < a.rows; ++b) {
            const double* ar = a.data.data() + b * in;
            double* zr = z.data.data() + b * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* wr = w + o * in;
                double acc = bv[o];
                for (std::size_t i = 0; i < in; ++i) acc += ar[i] * wr[i];
                zr[o] = acc;
            }
        }
        cache.pre.push_back(z);
        if (l + 1 < layers)
            for (double& v : z.data) v = std::max(0.0, v);
        cache.acts.push_back(std::move(z));
    }
}

// Softmax rows in place (max-subtracted) and return mean cross-entropy.
double softmax_and_loss(Matrix& logits, std::span<const int> labels) {
    double total = 0.0;
    for (std::size_t b = 0; b < logits.rows; ++b) {
        double* z = logits.data.data() + b * logits.cols;
        double m = z[0];
        for (std::size_t c = 1; c < logits.cols; ++c) m = std::max(m, z[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            z[c] = std::exp(z[c] - m);
            sum += z[c];
        }
        for (std::size_t c = 0; c < logits.cols; ++c) z[c] /= sum;
        total += -std::log(std::max(logits.at(b, labels[b]), 1e-300));
    }
    return total / static_cast<double>(logits.rows);
}

void conv_backward(const ConvSpec& c, std::span<const double> filters,
                   const Matrix& batch, const Matrix& dz,
                   double* dfilters, double* dbias, Matrix* dinput) {
    const std::size_t oh = c.out_h(), ow = c.out_w(), k = c.kernel;
    const std::size_t plane = c.in_h * c.in_w;
    for (std::size_t b = 0; b < batch.rows; ++b) {
        const double* x = batch.data.data() + b * batch.cols;
        const double* dzr = dz.data.data() + b * dz.cols;
        double* dx = dinput ? dinput->data.data() + b * dinput->cols : nullptr;
        for (std::size_t f = 0; f < c.out_channels; ++f) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const double g = dzr[f * oh * ow + oy * ow + ox];
                    if (g == 0.0) continue;
                    if (dbias) dbias[f] += g;
                    for (std::size_t ch = 0; ch < c.in_c; ++ch) {
                        const double* xp = x + ch * plane;
                        const std::size_t wbase = ((f * c.in_c + ch) * k) * k;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const std::size_t xi =
                                    (oy + ky) * c.in_w + (ox + kx);
                                if (dfilters)
                                    dfilters[wbase + ky * k + kx] += g * xp[xi];
                                if (dx)
                                    dx[ch * plane + xi] +=
                                        g * filters[wbase + ky * k + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

// Backward through the dense stack. dz_last holds dLoss/dlogits on entry.
// Writes parameter gradients when grad != nullptr; returns dLoss/d(dense input)
// when want_input_grad.
Matrix dense_backward(std::span<const double> params, const ModelSpec& spec,
                      const ForwardCache& cache, Matrix dz,
                      std::vector<double>* grad, bool want_input_grad,
                      std::size_t dense_off) {
    const std::size_t layers = spec.layer_sizes.size() - 1;
    // Per-layer parameter offsets within the flat vector.
    std::vector<std::size_t> offs(layers);
    {
        std::size_t off = dense_off;
        for (std::size_t l = 0; l < layers; ++l) {
            offs[l] = off;
            off += spec.layer_sizes[l] * spec.layer_sizes[l + 1] +
                   spec.layer_sizes[l + 1];
        }
    }

    for (std::size_t li = layers; li-- > 0;) {
        const std::size_t in = spec.layer_sizes[li];
        const std::size_t out = spec.layer_sizes[li + 1];
        const Matrix& a = cache.acts[li];
        const double* w = params.data() + offs[li];

        if (grad) {
            double* dw = grad->data() + offs[li];
            double* db = grad->data() + offs[li] + in * out;
            for (std::size_t b = 0; b < a.rows; ++b) {
                const double* ar = a.data.data() + b * in;
                const double* dzr = dz.data.data() + b * out;
                for (std::size_t o = 0; o < out; ++o) {
                    const double g = dzr[o];
                    if (g == 0.0) continue;
                    db[o] += g;
                    double* dwr = dw + o * in;
                    for (std::size_t i = 0; i < in; ++i) dwr[i] += g * ar[i];
                }
            }
        }

        const bool need_da = li > 0 || spec.conv || want_input_grad;
        if (!need_da) break;

        Matrix da(a.rows, in);
        for (std::size_t b = 0; b < a.rows; ++b) {
            const double* dzr = dz.data.data() + b * out;
            double* dar = da.data.data() + b * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double g = dzr[o];
                if (g == 0.0) continue;
                const double* wr = w + o * in;
                for (std::size_t i = 0; i < in; ++i) dar[i] += g * wr[i];
            }
        }
        if (li > 0) {
            const Matrix& pre = cache.pre[li - 1];
            for (std::size_t i = 0; i < da.data.size(); ++i)
                if (pre.data[i] <= 0.0) da.data[i] = 0.0;
        }
        dz = std::move(da);
    }
    return dz;  // gradient w.r.t. the dense input block
}

}  // namespace

ModelSpec ModelSpec::mlp(std::vector<std::size_t> sizes) {
    ModelSpec spec;
    spec.layer_sizes = std::move(sizes);
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::conv_mlp(ConvSpec c, std::vector<std::size_t> dense_tail) {
    ModelSpec spec;
    spec.conv = c;
    spec.layer_sizes.reserve(dense_tail.size() + 1);
    spec.layer_sizes.push_back(c.out_dim());
    for (auto s : dense_tail) spec.layer_sizes.push_back(s);
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    for (auto s : layer_sizes)
        if (s == 0) throw ShapeError("layer size must be positive");
    if (conv) {
        const ConvSpec& c = *conv;
        if (c.in_h == 0 || c.in_w == 0 || c.in_c == 0 || c.out_channels == 0 ||
            c.kernel == 0)
            throw ShapeError("conv dimensions must be positive");
        if (c.kernel > c.in_h || c.kernel > c.in_w)
            throw ShapeError("conv kernel exceeds input size");
        if (layer_sizes.empty() || layer_sizes.front() != c.out_dim())
            throw ShapeError("dense input does not match conv output dim");
        if (layer_sizes.size() < 2)
            throw ShapeError("model needs an output layer");
    } else {
        // The conv block counts as the hidden layer when present; a plain MLP
        // needs at least input -> hidden -> classes.
        if (layer_sizes.size() < 3)
            throw ShapeError("model needs at least one hidden layer");
    }
}

std::size_t ModelSpec::param_count() const {
    std::size_t n = conv ? conv->param_count() : 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
}

UnpackedParams unflatten(const ModelSpec& spec, std::span<const double> params) {
    if (params.size() != spec.param_count())
        throw ShapeError("param vector length does not match spec");
    UnpackedParams u;
    std::size_t off = 0;
    if (spec.conv) {
        const std::size_t nf =
            spec.conv->out_channels * spec.conv->in_c * spec.conv->kernel * spec.conv->kernel;
        u.conv_filters.assign(params.begin() + off, params.begin() + off + nf);
        off += nf;
        u.conv_bias.assign(params.begin() + off,
                           params.begin() + off + spec.conv->out_channels);
        off += spec.conv->out_channels;
    }
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        Matrix w(out, in);
        std::copy(params.begin() + off, params.begin() + off + in * out,
                  w.data.begin());
        off += in * out;
        u.weights.push_back(std::move(w));
        u.biases.emplace_back(params.begin() + off, params.begin() + off + out);
        off += out;
    }
    return u;
}

std::vector<double> flatten(const ModelSpec& spec, const UnpackedParams& u) {
    std::vector<double> params;
    params.reserve(spec.param_count());
    params.insert(params.end(), u.conv_filters.begin(), u.conv_filters.end());
    params.insert(params.end(), u.conv_bias.begin(), u.conv_bias.end());
    for (std::size_t l = 0; l < u.weights.size(); ++l) {
        params.insert(params.end(), u.weights[l].data.begin(),
                      u.weights[l].data.end());
        params.insert(params.end(), u.biases[l].begin(), u.biases[l].end());
    }
    if (params.size() != spec.param_count())
        throw ShapeError("unpacked params do not match spec");
    return params;
}

std::vector<double> init_params(const ModelSpec& spec, rng::StreamRng& rng) {
    spec.validate();
    std::vector<double> params(spec.param_count());
    std::size_t off = 0;
    if (spec.conv) {
        const ConvSpec& c = *spec.conv;
        const double bound =
            1.0 / std::sqrt(static_cast<double>(c.in_c * c.kernel * c.kernel));
        const std::size_t n = c.param_count();
        for (std::size_t i = 0; i < n; ++i)
            params[off + i] = rng.uniform(-bound, bound);
        off += n;
    }
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (std::size_t i = 0; i < in * out + out; ++i)
            params[off + i] = rng.uniform(-bound, bound);
        off += in * out + out;
    }
    return params;
}

Matrix forward(std::span<const double> params, const ModelSpec& spec,
               const Matrix& batch) {
    check_batch(spec, batch);
    if (params.size() != spec.param_count())
        throw ShapeError("param vector length does not match spec");
    ForwardCache cache;
    run_forward(params, spec, batch, cache);
    return cache.acts.back();
}

double loss_and_param_grad(std::span<const double> params, const ModelSpec& spec,
                           const Matrix& batch, std::span<const int> labels,
                           std::vector<double>& grad) {
    check_batch(spec, batch);
    check_labels(spec, batch, labels);
    check_params_finite(params);
    if (params.size() != spec.param_count())
        throw ShapeError("param vector length does not match spec");

    ForwardCache cache;
    run_forward(params, spec, batch, cache);

    Matrix probs = cache.acts.back();
    const double loss = softmax_and_loss(probs, labels);

    // dLoss/dlogits for the mean loss.
    const double invb = 1.0 / static_cast<double>(batch.rows);
    for (std::size_t b = 0; b < probs.rows; ++b) {
        double* r = probs.data.data() + b * probs.cols;
        r[labels[b]] -= 1.0;
        for (std::size_t c = 0; c < probs.cols; ++c) r[c] *= invb;
    }

    grad.assign(params.size(), 0.0);
    const std::size_t dense_off = spec.conv ? spec.conv->param_count() : 0;
    Matrix da0 = dense_backward(params, spec, cache, std::move(probs), &grad,
                                false, dense_off);
    if (spec.conv) {
        for (std::size_t i = 0; i < da0.data.size(); ++i)
            if (cache.conv_pre.data[i] <= 0.0) da0.data[i] = 0.0;
        const std::size_t nf = spec.conv->out_channels * spec.conv->in_c *
                               spec.conv->kernel * spec.conv->kernel;
        conv_backward(*spec.conv, params.subspan(0, nf), batch, da0,
                      grad.data(), grad.data() + nf, nullptr);
    }
    return loss;
}

double batch_loss(std::span<const double> params, const ModelSpec& spec,
                  const Matrix& batch, std::span<const int> labels) {
    check_batch(spec, batch);
    check_labels(spec, batch, labels);
    Matrix probs = forward(params, spec, batch);
    return softmax_and_loss(probs, labels);
}

Matrix loss_input_grad(std::span<const double> params, const ModelSpec& spec,
                       const Matrix& batch, std::span<const int> labels) {
    check_batch(spec, batch);
    check_labels(spec, batch, labels);
    check_params_finite(params);

    ForwardCache cache;
    run_forward(params, spec, batch, cache);

    Matrix probs = cache.acts.back();
    softmax_and_loss(probs, labels);
    // Per-example loss: no 1/B factor.
    for (std::size_t b = 0; b < probs.rows; ++b)
        probs.at(b, labels[b]) -= 1.0;

    const std::size_t dense_off = spec.conv ? spec.conv->param_count() : 0;
    Matrix da0 = dense_backward(params, spec, cache, std::move(probs), nullptr,
                                true, dense_off);
    if (!spec.conv) return da0;

    for (std::size_t i = 0; i < da0.data.size(); ++i)
        if (cache.conv_pre.data[i] <= 0.0) da0.data[i] = 0.0;
    Matrix dinput(batch.rows, batch.cols);
    const std::size_t nf = spec.conv->out_channels * spec.conv->in_c *
                           spec.conv->kernel * spec.conv->kernel;
    conv_backward(*spec.conv, params.subspan(0, nf), batch, da0, nullptr,
                  nullptr, &dinput);
    return dinput;
}

void sgd_step(std::vector<double>& params, std::span<const double> grad,
              OptimizerState& state) {
    if (grad.size() != params.size())
        throw ShapeError("gradient length does not match params");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    if (state.velocity.size() != params.size())
        throw ShapeError("velocity length does not match params");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = state.momentum * state.velocity[i] + grad[i];
        params[i] -= state.lr * state.velocity[i];
    }
}

EvalResult evaluate(std::span<const double> params, const ModelSpec& spec,
                    const Matrix& features, std::span<const int> labels,
                    std::size_t eval_batch) {
    check_batch(spec, features);
    if (labels.size() != features.rows)
        throw ShapeError("label count does not match feature rows");
    if (features.rows == 0) throw ShapeError("empty evaluation set");

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < features.rows; start += eval_batch) {
        const std::size_t n = std::min(eval_batch, features.rows - start);
        Matrix chunk(n, features.cols);
        std::copy(features.data.begin() + start * features.cols,
                  features.data.begin() + (start + n) * features.cols,
                  chunk.data.begin());
        Matrix logits = forward(params, spec, chunk);
        for (std::size_t b = 0; b < n; ++b) {
            const double* z = logits.data.data() + b * logits.cols;
            double m = z[0];
            std::size_t arg = 0;
            for (std::size_t c = 1; c < logits.cols; ++c)
                if (z[c] > m) {
                    m = z[c];
                    arg = c;
                }
            if (arg == static_cast<std::size_t>(labels[start + b])) ++correct;
            double sum = 0.0;
            for (std::size_t c = 0; c < logits.cols; ++c)
                sum += std::exp(z[c] - m);
            loss_sum += std::log(sum) - (z[labels[start + b]] - m);
        }
    }
    EvalResult r;
    r.loss = loss_sum / static_cast<double>(features.rows);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(features.rows);
    return r;
}

}  // namespace fedif::nn
