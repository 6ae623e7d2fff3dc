#include "opclass/cnn/model.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opclass::cnn {

void CnnConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("invalid CNN configuration: ") + what);
        }
    };
    require(embedding_dim > 0, "k (embedding dimension) must be positive");
    require(length_percentile >= 0.0 && length_percentile <= 100.0, "percentile must lie in [0, 100]");
    require(batch_size > 0, "batch_size must be positive");
    require(validation_split >= 0.0 && validation_split < 1.0, "validation_split must lie in [0, 1)");
    require(conv_filters > 0, "conv_filters must be positive");
    require(conv_kernel > 0, "conv_kernel must be positive");
    require(dense_units > 0, "dense_units must be positive");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
    require(learning_rate > 0.0, "learning_rate must be positive");
}

std::size_t CnnShape::minimum_length(std::size_t kernel) {
    // pool2 >= 1 needs conv2 >= 2, pool1 >= kernel + 1, conv1 >= 2 * (kernel + 1).
    return 3 * kernel + 1;
}

CnnShape CnnShape::compute(std::size_t vocab_size, std::size_t embedding_dim, std::size_t max_len,
                           std::size_t filters, std::size_t kernel, std::size_t dense_units,
                           std::size_t num_classes) {
    if (kernel == 0 || max_len < minimum_length(kernel)) {
        throw ConfigError("sequence length " + std::to_string(max_len) +
                          " is too short for two convolutions of kernel " + std::to_string(kernel) +
                          " with pooling; need at least " + std::to_string(minimum_length(kernel)));
    }
    if (num_classes == 0 || embedding_dim == 0 || filters == 0 || dense_units == 0) {
        throw ConfigError("CNN layer sizes must be positive");
    }
    CnnShape s;
    s.vocab_size = vocab_size;
    s.embedding_dim = embedding_dim;
    s.max_len = max_len;
    s.filters = filters;
    s.kernel = kernel;
    s.dense_units = dense_units;
    s.num_classes = num_classes;
    s.conv1_len = max_len - kernel + 1;
    s.pool1_len = s.conv1_len / 2;
    s.conv2_len = s.pool1_len - kernel + 1;
    s.pool2_len = s.conv2_len / 2;
    s.flatten_size = s.pool2_len * filters;
    return s;
}

std::size_t CnnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) {
        n += p.size();
    }
    return n;
}

namespace {

Tensor make_tensor(std::string name, std::vector<std::size_t> shape) {
    std::size_t count = 1;
    for (std::size_t d : shape) {
        count *= d;
    }
    return Tensor{std::move(name), std::move(shape), std::vector<double>(count, 0.0)};
}

void fill_normal(Tensor& t, Rng& rng, double variance) {
    const double stddev = std::sqrt(variance);
    for (double& v : t.data) {
        v = rng.normal() * stddev;
    }
}

/// Valid, stride-1 convolution over a (len x in) map into (out_len x out), then ReLU.
void conv_relu(const double* input, std::size_t in, const double* weights, const double* bias,
               std::size_t kernel, std::size_t out, std::size_t out_len, double* output) {
    for (std::size_t t = 0; t < out_len; ++t) {
        double* dst = output + t * out;
        std::copy(bias, bias + out, dst);
        for (std::size_t j = 0; j < kernel; ++j) {
            const double* src = input + (t + j) * in;
            const double* w = weights + j * in * out;
            for (std::size_t c = 0; c < in; ++c) {
                const double x = src[c];
                if (x == 0.0) {
                    continue;
                }
                const double* wc = w + c * out;
                for (std::size_t f = 0; f < out; ++f) {
                    dst[f] += x * wc[f];
                }
            }
        }
        for (std::size_t f = 0; f < out; ++f) {
            dst[f] = std::max(0.0, dst[f]);
        }
    }
}

/// Pool size 2, stride 2; output length floor(len / 2). First max wins ties.
void max_pool(const double* input, std::size_t channels, std::size_t out_len, double* output,
              std::uint32_t* argmax) {
    for (std::size_t t = 0; t < out_len; ++t) {
        const double* a = input + (2 * t) * channels;
        const double* b = a + channels;
        for (std::size_t f = 0; f < channels; ++f) {
            const bool second = b[f] > a[f];
            output[t * channels + f] = second ? b[f] : a[f];
            argmax[t * channels + f] = static_cast<std::uint32_t>(2 * t + (second ? 1 : 0));
        }
    }
}

/// Backward of conv_relu given d(output) already masked by the ReLU.
void conv_backward(const double* input, std::size_t in, const double* weights, std::size_t kernel,
                   std::size_t out, std::size_t out_len, const double* d_output, double* d_weights,
                   double* d_bias, double* d_input) {
    for (std::size_t t = 0; t < out_len; ++t) {
        const double* g = d_output + t * out;
        for (std::size_t f = 0; f < out; ++f) {
            d_bias[f] += g[f];
        }
        for (std::size_t j = 0; j < kernel; ++j) {
            const double* src = input + (t + j) * in;
            double* d_src = d_input ? d_input + (t + j) * in : nullptr;
            const double* w = weights + j * in * out;
            double* dw = d_weights + j * in * out;
            for (std::size_t c = 0; c < in; ++c) {
                const double x = src[c];
                const double* wc = w + c * out;
                double* dwc = dw + c * out;
                double acc = 0.0;
                for (std::size_t f = 0; f < out; ++f) {
                    dwc[f] += x * g[f];
                    acc += wc[f] * g[f];
                }
                if (d_src) {
                    d_src[c] += acc;
                }
            }
        }
    }
}

} // namespace

CnnModel build_model(const CnnConfig& config, std::size_t vocab_size, std::size_t num_classes,
                     std::size_t max_len) {
    config.validate();
    CnnModel model;
    model.shape = CnnShape::compute(vocab_size, config.embedding_dim, max_len, config.conv_filters,
                                    config.conv_kernel, config.dense_units, num_classes);
    model.dropout_rate = config.dropout_rate;
    const CnnShape& s = model.shape;

    auto& p = model.params;
    p[kEmbedding] = make_tensor("embedding", {s.vocab_size + 1, s.embedding_dim});
    p[kConv1W] = make_tensor("conv1.weight", {s.kernel, s.embedding_dim, s.filters});
    p[kConv1B] = make_tensor("conv1.bias", {s.filters});
    p[kConv2W] = make_tensor("conv2.weight", {s.kernel, s.filters, s.filters});
    p[kConv2B] = make_tensor("conv2.bias", {s.filters});
    p[kDenseW] = make_tensor("dense.weight", {s.flatten_size, s.dense_units});
    p[kDenseB] = make_tensor("dense.bias", {s.dense_units});
    p[kOutW] = make_tensor("output.weight", {s.dense_units, s.num_classes});
    p[kOutB] = make_tensor("output.bias", {s.num_classes});

    Rng rng(config.seed);
    for (double& v : p[kEmbedding].data) {
        v = rng.uniform(-0.05, 0.05);
    }
    fill_normal(p[kConv1W], rng, 2.0 / static_cast<double>(s.kernel * s.embedding_dim));
    fill_normal(p[kConv2W], rng, 2.0 / static_cast<double>(s.kernel * s.filters));
    fill_normal(p[kDenseW], rng, 2.0 / static_cast<double>(s.flatten_size));
    fill_normal(p[kOutW], rng, 1.0 / static_cast<double>(s.dense_units));

    for (std::size_t i = 0; i < kParamCount; ++i) {
        model.adam.m[i].assign(p[i].size(), 0.0);
        model.adam.v[i].assign(p[i].size(), 0.0);
    }
    return model;
}

ForwardCache forward(const CnnModel& model, std::span<const std::int32_t> tokens, std::size_t batch,
                     bool training, Rng* rng) {
    const CnnShape& s = model.shape;
    if (tokens.size() != batch * s.max_len) {
        throw ConfigError("forward: expected " + std::to_string(batch) + " x " +
                          std::to_string(s.max_len) + " tokens, got " + std::to_string(tokens.size()));
    }
    const bool use_dropout = training && model.dropout_rate > 0.0;
    if (use_dropout && rng == nullptr) {
        throw ConfigError("forward: training with dropout needs a random generator");
    }

    const std::size_t L = s.max_len, k = s.embedding_dim, F = s.filters, D = s.dense_units,
                      C = s.num_classes;
    const auto& p = model.params;

    ForwardCache c;
    c.batch = batch;
    c.tokens.assign(tokens.begin(), tokens.end());
    c.embedded.resize(batch * L * k);
    c.conv1.resize(batch * s.conv1_len * F);
    c.pool1.resize(batch * s.pool1_len * F);
    c.arg1.resize(c.pool1.size());
    c.conv2.resize(batch * s.conv2_len * F);
    c.pool2.resize(batch * s.pool2_len * F);
    c.arg2.resize(c.pool2.size());
    c.hidden_pre.resize(batch * D);
    c.dropout_mask.assign(batch * D, 1.0);
    c.hidden.resize(batch * D);
    c.probs.resize(batch * C);

    const double keep_scale = use_dropout ? 1.0 / (1.0 - model.dropout_rate) : 1.0;
    for (std::size_t b = 0; b < batch; ++b) {
        double* emb = c.embedded.data() + b * L * k;
        for (std::size_t t = 0; t < L; ++t) {
            const std::int32_t tok = tokens[b * L + t];
            if (tok < 0 || static_cast<std::size_t>(tok) > s.vocab_size) {
                throw ConfigError("forward: token index " + std::to_string(tok) +
                                  " outside [0, " + std::to_string(s.vocab_size) + "]");
            }
            const double* row = p[kEmbedding].data.data() + static_cast<std::size_t>(tok) * k;
            std::copy(row, row + k, emb + t * k);
        }

        double* a1 = c.conv1.data() + b * s.conv1_len * F;
        conv_relu(emb, k, p[kConv1W].data.data(), p[kConv1B].data.data(), s.kernel, F, s.conv1_len, a1);
        double* p1 = c.pool1.data() + b * s.pool1_len * F;
        max_pool(a1, F, s.pool1_len, p1, c.arg1.data() + b * s.pool1_len * F);

        double* a2 = c.conv2.data() + b * s.conv2_len * F;
        conv_relu(p1, F, p[kConv2W].data.data(), p[kConv2B].data.data(), s.kernel, F, s.conv2_len, a2);
        double* p2 = c.pool2.data() + b * s.pool2_len * F;
        max_pool(a2, F, s.pool2_len, p2, c.arg2.data() + b * s.pool2_len * F);

        double* hp = c.hidden_pre.data() + b * D;
        std::copy(p[kDenseB].data.begin(), p[kDenseB].data.end(), hp);
        for (std::size_t i = 0; i < s.flatten_size; ++i) {
            const double x = p2[i];
            if (x == 0.0) {
                continue;
            }
            const double* w = p[kDenseW].data.data() + i * D;
            for (std::size_t d = 0; d < D; ++d) {
                hp[d] += x * w[d];
            }
        }
        double* h = c.hidden.data() + b * D;
        double* mask = c.dropout_mask.data() + b * D;
        for (std::size_t d = 0; d < D; ++d) {
            if (use_dropout) {
                mask[d] = rng->uniform() < model.dropout_rate ? 0.0 : keep_scale;
            }
            h[d] = std::max(0.0, hp[d]) * mask[d];
        }

        double* prob = c.probs.data() + b * C;
        std::copy(p[kOutB].data.begin(), p[kOutB].data.end(), prob);
        for (std::size_t d = 0; d < D; ++d) {
            const double* w = p[kOutW].data.data() + d * C;
            for (std::size_t j = 0; j < C; ++j) {
                prob[j] += h[d] * w[j];
            }
        }
        const double zmax = *std::max_element(prob, prob + C);
        double total = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            prob[j] = std::exp(prob[j] - zmax);
            total += prob[j];
        }
        for (std::size_t j = 0; j < C; ++j) {
            prob[j] /= total;
        }
    }
    return c;
}

std::vector<double> one_hot(std::span<const int> labels, std::size_t num_classes) {
    std::vector<double> out(labels.size() * num_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i * num_classes + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return out;
}

double cross_entropy(const ForwardCache& cache, std::span<const double> targets,
                     std::size_t num_classes) {
    if (targets.size() != cache.probs.size()) {
        throw ConfigError("cross_entropy: target shape does not match the batch");
    }
    constexpr double kFloor = std::numeric_limits<double>::min();
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] != 0.0) {
            loss -= targets[i] * std::log(std::max(cache.probs[i], kFloor));
        }
    }
    if (num_classes == 0 || cache.batch == 0) {
        return 0.0;
    }
    return loss / static_cast<double>(cache.batch);
}

Gradients backward(const CnnModel& model, const ForwardCache& cache, std::span<const double> targets) {
    const CnnShape& s = model.shape;
    if (targets.size() != cache.probs.size()) {
        throw ConfigError("backward: target shape does not match the batch");
    }
    const std::size_t B = cache.batch, L = s.max_len, k = s.embedding_dim, F = s.filters,
                      D = s.dense_units, C = s.num_classes;
    const auto& p = model.params;

    Gradients g;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        g[i].assign(p[i].size(), 0.0);
    }
    if (B == 0) {
        return g;
    }
    const double inv_batch = 1.0 / static_cast<double>(B);

    std::vector<double> dz(C), dh(D), dflat(s.flatten_size), da2(s.conv2_len * F),
        dp1(s.pool1_len * F), da1(s.conv1_len * F), demb(L * k);

    for (std::size_t b = 0; b < B; ++b) {
        const double* prob = cache.probs.data() + b * C;
        for (std::size_t j = 0; j < C; ++j) {
            dz[j] = (prob[j] - targets[b * C + j]) * inv_batch;
        }

        const double* h = cache.hidden.data() + b * D;
        for (std::size_t d = 0; d < D; ++d) {
            const double* w = p[kOutW].data.data() + d * C;
            double* gw = g[kOutW].data() + d * C;
            double acc = 0.0;
            for (std::size_t j = 0; j < C; ++j) {
                gw[j] += h[d] * dz[j];
                acc += w[j] * dz[j];
            }
            const double pre = cache.hidden_pre[b * D + d];
            dh[d] = pre > 0.0 ? acc * cache.dropout_mask[b * D + d] : 0.0;
        }
        for (std::size_t j = 0; j < C; ++j) {
            g[kOutB][j] += dz[j];
        }

        const double* flat = cache.pool2.data() + b * s.flatten_size;
        for (std::size_t i = 0; i < s.flatten_size; ++i) {
            const double* w = p[kDenseW].data.data() + i * D;
            double* gw = g[kDenseW].data() + i * D;
            double acc = 0.0;
            for (std::size_t d = 0; d < D; ++d) {
                gw[d] += flat[i] * dh[d];
                acc += w[d] * dh[d];
            }
            dflat[i] = acc;
        }
        for (std::size_t d = 0; d < D; ++d) {
            g[kDenseB][d] += dh[d];
        }

        // Pool 2 routes each gradient to its winning position; then ReLU mask.
        std::fill(da2.begin(), da2.end(), 0.0);
        const std::uint32_t* arg2 = cache.arg2.data() + b * s.pool2_len * F;
        for (std::size_t i = 0; i < s.pool2_len * F; ++i) {
            da2[arg2[i] * F + i % F] += dflat[i];
        }
        const double* a2 = cache.conv2.data() + b * s.conv2_len * F;
        for (std::size_t i = 0; i < da2.size(); ++i) {
            if (a2[i] <= 0.0) {
                da2[i] = 0.0;
            }
        }
        std::fill(dp1.begin(), dp1.end(), 0.0);
        conv_backward(cache.pool1.data() + b * s.pool1_len * F, F, p[kConv2W].data.data(), s.kernel,
                      F, s.conv2_len, da2.data(), g[kConv2W].data(), g[kConv2B].data(), dp1.data());

        std::fill(da1.begin(), da1.end(), 0.0);
        const std::uint32_t* arg1 = cache.arg1.data() + b * s.pool1_len * F;
        for (std::size_t i = 0; i < s.pool1_len * F; ++i) {
            da1[arg1[i] * F + i % F] += dp1[i];
        }
        const double* a1 = cache.conv1.data() + b * s.conv1_len * F;
        for (std::size_t i = 0; i < da1.size(); ++i) {
            if (a1[i] <= 0.0) {
                da1[i] = 0.0;
            }
        }
        std::fill(demb.begin(), demb.end(), 0.0);
        conv_backward(cache.embedded.data() + b * L * k, k, p[kConv1W].data.data(), s.kernel, F,
                      s.conv1_len, da1.data(), g[kConv1W].data(), g[kConv1B].data(), demb.data());

        for (std::size_t t = 0; t < L; ++t) {
            const auto tok = static_cast<std::size_t>(cache.tokens[b * L + t]);
            double* row = g[kEmbedding].data() + tok * k;
            for (std::size_t c = 0; c < k; ++c) {
                row[c] += demb[t * k + c];
            }
        }
    }
    return g;
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::size_t t, double learning_rate) {
    if (t == 0) {
        throw ConfigError("adam_step: step counter is 1-based");
    }
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
}

void apply_adam(CnnModel& model, const Gradients& grads, double learning_rate) {
    ++model.adam.step;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (model.adam.m[i].size() != model.params[i].size()) {
            model.adam.m[i].assign(model.params[i].size(), 0.0);
            model.adam.v[i].assign(model.params[i].size(), 0.0);
        }
        adam_step(model.params[i].data, grads[i], model.adam.m[i], model.adam.v[i], model.adam.step,
                  learning_rate);
    }
}

} // namespace opclass::cnn
