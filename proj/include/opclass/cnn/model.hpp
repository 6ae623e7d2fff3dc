#pragma once

#include "opclass/random.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace opclass::cnn {

/// Training and architecture settings. The first five defaults follow the
/// published training table; the remaining architecture values are our
/// own choice and exposed as flags.
struct CnnConfig {
    std::size_t embedding_dim = 8;
    double length_percentile = 50.0;
    std::size_t epochs = 16;
    std::size_t batch_size = 32;
    double validation_split = 0.1;
    std::size_t conv_filters = 64;
    std::size_t conv_kernel = 8;
    std::size_t dense_units = 128;
    double dropout_rate = 0.5;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Layer sizes derived from the configuration and the sequence length.
struct CnnShape {
    std::size_t vocab_size = 0; ///< distinct opcodes; index 0 is padding
    std::size_t embedding_dim = 0;
    std::size_t max_len = 0;
    std::size_t filters = 0;
    std::size_t kernel = 0;
    std::size_t dense_units = 0;
    std::size_t num_classes = 0;

    std::size_t conv1_len = 0;
    std::size_t pool1_len = 0;
    std::size_t conv2_len = 0;
    std::size_t pool2_len = 0;
    std::size_t flatten_size = 0;

    /// Throws ConfigError when max_len cannot survive two valid
    /// convolutions and two halving pools; the message names the minimum.
    static CnnShape compute(std::size_t vocab_size, std::size_t embedding_dim, std::size_t max_len,
                            std::size_t filters, std::size_t kernel, std::size_t dense_units,
                            std::size_t num_classes);

    /// Smallest max_len for which both pooled lengths are >= 1.
    static std::size_t minimum_length(std::size_t kernel);

    bool operator==(const CnnShape&) const = default;
};

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
};

enum Param : std::size_t {
    kEmbedding, ///< (vocab_size + 1) x embedding_dim
    kConv1W,    ///< kernel x embedding_dim x filters
    kConv1B,    ///< filters
    kConv2W,    ///< kernel x filters x filters
    kConv2B,    ///< filters
    kDenseW,    ///< flatten_size x dense_units
    kDenseB,    ///< dense_units
    kOutW,      ///< dense_units x num_classes
    kOutB,      ///< num_classes
    kParamCount
};

using Gradients = std::array<std::vector<double>, kParamCount>;

struct AdamState {
    std::array<std::vector<double>, kParamCount> m;
    std::array<std::vector<double>, kParamCount> v;
    std::size_t step = 0;
};

/// embedding -> conv(ReLU) -> maxpool(2) -> conv(ReLU) -> maxpool(2)
/// -> flatten -> dense(ReLU) -> dropout -> dense -> softmax
struct CnnModel {
    CnnShape shape;
    double dropout_rate = 0.0;
    std::array<Tensor, kParamCount> params;
    AdamState adam;

    std::size_t parameter_count() const;
};

/// Embedding rows draw from uniform(-0.05, 0.05); conv and dense weights from
/// N(0, 2 / fan_in), the output layer from N(0, 1 / fan_in); biases start at 0.
CnnModel build_model(const CnnConfig& config, std::size_t vocab_size, std::size_t num_classes,
                     std::size_t max_len);

/// Activations kept for the backward pass. Every buffer is batch-major.
struct ForwardCache {
    std::size_t batch = 0;
    std::vector<std::int32_t> tokens;
    std::vector<double> embedded;     ///< B x L x k
    std::vector<double> conv1;        ///< B x L1 x F, post-ReLU
    std::vector<double> pool1;        ///< B x P1 x F
    std::vector<std::uint32_t> arg1;  ///< winning conv1 position per pool1 cell
    std::vector<double> conv2;        ///< B x L2 x F, post-ReLU
    std::vector<double> pool2;        ///< B x P2 x F (== flattened input)
    std::vector<std::uint32_t> arg2;
    std::vector<double> hidden_pre;   ///< B x D
    std::vector<double> dropout_mask; ///< B x D, 0 or 1/(1-rate); all 1 at inference
    std::vector<double> hidden;       ///< B x D, after ReLU and dropout
    std::vector<double> probs;        ///< B x C
};

/// `tokens` holds `batch` rows of max_len indices in [0, vocab_size].
/// Dropout is applied only when `training` is true, drawing from `rng`.
ForwardCache forward(const CnnModel& model, std::span<const std::int32_t> tokens,
                     std::size_t batch, bool training, Rng* rng = nullptr);

/// Mean categorical cross-entropy of cached probabilities against targets
/// given as a B x C row-stochastic matrix.
double cross_entropy(const ForwardCache& cache, std::span<const double> targets,
                     std::size_t num_classes);

/// Gradients of mean cross-entropy with respect to every parameter tensor.
Gradients backward(const CnnModel& model, const ForwardCache& cache,
                   std::span<const double> targets);

std::vector<double> one_hot(std::span<const int> labels, std::size_t num_classes);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam update, elementwise. `t` is the 1-based step.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::size_t t, double learning_rate);

/// Adam over every tensor of the model, advancing model.adam.step.
void apply_adam(CnnModel& model, const Gradients& grads, double learning_rate);

} // namespace opclass::cnn
