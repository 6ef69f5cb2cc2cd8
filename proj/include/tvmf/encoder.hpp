#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tvmf {

/// Affine map y = W x + b with W stored row-major (out x in).
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

/// MLP feature extractor f followed by a two-layer projection head g.
///
/// f applies ReLU after every layer; its output is the representation the
/// linear probe reads. g is affine -> ReLU -> affine, and the embedding is
/// the l2-normalized output of g.
struct EncoderNet {
    std::vector<DenseLayer> backbone;
    std::vector<DenseLayer> head;

    std::size_t input_dim() const { return backbone.front().in; }
    std::size_t representation_dim() const { return backbone.back().out; }
    std::size_t embedding_dim() const { return head.back().out; }
    std::size_t parameter_count() const;
};

/// Gradients with the same layout as EncoderNet.
struct ParamGrads {
    std::vector<DenseLayer> backbone;
    std::vector<DenseLayer> head;

    static ParamGrads zeros_like(const EncoderNet& net);
    void add(const ParamGrads& other);
    void scale(double s);
};

struct SgdConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t epochs_per_task = 10;
    std::size_t batch_current = 32;
    std::size_t batch_buffer = 32;

    void validate() const;
};

/// Momentum buffer for sgd_step.
struct SgdState {
    std::vector<double> velocity;
};

/// Builds a network with backbone widths `backbone_dims` (input first) and
/// head widths `head_dims` (three entries: in, hidden, projection). Weights
/// are U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from `seed`; biases start at 0.
EncoderNet init_encoder(std::uint64_t seed, std::span<const std::size_t> backbone_dims,
                        std::span<const std::size_t> head_dims);

/// Activations retained by the forward pass for backprop.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> backbone_pre;  // pre-ReLU per backbone layer
    std::vector<double> representation;
    std::vector<double> head_hidden_pre;
    std::vector<double> projection;  // head output before normalization
    double projection_norm = 0.0;
    std::vector<double> embedding;
};

struct ForwardResult {
    std::vector<double> representation;
    std::vector<double> embedding;
};

/// Throws std::domain_error("zero-norm embedding") if the head output is 0.
ForwardCache forward_cached(const EncoderNet& net, std::span<const double> input);
ForwardResult forward(const EncoderNet& net, std::span<const double> input);

/// Representation f(x) only; no normalization, never throws on zero output.
std::vector<double> represent(const EncoderNet& net, std::span<const double> input);

/// Accumulates into `grads` the parameter gradient for an upstream gradient
/// on the embedding.
void backward_into(const EncoderNet& net, const ForwardCache& cache,
                   std::span<const double> upstream, ParamGrads& grads);

ParamGrads backward(const EncoderNet& net, std::span<const double> input,
                    std::span<const double> upstream);

/// Classical momentum: v <- mu v + g; p <- p - lr v.
void sgd_step(EncoderNet& net, const ParamGrads& grads, const SgdConfig& cfg, SgdState& state);

/// All parameters in a fixed order: backbone then head, each layer weight
/// then bias.
std::vector<double> flatten(const EncoderNet& net);
std::vector<double> flatten(const ParamGrads& grads);
void assign_flat(EncoderNet& net, std::span<const double> values);

/// FNV-1a over the parameter bytes.
std::uint64_t parameter_checksum(const EncoderNet& net);

}  // namespace tvmf
