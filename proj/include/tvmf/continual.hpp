#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tvmf/buffer.hpp"
#include "tvmf/data.hpp"
#include "tvmf/encoder.hpp"
#include "tvmf/eval.hpp"
#include "tvmf/loss.hpp"

namespace tvmf {

struct RunConfig {
    SgdConfig sgd;
    LossConfig loss;
    AugmentConfig augment;
    ProbeConfig probe;
    std::size_t buffer_capacity = 200;
    /// Hidden widths of the feature extractor; the input width is prepended
    /// from the stream.
    std::vector<std::size_t> backbone_hidden{64, 32};
    std::size_t projection_dim = 16;
    std::vector<std::uint64_t> seeds{0};

    void validate() const;
};

/// Views of current and replayed samples, before encoding.
struct ComposedBatch {
    std::vector<std::vector<double>> views;
    std::vector<int> labels;
    /// Indices of views that came from current-task samples.
    std::vector<std::size_t> anchors;
    std::vector<std::uint64_t> source_ids;
};

/// Two views per sample, current samples first. Only current views become
/// anchors; replayed views join the positive and contrast sets.
ComposedBatch compose_batch(std::span<const Sample> current, std::span<const Sample> replayed,
                            const AugmentConfig& cfg, const std::optional<ImageShape>& image, Rng& rng);

struct EpochLoss {
    std::size_t task = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
};

struct TrainerState {
    EncoderNet net;
    SgdState sgd;
    ReplayBuffer buffer{0};
    /// Number of tasks trained so far.
    std::size_t task_index = 0;
    Rng data_rng;
    Rng buffer_rng;
    std::vector<EpochLoss> history;
    /// Minibatches that wanted replay but found the buffer empty.
    std::size_t empty_replay_batches = 0;
    /// View pairs left out of a step because the encoder mapped a view to
    /// the zero vector, where the embedding is undefined.
    std::size_t dropped_pairs = 0;
    /// Steps with no usable current pair left; no update was applied.
    std::size_t skipped_steps = 0;
};

TrainerState make_trainer(std::uint64_t seed, const RunConfig& cfg, std::size_t input_dim);

/// Loss of the encoded batch and, if `grads` is given, its gradient with
/// respect to every network parameter (accumulated into `grads`). Throws
/// std::domain_error if any view encodes to the zero vector.
double encoded_batch_loss(const EncoderNet& net, const ComposedBatch& batch, const LossConfig& cfg,
                          ParamGrads* grads);

/// One optimizer step on a composed minibatch; returns the batch loss, or
/// nothing if every current pair was dropped as degenerate.
std::optional<double> train_step(TrainerState& state, const ComposedBatch& batch, const RunConfig& cfg);

/// Epoch loop over one task, then every training sample of the task is
/// streamed through the reservoir. With zero epochs only the task index
/// advances.
void train_task(TrainerState& state, const Task& task, const std::optional<ImageShape>& image,
                const RunConfig& cfg);

struct SeedRun {
    TrainerState state;
    LinearProbe probe;
    SeedMetrics metrics;
};

struct ExperimentResult {
    std::vector<SeedRun> runs;
    RunMetrics metrics;
};

/// Trains every task in order for each seed, fits the probe on the final
/// task plus the buffer, and evaluates on all test sets.
ExperimentResult run_experiment(const TaskStream& stream, const RunConfig& cfg);

}  // namespace tvmf
