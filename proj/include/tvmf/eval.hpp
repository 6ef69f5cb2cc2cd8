#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tvmf/buffer.hpp"
#include "tvmf/data.hpp"
#include "tvmf/encoder.hpp"

namespace tvmf {

/// Linear classifier over frozen encoder features.
struct LinearProbe {
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::vector<double> weight;  // num_classes x dim, row-major
    std::vector<double> bias;

    std::vector<double> logits(std::span<const double> features) const;
};

struct ProbeConfig {
    std::size_t epochs = 200;
    double learning_rate = 0.5;
    /// Read g(f(x)) instead of f(x).
    bool on_embedding = false;
    std::uint64_t seed = 0;
};

/// Records every sample id the probe reads during fitting.
struct ProbeAudit {
    std::vector<std::uint64_t> accessed_ids;
};

/// Final-task training samples followed by the buffer contents.
std::vector<Sample> build_probe_set(const Task& final_task, const ReplayBuffer& buffer);

/// Features the probe consumes for one input.
std::vector<double> probe_features(const EncoderNet& net, std::span<const double> input,
                                   bool on_embedding);

/// Multinomial logistic regression by full-batch gradient descent on
/// standardized features, folded back into a plain affine map at the end.
/// Each class is subsampled to the smallest class count first.
///
/// Throws std::invalid_argument listing classes with no samples.
LinearProbe fit_probe(const EncoderNet& net, std::span<const Sample> probe_set,
                      std::size_t num_classes, const ProbeConfig& cfg, ProbeAudit* audit = nullptr);

/// Pooled accuracy over every task's test set, argmax over all classes.
double class_il_accuracy(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                         bool on_embedding = false);

/// Argmax restricted to the sample's own task classes; mean over tasks.
double task_il_accuracy(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                        bool on_embedding = false);

struct EvalReport {
    double class_il = 0.0;
    double task_il = 0.0;
    std::vector<double> per_task_class_il;
    std::vector<double> per_task_task_il;
};

EvalReport evaluate(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                    bool on_embedding = false);

struct SeedMetrics {
    std::uint64_t seed = 0;
    EvalReport report;
};

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n - 1); 0 for a single value
};

Summary summarize(std::span<const double> values);

struct RunMetrics {
    std::vector<SeedMetrics> per_seed;
    Summary class_il;
    Summary task_il;

    static RunMetrics aggregate(std::vector<SeedMetrics> per_seed);
};

}  // namespace tvmf
