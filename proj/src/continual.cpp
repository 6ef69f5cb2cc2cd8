#include "tvmf/continual.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tvmf {

void RunConfig::validate() const {
    sgd.validate();
    loss.validate();
    augment.validate();
    if (backbone_hidden.empty()) throw std::invalid_argument("backbone needs at least one layer");
    if (projection_dim < 2) throw std::invalid_argument("projection dimension must be >= 2");
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");
}

ComposedBatch compose_batch(std::span<const Sample> current, std::span<const Sample> replayed,
                            const AugmentConfig& cfg, const std::optional<ImageShape>& image, Rng& rng) {
    if (current.empty()) throw std::invalid_argument("a batch needs at least one current sample");
    ComposedBatch batch;
    const std::size_t n = 2 * (current.size() + replayed.size());
    batch.views.reserve(n);
    batch.labels.reserve(n);
    batch.source_ids.reserve(n);
    auto push = [&](const Sample& s, bool anchor) {
        auto [a, b] = two_views(s, cfg, image, rng);
        for (auto* v : {&a, &b}) {
            if (anchor) batch.anchors.push_back(batch.views.size());
            batch.views.push_back(std::move(*v));
            batch.labels.push_back(s.label);
            batch.source_ids.push_back(s.id);
        }
    };
    for (const Sample& s : current) push(s, true);
    for (const Sample& s : replayed) push(s, false);
    return batch;
}

TrainerState make_trainer(std::uint64_t seed, const RunConfig& cfg, std::size_t input_dim) {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), cfg.backbone_hidden.begin(), cfg.backbone_hidden.end());
    const std::vector<std::size_t> head{dims.back(), cfg.projection_dim, cfg.projection_dim};

    TrainerState state;
    state.net = init_encoder(seed, dims, head);
    state.buffer = ReplayBuffer(cfg.buffer_capacity);
    std::seed_seq data_seq{seed, std::uint64_t{1}, cfg.augment.seed};
    std::seed_seq buffer_seq{seed, std::uint64_t{2}};
    state.data_rng.seed(data_seq);
    state.buffer_rng.seed(buffer_seq);
    return state;
}

namespace {

struct Encoded {
    std::vector<ForwardCache> caches;
    ContrastiveBatch batch;
    std::size_t dropped_pairs = 0;
};

// With `drop_degenerate`, a view pair with a zero-norm embedding is left out
// instead of aborting the batch.
Encoded encode(const EncoderNet& net, const ComposedBatch& batch, bool drop_degenerate) {
    Encoded e;
    std::vector<bool> is_anchor(batch.views.size(), false);
    for (std::size_t a : batch.anchors) is_anchor[a] = true;
    e.caches.reserve(batch.views.size());
    for (std::size_t i = 0; i + 1 < batch.views.size(); i += 2) {
        ForwardCache first, second;
        try {
            first = forward_cached(net, batch.views[i]);
            second = forward_cached(net, batch.views[i + 1]);
        } catch (const std::domain_error&) {
            if (!drop_degenerate) throw;
            ++e.dropped_pairs;
            continue;
        }
        for (std::size_t v = 0; v < 2; ++v) {
            if (is_anchor[i + v]) e.batch.anchors.push_back(e.batch.embeddings.size());
            e.batch.embeddings.push_back(v == 0 ? first.embedding : second.embedding);
            e.batch.labels.push_back(batch.labels[i + v]);
        }
        e.caches.push_back(std::move(first));
        e.caches.push_back(std::move(second));
    }
    return e;
}

double loss_and_grads(const EncoderNet& net, const Encoded& e, const LossConfig& cfg, ParamGrads* grads) {
    if (!grads) return asym_supcon_loss(e.batch, cfg);
    const LossOutput out = asym_supcon_loss_backward(e.batch, cfg);
    for (std::size_t j = 0; j < e.caches.size(); ++j) backward_into(net, e.caches[j], out.grad[j], *grads);
    return out.value;
}

}  // namespace

double encoded_batch_loss(const EncoderNet& net, const ComposedBatch& batch, const LossConfig& cfg,
                          ParamGrads* grads) {
    return loss_and_grads(net, encode(net, batch, false), cfg, grads);
}

std::optional<double> train_step(TrainerState& state, const ComposedBatch& batch, const RunConfig& cfg) {
    const Encoded e = encode(state.net, batch, true);
    state.dropped_pairs += e.dropped_pairs;
    if (e.batch.anchors.empty()) {
        ++state.skipped_steps;
        return std::nullopt;
    }
    ParamGrads grads = ParamGrads::zeros_like(state.net);
    const double loss = loss_and_grads(state.net, e, cfg.loss, &grads);
    sgd_step(state.net, grads, cfg.sgd, state.sgd);
    return loss;
}

void train_task(TrainerState& state, const Task& task, const std::optional<ImageShape>& image,
                const RunConfig& cfg) {
    const std::size_t task_id = state.task_index;
    if (cfg.sgd.epochs_per_task == 0) {
        ++state.task_index;
        return;
    }
    if (task.train.empty()) throw std::invalid_argument("task has no training samples");

    std::vector<std::size_t> order(task.train.size());
    std::vector<Sample> current;
    for (std::size_t epoch = 0; epoch < cfg.sgd.epochs_per_task; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), state.data_rng);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.sgd.batch_current) {
            const std::size_t end = std::min(order.size(), start + cfg.sgd.batch_current);
            current.clear();
            for (std::size_t k = start; k < end; ++k) current.push_back(task.train[order[k]]);

            std::vector<Sample> replayed;
            if (cfg.sgd.batch_buffer > 0) {
                if (state.buffer.empty()) {
                    ++state.empty_replay_batches;
                } else {
                    replayed = state.buffer.sample(cfg.sgd.batch_buffer, state.buffer_rng);
                }
            }
            const ComposedBatch batch = compose_batch(current, replayed, cfg.augment, image, state.data_rng);
            if (const auto loss = train_step(state, batch, cfg)) {
                loss_sum += *loss;
                ++batches;
            }
        }
        const double mean = batches > 0 ? loss_sum / static_cast<double>(batches)
                                        : std::numeric_limits<double>::quiet_NaN();
        state.history.push_back({task_id, epoch, mean});
    }

    for (const Sample& s : task.train) state.buffer.reservoir_insert(s, state.buffer_rng);
    ++state.task_index;
}

ExperimentResult run_experiment(const TaskStream& stream, const RunConfig& cfg) {
    cfg.validate();
    if (stream.tasks.empty()) throw std::invalid_argument("task stream is empty");

    ExperimentResult result;
    std::vector<SeedMetrics> per_seed;
    for (std::uint64_t seed : cfg.seeds) {
        TrainerState state = make_trainer(seed, cfg, stream.input_dim);
        for (const Task& task : stream.tasks) train_task(state, task, stream.image, cfg);

        ProbeConfig probe_cfg = cfg.probe;
        probe_cfg.seed = seed;
        const auto probe_set = build_probe_set(stream.tasks.back(), state.buffer);
        LinearProbe probe = fit_probe(state.net, probe_set, stream.num_classes, probe_cfg);
        SeedMetrics m{seed, evaluate(state.net, probe, stream, cfg.probe.on_embedding)};
        per_seed.push_back(m);
        result.runs.push_back({std::move(state), std::move(probe), std::move(m)});
    }
    result.metrics = RunMetrics::aggregate(std::move(per_seed));
    return result;
}

}  // namespace tvmf
