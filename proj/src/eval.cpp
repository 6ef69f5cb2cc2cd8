#include "tvmf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tvmf {

std::vector<double> LinearProbe::logits(std::span<const double> features) const {
    if (features.size() != dim) throw std::invalid_argument("probe feature dimension mismatch");
    std::vector<double> out(bias);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double* row = weight.data() + c * dim;
        double s = out[c];
        for (std::size_t d = 0; d < dim; ++d) s += row[d] * features[d];
        out[c] = s;
    }
    return out;
}

std::vector<Sample> build_probe_set(const Task& final_task, const ReplayBuffer& buffer) {
    std::vector<Sample> set(final_task.train);
    set.insert(set.end(), buffer.items().begin(), buffer.items().end());
    return set;
}

std::vector<double> probe_features(const EncoderNet& net, std::span<const double> input,
                                   bool on_embedding) {
    if (on_embedding) return forward(net, input).embedding;
    return represent(net, input);
}

LinearProbe fit_probe(const EncoderNet& net, std::span<const Sample> probe_set,
                      std::size_t num_classes, const ProbeConfig& cfg, ProbeAudit* audit) {
    if (num_classes < 2) throw std::invalid_argument("probe needs at least two classes");

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < probe_set.size(); ++i) {
        const int y = probe_set[i].label;
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw std::invalid_argument("probe sample label " + std::to_string(y) + " out of range");
        }
        by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    std::string missing;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (by_class[c].empty()) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
    }
    if (!missing.empty()) throw std::invalid_argument("probe set has no samples for classes: " + missing);

    // balance by subsampling every class to the smallest class count
    std::size_t per_class = std::numeric_limits<std::size_t>::max();
    for (const auto& idx : by_class) per_class = std::min(per_class, idx.size());
    Rng rng(cfg.seed);
    std::vector<std::size_t> chosen;
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class));
    }

    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    x.reserve(chosen.size());
    for (std::size_t i : chosen) {
        const Sample& s = probe_set[i];
        if (audit) audit->accessed_ids.push_back(s.id);
        x.push_back(probe_features(net, s.input, cfg.on_embedding));
        y.push_back(static_cast<std::size_t>(s.label));
    }
    const std::size_t n = x.size();
    const std::size_t dim = x.front().size();

    std::vector<double> mean(dim, 0.0), scale(dim, 1.0);
    for (const auto& row : x)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += row[d];
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t d = 0; d < dim; ++d) {
        double v = 0.0;
        for (const auto& row : x) v += (row[d] - mean[d]) * (row[d] - mean[d]);
        const double sd = std::sqrt(v / static_cast<double>(n));
        scale[d] = sd > 1e-8 ? 1.0 / sd : 1.0;
    }
    for (auto& row : x)
        for (std::size_t d = 0; d < dim; ++d) row[d] = (row[d] - mean[d]) * scale[d];

    std::vector<double> w(num_classes * dim, 0.0), b(num_classes, 0.0);
    std::vector<double> gw(w.size()), gb(b.size()), logit(num_classes);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < num_classes; ++c) {
                double s = b[c];
                for (std::size_t d = 0; d < dim; ++d) s += w[c * dim + d] * x[i][d];
                logit[c] = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (double& l : logit) {
                l = std::exp(l - mx);
                z += l;
            }
            for (std::size_t c = 0; c < num_classes; ++c) {
                const double g = (logit[c] / z - (c == y[i] ? 1.0 : 0.0)) * inv_n;
                gb[c] += g;
                for (std::size_t d = 0; d < dim; ++d) gw[c * dim + d] += g * x[i][d];
            }
        }
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * gw[k];
        for (std::size_t k = 0; k < b.size(); ++k) b[k] -= cfg.learning_rate * gb[k];
    }

    // fold standardization: w' = w * scale, b' = b - w' . mean
    LinearProbe probe{num_classes, dim, std::vector<double>(w.size()), b};
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double wd = w[c * dim + d] * scale[d];
            probe.weight[c * dim + d] = wd;
            probe.bias[c] -= wd * mean[d];
        }
    }
    return probe;
}

namespace {

std::size_t argmax_over(const std::vector<double>& logits, const std::vector<int>& classes) {
    std::size_t best = static_cast<std::size_t>(classes.front());
    for (int c : classes) {
        if (logits[static_cast<std::size_t>(c)] > logits[best]) best = static_cast<std::size_t>(c);
    }
    return best;
}

}  // namespace

EvalReport evaluate(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                    bool on_embedding) {
    std::vector<int> all_classes(stream.num_classes);
    std::iota(all_classes.begin(), all_classes.end(), 0);

    EvalReport report;
    std::size_t pooled_correct = 0, pooled_total = 0;
    double task_il_sum = 0.0;
    std::size_t tasks_scored = 0;
    for (const Task& task : stream.tasks) {
        std::size_t cil = 0, til = 0;
        for (const Sample& s : task.test) {
            const auto logits = probe.logits(probe_features(net, s.input, on_embedding));
            const auto y = static_cast<std::size_t>(s.label);
            if (argmax_over(logits, all_classes) == y) ++cil;
            if (argmax_over(logits, task.classes) == y) ++til;
        }
        const std::size_t n = task.test.size();
        report.per_task_class_il.push_back(n ? static_cast<double>(cil) / static_cast<double>(n) : 0.0);
        report.per_task_task_il.push_back(n ? static_cast<double>(til) / static_cast<double>(n) : 0.0);
        pooled_correct += cil;
        pooled_total += n;
        if (n) {
            task_il_sum += report.per_task_task_il.back();
            ++tasks_scored;
        }
    }
    report.class_il = pooled_total ? static_cast<double>(pooled_correct) / static_cast<double>(pooled_total) : 0.0;
    report.task_il = tasks_scored ? task_il_sum / static_cast<double>(tasks_scored) : 0.0;
    return report;
}

double class_il_accuracy(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                         bool on_embedding) {
    return evaluate(net, probe, stream, on_embedding).class_il;
}

double task_il_accuracy(const EncoderNet& net, const LinearProbe& probe, const TaskStream& stream,
                        bool on_embedding) {
    return evaluate(net, probe, stream, on_embedding).task_il;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double v = 0.0;
        for (double x : values) v += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(v / static_cast<double>(values.size() - 1));
    }
    return s;
}

RunMetrics RunMetrics::aggregate(std::vector<SeedMetrics> per_seed) {
    RunMetrics m;
    std::vector<double> cil, til;
    for (const auto& s : per_seed) {
        cil.push_back(s.report.class_il);
        til.push_back(s.report.task_il);
    }
    m.class_il = summarize(cil);
    m.task_il = summarize(til);
    m.per_seed = std::move(per_seed);
    return m;
}

}  // namespace tvmf
