#include "tvmf/loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tvmf {

void ContrastiveBatch::validate() const {
    if (embeddings.size() != labels.size()) {
        throw std::invalid_argument("batch has " + std::to_string(embeddings.size()) +
                                    " embeddings but " + std::to_string(labels.size()) + " labels");
    }
    if (embeddings.empty() || embeddings.size() % 2 != 0) {
        throw std::invalid_argument("batch must hold a positive, even number of views");
    }
    const std::size_t d = dim();
    if (d == 0) throw std::invalid_argument("embeddings must be non-empty");
    for (const auto& e : embeddings) {
        if (e.size() != d) throw std::invalid_argument("embeddings differ in dimension");
    }
    for (std::size_t k = 0; k < labels.size(); k += 2) {
        if (labels[k] != labels[k + 1]) {
            throw std::invalid_argument("paired views " + std::to_string(k) + "," +
                                        std::to_string(k + 1) + " carry different labels");
        }
    }
    if (anchors.empty()) throw std::invalid_argument("anchor set is empty");
    std::vector<bool> seen(size(), false);
    for (std::size_t i : anchors) {
        if (i >= size()) throw std::invalid_argument("anchor index out of range");
        if (seen[i]) throw std::invalid_argument("duplicate anchor index");
        seen[i] = true;
    }
}

void LossConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("temperature must be positive");
    }
}

IndexSets build_index_sets(const ContrastiveBatch& batch) {
    IndexSets sets;
    sets.per_anchor.reserve(batch.anchors.size());
    for (std::size_t i : batch.anchors) {
        AnchorSets s{i, {}, {}};
        s.contrast.reserve(batch.size() - 1);
        for (std::size_t a = 0; a < batch.size(); ++a) {
            if (a == i) continue;
            s.contrast.push_back(a);
            if (batch.labels[a] == batch.labels[i]) s.positives.push_back(a);
        }
        if (s.positives.empty()) sets.skipped.push_back(i);
        sets.per_anchor.push_back(std::move(s));
    }
    return sets;
}

namespace {

struct Prepared {
    std::vector<Embedding> unit;
    std::vector<double> norms;
};

Prepared prepare(const ContrastiveBatch& batch) {
    Prepared p;
    p.unit.reserve(batch.size());
    p.norms.reserve(batch.size());
    for (const auto& e : batch.embeddings) {
        const double n = norm(e);
        if (!(n > 0.0)) throw std::domain_error("zero-norm embedding in batch");
        Embedding u(e);
        for (double& x : u) x /= n;
        p.unit.push_back(std::move(u));
        p.norms.push_back(n);
    }
    return p;
}

LossOutput evaluate(const ContrastiveBatch& batch, const LossConfig& cfg, bool with_grad) {
    batch.validate();
    cfg.validate();
    const IndexSets sets = build_index_sets(batch);
    if (sets.skipped.size() == sets.per_anchor.size()) {
        throw std::invalid_argument("no positive pairs: every anchor has an empty P(i)");
    }

    const Prepared prep = prepare(batch);
    const double inv_t = 1.0 / cfg.temperature;
    const std::size_t dim = batch.dim();

    LossOutput out;
    if (with_grad) out.grad.assign(batch.size(), Embedding(dim, 0.0));

    std::vector<double> cosines;
    std::vector<bool> clamped;
    std::vector<double> logits;
    std::size_t contributing = 0;

    for (const AnchorSets& s : sets.per_anchor) {
        if (s.positives.empty()) continue;
        ++contributing;
        const std::size_t i = s.anchor;
        const std::size_t n = s.contrast.size();

        cosines.resize(n);
        clamped.assign(n, false);
        logits.resize(n);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            const double raw = dot(prep.unit[i], prep.unit[s.contrast[k]]);
            const double c = std::clamp(raw, -1.0, 1.0);
            clamped[k] = (c != raw);
            cosines[k] = c;
            logits[k] = similarity(cfg.kind, c) * inv_t;
            max_logit = std::max(max_logit, logits[k]);
        }
        double sum_exp = 0.0;
        for (double l : logits) sum_exp += std::exp(l - max_logit);
        const double log_norm = max_logit + std::log(sum_exp);

        // positives are a subsequence of the contrast set, in order
        std::vector<bool> is_pos(n, false);
        double pos_logit_sum = 0.0;
        {
            std::size_t p = 0;
            for (std::size_t k = 0; k < n && p < s.positives.size(); ++k) {
                if (s.contrast[k] == s.positives[p]) {
                    is_pos[k] = true;
                    pos_logit_sum += logits[k];
                    ++p;
                }
            }
        }
        const double inv_pos = 1.0 / static_cast<double>(s.positives.size());
        out.value += log_norm - pos_logit_sum * inv_pos;

        if (!with_grad) continue;
        for (std::size_t k = 0; k < n; ++k) {
            if (clamped[k]) continue;
            const std::size_t a = s.contrast[k];
            const double q = std::exp(logits[k] - log_norm);
            const double dlogit = q - (is_pos[k] ? inv_pos : 0.0);
            const double g = dlogit * inv_t * similarity_dcos(cfg.kind, cosines[k]);
            if (g == 0.0) continue;
            const double c = cosines[k];
            const double gi = g / prep.norms[i];
            const double ga = g / prep.norms[a];
            for (std::size_t d = 0; d < dim; ++d) {
                out.grad[i][d] += gi * (prep.unit[a][d] - c * prep.unit[i][d]);
                out.grad[a][d] += ga * (prep.unit[i][d] - c * prep.unit[a][d]);
            }
        }
    }

    if (cfg.normalize_by_anchors) {
        const double scale = 1.0 / static_cast<double>(contributing);
        out.value *= scale;
        for (auto& row : out.grad)
            for (double& x : row) x *= scale;
    }
    return out;
}

}  // namespace

double asym_supcon_loss(const ContrastiveBatch& batch, const LossConfig& cfg) {
    return evaluate(batch, cfg, false).value;
}

LossOutput asym_supcon_loss_backward(const ContrastiveBatch& batch, const LossConfig& cfg) {
    return evaluate(batch, cfg, true);
}

}  // namespace tvmf
