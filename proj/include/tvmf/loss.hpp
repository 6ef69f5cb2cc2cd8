#pragma once

#include <cstddef>
#include <vector>

#include "tvmf/similarity.hpp"

namespace tvmf {

using Embedding = std::vector<double>;

/// Two-view contrastive batch.
///
/// Views of one source sample sit at adjacent indices 2k, 2k+1 and carry
/// the same label. `anchors` lists the indices that act as anchors (views of
/// current-task samples); every other index only contributes to the
/// positive and contrast sets of those anchors.
struct ContrastiveBatch {
    std::vector<Embedding> embeddings;
    std::vector<int> labels;
    std::vector<std::size_t> anchors;

    std::size_t size() const { return embeddings.size(); }
    std::size_t dim() const { return embeddings.empty() ? 0 : embeddings.front().size(); }

    /// Throws std::invalid_argument if the batch breaks its invariants.
    void validate() const;
};

/// Contrast set A(i) and positive set P(i) for one anchor.
struct AnchorSets {
    std::size_t anchor;
    std::vector<std::size_t> contrast;
    std::vector<std::size_t> positives;
};

struct IndexSets {
    /// One entry per anchor in batch order of `anchors`, including anchors
    /// whose positive set is empty.
    std::vector<AnchorSets> per_anchor;
    /// Anchors with no positives; the loss skips them.
    std::vector<std::size_t> skipped;
};

IndexSets build_index_sets(const ContrastiveBatch& batch);

struct LossConfig {
    double temperature = 0.5;
    SimilarityKind kind = SimilarityKind::tvmf(16.0);
    /// Divide the summed anchor terms by the number of contributing anchors.
    bool normalize_by_anchors = false;

    void validate() const;
};

struct LossOutput {
    double value = 0.0;
    /// d value / d embedding, one row per embedding.
    std::vector<Embedding> grad;
};

/// Asymmetric supervised contrastive loss
///
///   sum_{i in S} -1/|P(i)| sum_{p in P(i)} log( exp(s_ip / t) / sum_{a in A(i)} exp(s_ia / t) )
///
/// with s_ij = phi(cos(z_i, z_j)) for the configured similarity phi. The
/// cosine is the normalized dot product, clamped to [-1, 1].
///
/// Throws std::invalid_argument if no anchor has a positive.
double asym_supcon_loss(const ContrastiveBatch& batch, const LossConfig& cfg);

/// Loss value plus its exact gradient with respect to every embedding.
/// Pairs whose dot product was clamped receive no cosine gradient.
LossOutput asym_supcon_loss_backward(const ContrastiveBatch& batch, const LossConfig& cfg);

}  // namespace tvmf
