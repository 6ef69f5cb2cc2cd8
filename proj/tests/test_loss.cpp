#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tvmf/loss.hpp"

using namespace tvmf;

namespace {

std::vector<SimilarityKind> all_kinds() {
    return {SimilarityKind::cosine(), SimilarityKind::vmf(16.0), SimilarityKind::tvmf(4.0),
            SimilarityKind::tvmf(16.0), SimilarityKind::tvmf(32.0)};
}

// Worst relative error of the analytic embedding gradient against central
// differences over every coordinate.
double fd_rel_error(const ContrastiveBatch& batch, const LossConfig& cfg, double step) {
    const LossOutput out = asym_supcon_loss_backward(batch, cfg);
    double worst = 0.0;
    ContrastiveBatch probe = batch;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        for (std::size_t d = 0; d < batch.dim(); ++d) {
            const double orig = probe.embeddings[j][d];
            probe.embeddings[j][d] = orig + step;
            const double up = asym_supcon_loss(probe, cfg);
            probe.embeddings[j][d] = orig - step;
            const double down = asym_supcon_loss(probe, cfg);
            probe.embeddings[j][d] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double an = out.grad[j][d];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}));
        }
    }
    return worst;
}

ContrastiveBatch identical_batch(std::vector<int> labels, std::vector<std::size_t> anchors) {
    ContrastiveBatch b;
    const std::vector<double> z{0.6, 0.8, 0.0};
    for (int y : labels) {
        b.embeddings.push_back(z);
        b.labels.push_back(y);
    }
    b.anchors = std::move(anchors);
    return b;
}

}  // namespace

TEST_CASE("index sets for a four-view batch") {
    const auto b = identical_batch({0, 0, 1, 1}, {0});
    const IndexSets s = build_index_sets(b);
    REQUIRE(s.per_anchor.size() == 1);
    CHECK(s.per_anchor[0].anchor == 0);
    CHECK(s.per_anchor[0].contrast == std::vector<std::size_t>{1, 2, 3});
    CHECK(s.per_anchor[0].positives == std::vector<std::size_t>{1});
    CHECK(s.skipped.empty());
}

TEST_CASE("index sets for a single pair") {
    const auto s = build_index_sets(identical_batch({0, 0}, {0, 1}));
    CHECK(s.per_anchor[0].positives == std::vector<std::size_t>{1});
    CHECK(s.per_anchor[1].positives == std::vector<std::size_t>{0});
}

TEST_CASE("index sets with all-distinct labels skip every anchor") {
    const auto s = build_index_sets(identical_batch({0, 1, 2, 3}, {0, 1, 2, 3}));
    for (const auto& a : s.per_anchor) CHECK(a.positives.empty());
    CHECK(s.skipped == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("index set invariants on random batches") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 50; ++t) {
        const auto b = oracle::random_batch(rng, 1 + t % 8, 3, 3);
        const auto s = build_index_sets(b);
        REQUIRE(s.per_anchor.size() == b.anchors.size());
        for (const auto& a : s.per_anchor) {
            CHECK(a.contrast.size() == b.size() - 1);
            CHECK(std::find(a.contrast.begin(), a.contrast.end(), a.anchor) == a.contrast.end());
            for (std::size_t p : a.positives) {
                CHECK(b.labels[p] == b.labels[a.anchor]);
                CHECK(std::find(a.contrast.begin(), a.contrast.end(), p) != a.contrast.end());
            }
        }
    }
}

TEST_CASE("loss of a single positive pair is zero") {
    const auto b = identical_batch({0, 0}, {0});
    for (const auto& kind : all_kinds()) CHECK(std::abs(asym_supcon_loss(b, {0.5, kind, false})) < 1e-15);
}

TEST_CASE("uniform softmax gives log |A(i)|") {
    const auto b = identical_batch({0, 0, 1, 1}, {0});
    for (const auto& kind : all_kinds()) CHECK(std::abs(asym_supcon_loss(b, {0.5, kind, false}) - std::log(3.0)) < 1e-12);
}

TEST_CASE("eight-view t-vmf batch matches the double-loop reference") {
    std::mt19937_64 rng(2024);
    ContrastiveBatch b;
    for (int k = 0; k < 8; ++k) {
        b.embeddings.push_back(oracle::random_unit(rng, 4));
        b.labels.push_back(k < 4 ? 0 : 1);
    }
    b.anchors = {0, 1, 2, 3};
    const LossConfig cfg{0.5, SimilarityKind::tvmf(16.0), false};
    CHECK(std::abs(asym_supcon_loss(b, cfg) - oracle::supcon_loss(b, cfg.kind, 0.5)) < 1e-10);
}

TEST_CASE("loss rejects batches without positives or with bad settings") {
    ContrastiveBatch b;
    b.embeddings = {{1.0, 0.0}, {0.0, 1.0}};
    b.labels = {0, 1};
    b.anchors = {0};
    CHECK_THROWS_AS(asym_supcon_loss(b, {}), std::invalid_argument);

    const auto ok = identical_batch({0, 0}, {0});
    CHECK_THROWS(asym_supcon_loss(ok, {0.0, SimilarityKind::cosine(), false}));
    CHECK_THROWS(asym_supcon_loss(ok, {-1.0, SimilarityKind::cosine(), false}));

    auto no_anchor = ok;
    no_anchor.anchors.clear();
    CHECK_THROWS_AS(asym_supcon_loss(no_anchor, {}), std::invalid_argument);

    auto odd = identical_batch({0, 0, 0}, {0});
    CHECK_THROWS_AS(asym_supcon_loss(odd, {}), std::invalid_argument);

    auto mismatched = identical_batch({0, 1}, {0});
    CHECK_THROWS_AS(asym_supcon_loss(mismatched, {}), std::invalid_argument);

    auto zero = identical_batch({0, 0}, {0});
    zero.embeddings[1] = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(asym_supcon_loss(zero, {}), std::domain_error);
}

TEST_CASE("property: loss is nonnegative") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto b = oracle::random_batch(rng, 1 + t % 8, 2 + t % 7, 3);
        for (const auto& kind : all_kinds()) {
            try {
                CHECK(asym_supcon_loss(b, {0.5, kind, false}) >= 0.0);
            } catch (const std::invalid_argument&) {
                // every anchor happened to lack positives
            }
        }
    }
}

TEST_CASE("property: zero-kappa t-vmf equals cosine") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        const auto b = oracle::random_batch(rng, 2 + t % 6, 2 + t % 7, 2);
        const LossConfig tv{0.5, SimilarityKind::tvmf(0.0), false};
        const LossConfig co{0.5, SimilarityKind::cosine(), false};
        const auto a = asym_supcon_loss_backward(b, tv);
        const auto c = asym_supcon_loss_backward(b, co);
        CHECK(std::abs(a.value - c.value) < 1e-12);
        for (std::size_t j = 0; j < b.size(); ++j)
            for (std::size_t d = 0; d < b.dim(); ++d) CHECK(std::abs(a.grad[j][d] - c.grad[j][d]) < 1e-12);
    }
}

TEST_CASE("property: matches the double-loop reference on 100 random batches") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pairs(1, 8), dims(2, 8);
    for (int t = 0; t < 100; ++t) {
        const auto b = oracle::random_batch(rng, static_cast<std::size_t>(pairs(rng)),
                                            static_cast<std::size_t>(dims(rng)), 3);
        for (const auto& kind : all_kinds()) {
            CAPTURE(kind.name());
            CAPTURE(kind.kappa());
            CHECK(std::abs(asym_supcon_loss(b, {0.5, kind, false}) - oracle::supcon_loss(b, kind, 0.5)) < 1e-10);
        }
    }
}

TEST_CASE("removing a non-anchor changes the loss through the denominator") {
    // anchors {0,1} carry label 0; views 2,3 carry label 1 and are not anchors
    ContrastiveBatch b;
    b.embeddings = {{1.0, 0.0}, {0.8, 0.6}, {0.0, 1.0}, {-0.6, 0.8}};
    b.labels = {0, 0, 1, 1};
    b.anchors = {0, 1};
    const LossConfig cfg{0.5, SimilarityKind::tvmf(16.0), false};
    const double full = asym_supcon_loss(b, cfg);

    ContrastiveBatch reduced;
    reduced.embeddings = {b.embeddings[0], b.embeddings[1]};
    reduced.labels = {0, 0};
    reduced.anchors = {0, 1};
    const double without = asym_supcon_loss(reduced, cfg);
    CHECK(std::abs(without) < 1e-15);
    CHECK(full > without + 1e-3);

    // hand value: each anchor has A = {other anchor, 2, 3}, P = {other anchor}
    auto term = [&](std::size_t i, std::size_t p) {
        double denom = 0.0;
        for (std::size_t a = 0; a < 4; ++a)
            if (a != i) denom += std::exp(oracle::tvmf(oracle::cos_between(b.embeddings[i], b.embeddings[a]), 16.0) / 0.5);
        return -std::log(std::exp(oracle::tvmf(oracle::cos_between(b.embeddings[i], b.embeddings[p]), 16.0) / 0.5) / denom);
    };
    CHECK(std::abs(full - (term(0, 1) + term(1, 0))) < 1e-12);

    // non-anchors are not anchors: making them anchors adds their terms
    auto symmetric = b;
    symmetric.anchors = {0, 1, 2, 3};
    CHECK(asym_supcon_loss(symmetric, cfg) > full);
}

TEST_CASE("property: permutation invariance") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto b = oracle::random_batch(rng, 2 + t % 6, 4, 3);
        const std::size_t n = b.size();
        // permute whole pairs so views stay adjacent
        std::vector<std::size_t> pair_order(n / 2);
        std::iota(pair_order.begin(), pair_order.end(), 0);
        std::shuffle(pair_order.begin(), pair_order.end(), rng);
        std::vector<std::size_t> new_index(n);
        ContrastiveBatch p;
        for (std::size_t k = 0; k < pair_order.size(); ++k) {
            for (std::size_t v = 0; v < 2; ++v) {
                const std::size_t old_i = 2 * pair_order[k] + (t % 2 == 0 ? v : 1 - v);
                new_index[old_i] = p.embeddings.size();
                p.embeddings.push_back(b.embeddings[old_i]);
                p.labels.push_back(b.labels[old_i]);
            }
        }
        for (std::size_t a : b.anchors) p.anchors.push_back(new_index[a]);
        std::shuffle(p.anchors.begin(), p.anchors.end(), rng);
        for (const auto& kind : all_kinds()) {
            const LossConfig cfg{0.5, kind, false};
            double before = 0.0;
            try {
                before = asym_supcon_loss(b, cfg);
            } catch (const std::invalid_argument&) {
                continue;
            }
            CHECK(std::abs(asym_supcon_loss(p, cfg) - before) < 1e-12);
        }
    }
}

TEST_CASE("normalize_by_anchors divides by the contributing anchors") {
    std::mt19937_64 rng(9);
    const auto b = oracle::random_batch(rng, 6, 4, 2);
    const auto sets = build_index_sets(b);
    const double contributing = static_cast<double>(sets.per_anchor.size() - sets.skipped.size());
    const LossConfig plain{0.5, SimilarityKind::tvmf(16.0), false};
    const LossConfig scaled{0.5, SimilarityKind::tvmf(16.0), true};
    CHECK(asym_supcon_loss(b, scaled) == doctest::Approx(asym_supcon_loss(b, plain) / contributing).epsilon(1e-14));
}

TEST_CASE("small temperature stays finite") {
    std::mt19937_64 rng(10);
    const auto b = oracle::random_batch(rng, 5, 4, 2);
    const double v = asym_supcon_loss(b, {1e-3, SimilarityKind::tvmf(16.0), false});
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
}

TEST_CASE("gradient on an identical-embedding batch") {
    const auto b = identical_batch({0, 0, 1, 1}, {0, 1});
    for (const auto& kind : all_kinds()) {
        const auto out = asym_supcon_loss_backward(b, {0.5, kind, false});
        for (const auto& row : out.grad)
            for (double x : row) CHECK(std::isfinite(x));
        CHECK(fd_rel_error(b, {0.5, kind, false}, 1e-5) < 1e-5);
    }
}

TEST_CASE("gradient on an antipodal positive pair") {
    ContrastiveBatch b;
    b.embeddings = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
    b.labels = {3, 3};
    b.anchors = {0, 1};
    for (const auto& kind : all_kinds()) CHECK(fd_rel_error(b, {0.5, kind, false}, 1e-5) < 1e-5);
}

TEST_CASE("gradient matches central differences on random batches") {
    std::mt19937_64 rng(11);
    for (const auto& kind : all_kinds()) {
        for (int t = 0; t < 10; ++t) {
            auto b = oracle::random_batch(rng, 2 + t % 5, 3 + t % 4, 2);
            // off-sphere inputs exercise the normalization Jacobian
            std::uniform_real_distribution<double> s(0.5, 2.0);
            for (auto& e : b.embeddings) {
                const double f = s(rng);
                for (double& x : e) x *= f;
            }
            CAPTURE(kind.name());
            CHECK(fd_rel_error(b, {0.5, kind, false}, 1e-5) < 1e-5);
            CHECK(fd_rel_error(b, {0.5, kind, true}, 1e-5) < 1e-5);
        }
    }
}
