#include "tvmf/checks.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tvmf/continual.hpp"
#include "tvmf/gradcheck.hpp"
#include "tvmf/loss.hpp"
#include "tvmf/similarity.hpp"

namespace tvmf {

TvmfUnderTest TvmfUnderTest::library() {
    return {[](double c, double k) { return tvmf_similarity(c, Kappa(k)); },
            [](double c, double k) { return tvmf_similarity_dcos(c, Kappa(k)); }};
}

namespace {

constexpr double kKappaMax = 64.0;

struct Draw {
    double c;
    double kappa;
};

std::vector<Draw> draws(std::uint64_t seed, std::size_t n, double c_margin) {
    Rng rng(seed);
    std::uniform_real_distribution<double> cos_dist(-1.0 + c_margin, 1.0 - c_margin);
    std::uniform_real_distribution<double> kappa_dist(0.0, kKappaMax);
    std::vector<Draw> out(n);
    for (auto& d : out) d = {cos_dist(rng), kappa_dist(rng)};
    return out;
}

std::string sci(double x) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << x;
    return ss.str();
}

std::string describe(double c, double kappa) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "c=" << c << " kappa=" << kappa;
    return ss.str();
}

CheckResult check_bounds(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    for (const auto& d : ds) {
        const double v = impl.value(d.c, d.kappa);
        if (!(v >= -1.0 && v <= 1.0)) return {"tvmf_bounds", false, "out of [-1,1] at " + describe(d.c, d.kappa)};
        if (impl.value(1.0, d.kappa) != 1.0 || impl.value(-1.0, d.kappa) != -1.0) {
            return {"tvmf_bounds", false, "endpoint not exact at kappa=" + std::to_string(d.kappa)};
        }
    }
    return {"tvmf_bounds", true, ""};
}

CheckResult check_monotone(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    for (std::size_t i = 0; i + 1 < ds.size(); i += 2) {
        double c1 = ds[i].c, c2 = ds[i + 1].c;
        if (c1 == c2) continue;
        if (c1 > c2) std::swap(c1, c2);
        const double k = ds[i].kappa;
        if (!(impl.value(c1, k) < impl.value(c2, k))) {
            return {"tvmf_monotone_in_cos", false, "not increasing between " + describe(c1, k) + " and c=" + std::to_string(c2)};
        }
    }
    return {"tvmf_monotone_in_cos", true, ""};
}

CheckResult check_compactness(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    for (std::size_t i = 0; i + 1 < ds.size(); i += 2) {
        const double c = ds[i].c;
        double k1 = ds[i].kappa, k2 = ds[i + 1].kappa;
        if (k1 == k2) continue;
        if (k1 > k2) std::swap(k1, k2);
        if (!(impl.value(c, k2) < impl.value(c, k1))) {
            return {"tvmf_decreasing_in_kappa", false, "not decreasing at " + describe(c, k1)};
        }
        const double v = impl.value(c, k2);
        if (!(v < c)) return {"tvmf_decreasing_in_kappa", false, "phi >= c at " + describe(c, k2)};
    }
    return {"tvmf_decreasing_in_kappa", true, ""};
}

CheckResult check_reduction(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    for (const auto& d : ds) {
        if (impl.value(d.c, 0.0) != d.c) return {"tvmf_reduction", false, "phi(c;0) != c at " + describe(d.c, 0.0)};
        if (std::abs(impl.value(d.c, 1e-8) - d.c) > 1e-7) {
            return {"tvmf_reduction", false, "phi(c;1e-8) far from c at " + describe(d.c, 1e-8)};
        }
    }
    return {"tvmf_reduction", true, ""};
}

CheckResult check_derivation(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    for (const auto& d : ds) {
        const double via_profile =
            rescaled_profile_similarity([](double r, Kappa k) { return profile_t(r, k); }, d.c, Kappa(d.kappa));
        if (std::abs(via_profile - impl.value(d.c, d.kappa)) > 1e-12) {
            return {"derivation_consistency", false, "profile rescaling disagrees at " + describe(d.c, d.kappa)};
        }
        if (d.kappa > 0.0) {
            const double vmf_profile = rescaled_profile_similarity(
                [](double r, Kappa k) { return profile_exp(r, k); }, d.c, Kappa(d.kappa));
            if (std::abs(vmf_profile - vmf_similarity(d.c, Kappa(d.kappa))) > 1e-12) {
                return {"derivation_consistency", false, "vMF profile rescaling disagrees at " + describe(d.c, d.kappa)};
            }
        }
    }
    return {"derivation_consistency", true, ""};
}

CheckResult check_similarity_gradient(const TvmfUnderTest& impl, const std::vector<Draw>& ds) {
    constexpr double h = 1e-6;
    double worst = 0.0;
    for (const auto& d : ds) {
        const double fd = (impl.value(d.c + h, d.kappa) - impl.value(d.c - h, d.kappa)) / (2.0 * h);
        const double an = impl.dcos(d.c, d.kappa);
        const double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
        worst = std::max(worst, rel);
        if (!(rel < 1e-6)) {
            return {"tvmf_gradient", false, "dphi/dc rel. error " + sci(rel) + " at " + describe(d.c, d.kappa)};
        }
    }
    return {"tvmf_gradient", true, "max rel. error " + sci(worst)};
}

CheckResult check_vmf(const std::vector<Draw>& ds) {
    constexpr double h = 1e-6;
    for (const auto& d : ds) {
        if (d.kappa <= 0.0) continue;
        const Kappa k(d.kappa);
        const double v = vmf_similarity(d.c, k);
        if (!(v >= -1.0 && v <= 1.0)) return {"vmf_invariants", false, "out of [-1,1] at " + describe(d.c, d.kappa)};
        if (vmf_similarity(1.0, k) != 1.0 || vmf_similarity(-1.0, k) != -1.0) {
            return {"vmf_invariants", false, "endpoint not exact at kappa=" + std::to_string(d.kappa)};
        }
        const double fd = (vmf_similarity(d.c + h, k) - vmf_similarity(d.c - h, k)) / (2.0 * h);
        const double an = vmf_similarity_dcos(d.c, k);
        if (!(an > 0.0)) return {"vmf_invariants", false, "non-increasing at " + describe(d.c, d.kappa)};
        // the derivative can be ~1e-50 far from c = 1, where only an
        // absolute comparison is meaningful
        if (std::abs(fd - an) > 1e-6 * std::max({std::abs(fd), std::abs(an), 1e-3})) {
            return {"vmf_invariants", false, "dphi/dc mismatch at " + describe(d.c, d.kappa)};
        }
    }
    return {"vmf_invariants", true, ""};
}

// Literal evaluation of the loss: log of a ratio of exponentials, no
// log-sum-exp, similarity typed out from its textbook closed form.
double naive_similarity(const SimilarityKind& kind, double c) {
    const double k = kind.kappa();
    switch (kind.tag()) {
        case SimilarityTag::Cosine: return c;
        case SimilarityTag::VonMisesFisher:
            return 2.0 * (std::exp(k * c) - std::exp(-k)) / (std::exp(k) - std::exp(-k)) - 1.0;
        case SimilarityTag::TVonMisesFisher: return (1.0 + c) / (1.0 + k * (1.0 - c)) - 1.0;
    }
    return c;
}

double naive_loss(const ContrastiveBatch& b, const LossConfig& cfg) {
    auto cos_of = [&](std::size_t i, std::size_t j) {
        double ij = 0.0, ii = 0.0, jj = 0.0;
        for (std::size_t d = 0; d < b.dim(); ++d) {
            ij += b.embeddings[i][d] * b.embeddings[j][d];
            ii += b.embeddings[i][d] * b.embeddings[i][d];
            jj += b.embeddings[j][d] * b.embeddings[j][d];
        }
        return std::clamp(ij / std::sqrt(ii * jj), -1.0, 1.0);
    };
    double total = 0.0;
    for (std::size_t i : b.anchors) {
        std::size_t n_pos = 0;
        for (std::size_t p = 0; p < b.size(); ++p) n_pos += (p != i && b.labels[p] == b.labels[i]);
        if (n_pos == 0) continue;
        double denom = 0.0;
        for (std::size_t a = 0; a < b.size(); ++a)
            if (a != i) denom += std::exp(naive_similarity(cfg.kind, cos_of(i, a)) / cfg.temperature);
        double inner = 0.0;
        for (std::size_t p = 0; p < b.size(); ++p) {
            if (p == i || b.labels[p] != b.labels[i]) continue;
            inner += std::log(std::exp(naive_similarity(cfg.kind, cos_of(i, p)) / cfg.temperature) / denom);
        }
        total += -inner / static_cast<double>(n_pos);
    }
    return total;
}

ContrastiveBatch random_batch(Rng& rng, std::size_t pairs, std::size_t dim, int classes) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, classes - 1);
    ContrastiveBatch b;
    for (std::size_t k = 0; k < pairs; ++k) {
        const int y = label(rng);
        for (int v = 0; v < 2; ++v) {
            Embedding e(dim);
            for (double& x : e) x = normal(rng);
            b.embeddings.push_back(normalized(e));
            b.labels.push_back(y);
        }
    }
    // both views of the first `current_pairs` pairs are anchors
    std::uniform_int_distribution<std::size_t> cut(1, pairs);
    const std::size_t current_pairs = cut(rng);
    for (std::size_t i = 0; i < 2 * current_pairs; ++i) b.anchors.push_back(i);
    return b;
}

std::vector<SimilarityKind> kinds_under_test() {
    return {SimilarityKind::cosine(), SimilarityKind::vmf(16.0), SimilarityKind::tvmf(4.0),
            SimilarityKind::tvmf(16.0), SimilarityKind::tvmf(32.0)};
}

double embedding_fd_error(const ContrastiveBatch& b, const LossConfig& cfg, double* value) {
    const LossOutput out = asym_supcon_loss_backward(b, cfg);
    if (value) *value = out.value;
    std::vector<double> x, analytic;
    for (std::size_t j = 0; j < b.size(); ++j) {
        x.insert(x.end(), b.embeddings[j].begin(), b.embeddings[j].end());
        analytic.insert(analytic.end(), out.grad[j].begin(), out.grad[j].end());
    }
    auto f = [&](std::span<const double> flat) {
        ContrastiveBatch p = b;
        for (std::size_t j = 0; j < p.size(); ++j)
            for (std::size_t d = 0; d < p.dim(); ++d) p.embeddings[j][d] = flat[j * p.dim() + d];
        return asym_supcon_loss(p, cfg);
    };
    return compare_gradients(analytic, central_difference(f, x, 1e-5)).max_rel_error;
}

CheckResult check_loss_oracle(const CheckOptions& opts) {
    Rng rng(opts.seed + 1);
    std::uniform_int_distribution<std::size_t> pairs(1, 8), dim(2, 8);
    double worst = 0.0;
    for (std::size_t n = 0; n < opts.loss_batches; ++n) {
        const ContrastiveBatch b = random_batch(rng, pairs(rng), dim(rng), 3);
        for (const auto& kind : kinds_under_test()) {
            const LossConfig cfg{0.5, kind, false};
            const double diff = std::abs(asym_supcon_loss(b, cfg) - naive_loss(b, cfg));
            worst = std::max(worst, diff);
            if (!(diff < 1e-10)) {
                return {"loss_oracle", false, kind.name() + " loss differs from reference by " + sci(diff)};
            }
        }
    }
    return {"loss_oracle", true, "max abs diff " + sci(worst)};
}

CheckResult check_loss_gradient(const CheckOptions& opts) {
    Rng rng(opts.seed + 2);
    double worst = 0.0;
    for (std::size_t n = 0; n < 10; ++n) {
        const ContrastiveBatch b = random_batch(rng, 4, 4, 2);
        for (const auto& kind : kinds_under_test()) {
            const LossConfig cfg{0.5, kind, false};
            const double err = embedding_fd_error(b, cfg, nullptr);
            worst = std::max(worst, err);
            if (!(err < 1e-5)) {
                return {"loss_gradient", false, kind.name() + " rel. error " + sci(err)};
            }
        }
    }
    return {"loss_gradient", true, "max rel. error " + sci(worst)};
}

CheckResult check_encoder_gradient(const CheckOptions& opts) {
    Rng rng(opts.seed + 3);
    const std::vector<std::size_t> dims{4, 6, 4};
    const std::vector<std::size_t> head{4, 4, 3};
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (const auto& kind : kinds_under_test()) {
        EncoderNet net = init_encoder(opts.seed + 4, dims, head);
        ComposedBatch batch;
        const int labels[] = {0, 1, 0, 1};
        for (int k = 0; k < 4; ++k) {
            for (int v = 0; v < 2; ++v) {
                std::vector<double> x(dims.front());
                // redraw inputs whose ReLU path to the embedding is all dead
                for (bool live = false; !live;) {
                    for (double& xi : x) xi = normal(rng);
                    try {
                        forward(net, x);
                        live = true;
                    } catch (const std::domain_error&) {
                    }
                }
                if (k < 2) batch.anchors.push_back(batch.views.size());
                batch.views.push_back(std::move(x));
                batch.labels.push_back(labels[k]);
            }
        }
        const LossConfig cfg{0.5, kind, false};
        ParamGrads grads = ParamGrads::zeros_like(net);
        encoded_batch_loss(net, batch, cfg, &grads);
        auto f = [&](std::span<const double> params) {
            EncoderNet probe = net;
            assign_flat(probe, params);
            return encoded_batch_loss(probe, batch, cfg, nullptr);
        };
        const auto cmp = compare_gradients(flatten(grads), richardson_difference(f, flatten(net), 1e-5));
        worst = std::max(worst, cmp.max_rel_error);
        if (!(cmp.max_rel_error <= 1e-6)) {
            return {"encoder_gradient", false, kind.name() + " rel. error " + sci(cmp.max_rel_error)};
        }
    }
    return {"encoder_gradient", true, "max rel. error " + sci(worst)};
}

}  // namespace

std::vector<CheckResult> run_check_battery(const TvmfUnderTest& impl, const CheckOptions& opts) {
    const auto ds = draws(opts.seed, opts.similarity_draws, 0.0);
    const auto grad_ds = draws(opts.seed + 5, opts.gradient_draws, 1e-6);

    std::vector<CheckResult> out;
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    guarded("tvmf_bounds", [&] { return check_bounds(impl, ds); });
    guarded("tvmf_monotone_in_cos", [&] { return check_monotone(impl, ds); });
    guarded("tvmf_decreasing_in_kappa", [&] { return check_compactness(impl, ds); });
    guarded("tvmf_reduction", [&] { return check_reduction(impl, ds); });
    guarded("derivation_consistency", [&] { return check_derivation(impl, ds); });
    guarded("tvmf_gradient", [&] { return check_similarity_gradient(impl, grad_ds); });
    guarded("vmf_invariants", [&] { return check_vmf(grad_ds); });
    guarded("loss_oracle", [&] { return check_loss_oracle(opts); });
    guarded("loss_gradient", [&] { return check_loss_gradient(opts); });
    guarded("encoder_gradient", [&] { return check_encoder_gradient(opts); });
    return out;
}

LossCheckReport loss_check(std::uint64_t seed, const SimilarityKind& kind, double temperature,
                           std::size_t pairs, std::size_t dim) {
    Rng rng(seed);
    const ContrastiveBatch b = random_batch(rng, pairs, dim, 2);
    LossCheckReport r;
    r.views = b.size();
    r.anchors = b.anchors.size();
    r.max_fd_rel_error = embedding_fd_error(b, LossConfig{temperature, kind, false}, &r.value);
    return r;
}

std::string checks_json(const std::vector<CheckResult>& results) {
    nlohmann::ordered_json doc;
    bool all = true;
    auto checks = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        all = all && r.passed;
        checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    }
    doc["passed"] = all;
    doc["checks"] = std::move(checks);
    return doc.dump(2) + "\n";
}

}  // namespace tvmf
