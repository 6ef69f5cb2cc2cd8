#pragma once

// Reference implementations written directly from the defining formulas,
// sharing no code with the library. Tests compare the library against these.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "tvmf/loss.hpp"
#include "tvmf/similarity.hpp"

namespace oracle {

inline double tvmf(double c, double kappa) { return (1.0 + c) / (1.0 + kappa * (1.0 - c)) - 1.0; }

inline double vmf(double c, double kappa) {
    return 2.0 * (std::exp(kappa * c) - std::exp(-kappa)) / (std::exp(kappa) - std::exp(-kappa)) - 1.0;
}

inline double phi(const tvmf::SimilarityKind& kind, double c) {
    switch (kind.tag()) {
        case tvmf::SimilarityTag::Cosine: return c;
        case tvmf::SimilarityTag::VonMisesFisher: return vmf(c, kind.kappa());
        case tvmf::SimilarityTag::TVonMisesFisher: return tvmf(c, kind.kappa());
    }
    return c;
}

inline double cos_between(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    double c = ab / std::sqrt(aa * bb);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// Term-by-term double loop over anchors and positives, no log-sum-exp.
inline double supcon_loss(const tvmf::ContrastiveBatch& b, const tvmf::SimilarityKind& kind, double tau) {
    const std::size_t n = b.embeddings.size();
    double total = 0.0;
    for (std::size_t i : b.anchors) {
        std::size_t num_pos = 0;
        for (std::size_t p = 0; p < n; ++p)
            if (p != i && b.labels[p] == b.labels[i]) ++num_pos;
        if (num_pos == 0) continue;
        double denom = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) denom += std::exp(phi(kind, cos_between(b.embeddings[i], b.embeddings[a])) / tau);
        double term = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            if (p == i || b.labels[p] != b.labels[i]) continue;
            const double num = std::exp(phi(kind, cos_between(b.embeddings[i], b.embeddings[p])) / tau);
            term += std::log(num / denom);
        }
        total += -term / static_cast<double>(num_pos);
    }
    return total;
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double s = 0.0;
    for (double& x : v) {
        x = normal(rng);
        s += x * x;
    }
    for (double& x : v) x /= std::sqrt(s);
    return v;
}

// Paired views share labels; anchors are a random nonempty subset that
// includes view 0.
inline tvmf::ContrastiveBatch random_batch(std::mt19937_64& rng, std::size_t pairs, std::size_t dim,
                                           int classes) {
    tvmf::ContrastiveBatch b;
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t k = 0; k < pairs; ++k) {
        const int y = label(rng);
        for (int v = 0; v < 2; ++v) {
            b.embeddings.push_back(random_unit(rng, dim));
            b.labels.push_back(y);
        }
    }
    b.anchors.push_back(0);
    for (std::size_t i = 1; i < b.embeddings.size(); ++i)
        if (coin(rng)) b.anchors.push_back(i);
    return b;
}

// Upper-tail p-value of Pearson's chi-square statistic against equal
// expected counts.
inline double chi_square_uniform_p(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// Uniformity of per-item inclusion counts when every trial keeps a uniform
// m-subset of n items. Counts are binomial(trials, m/n) with covariance
// -p(1-p)/(n-1) between items, so the Pearson sum is rescaled by
// (1 - p) n / (n - 1) to follow chi-square with n - 1 degrees of freedom.
inline double inclusion_uniform_p(std::span<const double> counts, double trials, double m) {
    const double n = static_cast<double>(counts.size());
    const double p = m / n;
    const double expected = trials * p;
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected);
    stat /= expected * (1.0 - p) * n / (n - 1.0);
    boost::math::chi_squared_distribution<double> dist(n - 1.0);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
