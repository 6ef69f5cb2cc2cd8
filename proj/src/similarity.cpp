#include "tvmf/similarity.hpp"

#include <cmath>
#include <string>

namespace tvmf {

namespace {

void require_cos(double c) {
    if (!(c >= -1.0 && c <= 1.0)) {
        throw std::domain_error("cosine value " + std::to_string(c) + " outside [-1, 1]");
    }
}

void require_distance(double d) {
    if (!(d >= 0.0)) {
        throw std::domain_error("chord distance must be nonnegative");
    }
}

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

}  // namespace

Kappa::Kappa(double value) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw std::domain_error("kappa must be finite and nonnegative");
    }
}

SimilarityKind SimilarityKind::cosine() { return {SimilarityTag::Cosine, 0.0}; }

SimilarityKind SimilarityKind::vmf(double kappa) {
    if (!(Kappa(kappa).value() > 0.0)) {
        throw std::domain_error("vMF similarity requires kappa > 0");
    }
    return {SimilarityTag::VonMisesFisher, kappa};
}

SimilarityKind SimilarityKind::tvmf(double kappa) {
    return {SimilarityTag::TVonMisesFisher, Kappa(kappa).value()};
}

SimilarityKind SimilarityKind::from_name(const std::string& name, double kappa) {
    if (name == "cosine") return cosine();
    if (name == "vmf") return vmf(kappa);
    if (name == "tvmf") return tvmf(kappa);
    throw std::invalid_argument("unknown similarity '" + name + "' (expected cosine, vmf or tvmf)");
}

std::string SimilarityKind::name() const {
    switch (tag_) {
        case SimilarityTag::Cosine: return "cosine";
        case SimilarityTag::VonMisesFisher: return "vmf";
        case SimilarityTag::TVonMisesFisher: return "tvmf";
    }
    return "unknown";
}

UnitVec::UnitVec(std::span<const double> values) : values_(values) {
    if (values.empty()) {
        throw std::invalid_argument("unit vector must be non-empty");
    }
    const double n = norm(values);
    if (std::abs(n - 1.0) > kUnitNormTol) {
        throw std::invalid_argument("vector is not unit-norm (|v| = " + std::to_string(n) + ")");
    }
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> normalized(std::span<const double> v) {
    const double n = norm(v);
    if (!(n > 0.0)) {
        throw std::domain_error("zero-norm vector cannot be normalized");
    }
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

double cosine(const UnitVec& a, const UnitVec& b) {
    return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

double chord_distance(const UnitVec& a, const UnitVec& b) {
    require_same_dim(a.dim(), b.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double profile_exp(double d, Kappa kappa) {
    require_distance(d);
    return std::exp(-0.5 * kappa.value() * d * d);
}

double profile_t(double d, Kappa kappa) {
    require_distance(d);
    return 1.0 / (1.0 + 0.5 * kappa.value() * d * d);
}

// Multiplying numerator and denominator by e^{-k}:
//   (e^{k(c-1)} - e^{-2k}) / (1 - e^{-2k})
// and e^{k(c-1)} - e^{-2k} = e^{k(c-1)} (1 - e^{-k(c+1)}).
// Every exponent is <= 0, and expm1 keeps small kappa accurate.
double vmf_similarity(double c, Kappa kappa) {
    require_cos(c);
    const double k = kappa.value();
    if (!(k > 0.0)) throw std::domain_error("vMF similarity requires kappa > 0");
    const double num = std::exp(k * (c - 1.0)) * -std::expm1(-k * (c + 1.0));
    const double den = -std::expm1(-2.0 * k);
    return 2.0 * (num / den) - 1.0;
}

double vmf_similarity_dcos(double c, Kappa kappa) {
    require_cos(c);
    const double k = kappa.value();
    if (!(k > 0.0)) throw std::domain_error("vMF similarity requires kappa > 0");
    return 2.0 * k * std::exp(k * (c - 1.0)) / -std::expm1(-2.0 * k);
}

// (1 + c) / (1 + k(1 - c)) - 1 over a common denominator. This form is
// exact at kappa = 0 and at c = +-1, and |numerator| <= denominator holds
// after rounding, so the result never leaves [-1, 1].
double tvmf_similarity(double c, Kappa kappa) {
    require_cos(c);
    const double spread = kappa.value() * (1.0 - c);
    return (c - spread) / (1.0 + spread);
}

double tvmf_similarity_dcos(double c, Kappa kappa) {
    require_cos(c);
    const double k = kappa.value();
    const double den = 1.0 + k * (1.0 - c);
    return (1.0 + 2.0 * k) / (den * den);
}

double similarity(const SimilarityKind& kind, double c) {
    switch (kind.tag()) {
        case SimilarityTag::Cosine: require_cos(c); return c;
        case SimilarityTag::VonMisesFisher: return vmf_similarity(c, Kappa(kind.kappa()));
        case SimilarityTag::TVonMisesFisher: return tvmf_similarity(c, Kappa(kind.kappa()));
    }
    return c;
}

double similarity_dcos(const SimilarityKind& kind, double c) {
    switch (kind.tag()) {
        case SimilarityTag::Cosine: require_cos(c); return 1.0;
        case SimilarityTag::VonMisesFisher: return vmf_similarity_dcos(c, Kappa(kind.kappa()));
        case SimilarityTag::TVonMisesFisher: return tvmf_similarity_dcos(c, Kappa(kind.kappa()));
    }
    return 1.0;
}

std::vector<CurvePoint> similarity_curve(const SimilarityKind& kind, std::span<const double> grid) {
    std::vector<CurvePoint> rows;
    rows.reserve(grid.size());
    for (double c : grid) rows.push_back({c, similarity(kind, c)});
    return rows;
}

std::vector<double> uniform_cos_grid(std::size_t n) {
    if (n < 2) throw std::invalid_argument("cosine grid needs at least 2 points");
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    grid.back() = 1.0;
    return grid;
}

}  // namespace tvmf
