#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvmf {

/// Tolerance on the Euclidean norm of a unit vector.
inline constexpr double kUnitNormTol = 1e-6;

/// Concentration parameter of the vMF family. Always nonnegative.
class Kappa {
public:
    Kappa() = default;
    explicit Kappa(double value);

    double value() const { return value_; }

private:
    double value_ = 0.0;
};

enum class SimilarityTag { Cosine, VonMisesFisher, TVonMisesFisher };

/// Which similarity the contrastive loss uses, with its concentration.
///
/// The vMF variant requires kappa > 0; t-vMF accepts kappa = 0 and then
/// reduces to the plain cosine.
class SimilarityKind {
public:
    static SimilarityKind cosine();
    static SimilarityKind vmf(double kappa);
    static SimilarityKind tvmf(double kappa);

    /// Parses "cosine", "vmf" or "tvmf".
    static SimilarityKind from_name(const std::string& name, double kappa);

    SimilarityTag tag() const { return tag_; }
    double kappa() const { return kappa_; }
    std::string name() const;

    friend bool operator==(const SimilarityKind&, const SimilarityKind&) = default;

private:
    SimilarityKind(SimilarityTag tag, double kappa) : tag_(tag), kappa_(kappa) {}

    SimilarityTag tag_ = SimilarityTag::Cosine;
    double kappa_ = 0.0;
};

/// Unit-norm view over a vector. Construction validates the norm.
class UnitVec {
public:
    explicit UnitVec(std::span<const double> values);

    std::span<const double> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }

private:
    std::span<const double> values_;
};

/// Returns `v` scaled to unit norm. Throws on a zero vector.
std::vector<double> normalized(std::span<const double> v);

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Dot product of two unit vectors, clamped to [-1, 1].
double cosine(const UnitVec& a, const UnitVec& b);

/// Chord length |a - b| between two points on the sphere.
double chord_distance(const UnitVec& a, const UnitVec& b);

/// Exponential (vMF) profile exp(-kappa d^2 / 2).
double profile_exp(double d, Kappa kappa);

/// Heavy-tailed Student-t profile 1 / (1 + kappa d^2 / 2).
double profile_t(double d, Kappa kappa);

/// Rescales a radial profile f(d) onto [-1, 1] as a function of the cosine:
///
///     2 (f(d) - f(2)) / (f(0) - f(2)) - 1,   d^2 = 2 - 2c.
///
/// This is the route both vMF and t-vMF similarities are built from; the
/// closed forms below are its simplifications. The profile's normalizing
/// constant cancels and is never needed.
template <typename Profile>
double rescaled_profile_similarity(Profile&& profile, double c, Kappa kappa) {
    const double d = std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
    const double f0 = profile(0.0, kappa);
    const double f2 = profile(2.0, kappa);
    return 2.0 * (profile(d, kappa) - f2) / (f0 - f2) - 1.0;
}

/// vMF similarity 2 (e^{kc} - e^{-k}) / (e^k - e^{-k}) - 1, evaluated with
/// e^{k} factored out so large kappa does not overflow. Requires kappa > 0.
double vmf_similarity(double c, Kappa kappa);
double vmf_similarity_dcos(double c, Kappa kappa);

/// t-vMF similarity (1 + c) / (1 + kappa (1 - c)) - 1.
double tvmf_similarity(double c, Kappa kappa);

/// d/dc of tvmf_similarity: (1 + 2 kappa) / (1 + kappa (1 - c))^2.
double tvmf_similarity_dcos(double c, Kappa kappa);

/// Dispatches on the kind. Cosine is the identity on c.
double similarity(const SimilarityKind& kind, double c);
double similarity_dcos(const SimilarityKind& kind, double c);

struct CurvePoint {
    double cos;
    double value;
};

std::vector<CurvePoint> similarity_curve(const SimilarityKind& kind, std::span<const double> grid);

/// `n` evenly spaced points from -1 to 1 inclusive; n >= 2.
std::vector<double> uniform_cos_grid(std::size_t n);

}  // namespace tvmf
