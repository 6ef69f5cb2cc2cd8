#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvmf/similarity.hpp"

namespace tvmf {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// The t-vMF implementation under test. Swappable so the battery itself can
/// be mutation-tested.
struct TvmfUnderTest {
    std::function<double(double c, double kappa)> value;
    std::function<double(double c, double kappa)> dcos;

    static TvmfUnderTest library();
};

struct CheckOptions {
    std::uint64_t seed = 20230501;
    std::size_t similarity_draws = 10000;
    std::size_t gradient_draws = 1000;
    std::size_t loss_batches = 100;
};

/// Similarity invariants, the loss against a naive reference, and finite
/// difference gradient checks for the loss and loss-through-encoder.
std::vector<CheckResult> run_check_battery(const TvmfUnderTest& impl = TvmfUnderTest::library(),
                                           const CheckOptions& opts = {});

struct LossCheckReport {
    double value = 0.0;
    double max_fd_rel_error = 0.0;
    std::size_t views = 0;
    std::size_t anchors = 0;
};

/// Loss on a random unit-embedding batch and the worst relative error of
/// its analytic embedding gradient against central differences (step 1e-5).
LossCheckReport loss_check(std::uint64_t seed, const SimilarityKind& kind, double temperature,
                           std::size_t pairs, std::size_t dim);

/// {"passed": bool, "checks": [{"name", "passed", "detail"}, ...]}
std::string checks_json(const std::vector<CheckResult>& results);

}  // namespace tvmf
