#include "tvmf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvmf {

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step) {
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = probe[k];
        probe[k] = orig + step;
        const double up = f(probe);
        probe[k] = orig - step;
        const double down = f(probe);
        probe[k] = orig;
        grad[k] = (up - down) / (2.0 * step);
    }
    return grad;
}

std::vector<double> richardson_difference(const std::function<double(std::span<const double>)>& f,
                                          std::span<const double> x, double step) {
    const std::vector<double> coarse = central_difference(f, x, step);
    std::vector<double> fine = central_difference(f, x, 0.5 * step);
    for (std::size_t k = 0; k < fine.size(); ++k) fine[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    return fine;
}

GradientComparison compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                     double floor) {
    if (analytic.size() != numeric.size()) throw std::invalid_argument("gradient sizes differ");
    GradientComparison out;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double abs_err = std::abs(analytic[k] - numeric[k]);
        const double rel = abs_err / std::max({std::abs(analytic[k]), std::abs(numeric[k]), floor});
        out.max_abs_error = std::max(out.max_abs_error, abs_err);
        if (rel > out.max_rel_error || !std::isfinite(rel)) {
            out.max_rel_error = rel;
            out.worst_index = k;
        }
    }
    return out;
}

}  // namespace tvmf
