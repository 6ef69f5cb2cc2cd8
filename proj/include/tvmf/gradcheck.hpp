#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tvmf {

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h for every k.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step);

/// Richardson extrapolation of two central differences, (4 D(h/2) - D(h)) / 3.
/// Truncation error O(h^4) instead of O(h^2).
std::vector<double> richardson_difference(const std::function<double(std::span<const double>)>& f,
                                          std::span<const double> x, double step);

struct GradientComparison {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
};

/// Per-coordinate |a - n| / max(|a|, |n|, floor), worst case over all
/// coordinates. `floor` keeps coordinates whose true gradient is ~0 from
/// turning round-off into unbounded relative error.
GradientComparison compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                     double floor = 1e-3);

}  // namespace tvmf
