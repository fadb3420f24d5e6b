// grid.hpp - uniform sampling grids

#pragma once

#include <cstddef>
#include <vector>

#include "nems/errors.hpp"

namespace nems {

// Uniform grid from t0 to t1 inclusive.
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t points) {
    if (points < 2) throw InvalidParameter("uniform_grid: need at least two points");
    std::vector<double> out(points);
    const double last = static_cast<double>(points - 1);
    // Weighted endpoints keep grids symmetric about zero exactly symmetric.
    for (std::size_t i = 0; i < points; ++i) {
        const double b = static_cast<double>(i);
        out[i] = ((last - b) * t0 + b * t1) / last;
    }
    return out;
}

} // namespace nems
