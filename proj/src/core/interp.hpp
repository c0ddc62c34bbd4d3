#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace drcut {

// Interpolation on uniform grids {x0 + i*step}. Values beyond the grid are
// clamped to the end nodes (callers range-check where extrapolation would be
// an error).

inline double linear_uniform(const std::vector<double>& y, double x0, double step, double x) {
    const std::size_t n = y.size();
    if (n == 1) return y[0];
    double u = (x - x0) / step;
    if (u <= 0.0) return y.front();
    if (u >= static_cast<double>(n - 1)) return y.back();
    std::size_t i = static_cast<std::size_t>(u);
    double f = u - static_cast<double>(i);
    return y[i] + f * (y[i + 1] - y[i]);
}

// Four-point Lagrange cubic; exact for cubic polynomials, so interpolation
// error is O(step^4) on smooth data.
inline double cubic_uniform(const std::vector<double>& y, double x0, double step, double x) {
    const std::size_t n = y.size();
    if (n < 4) return linear_uniform(y, x0, step, x);
    double u = (x - x0) / step;
    if (u <= 0.0) return y.front();
    if (u >= static_cast<double>(n - 1)) return y.back();
    std::size_t i = static_cast<std::size_t>(u);
    std::size_t base = (i == 0) ? 0 : std::min(i - 1, n - 4);
    double t = u - static_cast<double>(base);  // in [0, 3]
    double c0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    double c1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    double c2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    double c3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    return c0 * y[base] + c1 * y[base + 1] + c2 * y[base + 2] + c3 * y[base + 3];
}

}  // namespace drcut
