#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace drcut {

enum class Kernel { kEpanechnikov, kTriangular };

const char* kernel_name(Kernel k);
Kernel kernel_from_name(const std::string& name);

// h = c * n^(-1/4.5); the undersmoothing rate for the second-step regression.
// n may be fractional (cross-fitting applies the rule at n/K).
double bandwidth_rule(double n, double c);

// Standard normal quantile (for CI half-widths).
double normal_quantile(double p);

// Which observations a fit may use relative to w0. One-sided windows serve
// the discontinuity estimator; `include_boundary` decides whether points at
// exactly w0 belong to the side (they may belong to only one side).
enum class WindowSide { kBoth, kRight, kLeft };

struct SmoothPoint {
    double w = 0.0;
    double y = 0.0;
};

struct SmootherFit {
    double w0 = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double h = 0.0;
    double slope = 0.0;
    std::vector<double> weights;  // aligned with the input; zero off-window
    double sum_abs_weights = 0.0;
    bool degenerate = false;  // slope unidentifiable, local-constant fallback
    std::size_t n_window = 0; // points with positive kernel weight
};

// Kernel-weighted least-squares line at w0; the estimate is the intercept
// and the returned weights are the first row of the hat mapping, so
// estimate = sum_i weights[i] * y_i, sum weights = 1, and the weights are
// orthogonal to (w_i - w0). The standard error is the HC sandwich
// sqrt(sum_i weights[i]^2 r_i^2) with local-linear residuals r_i. An empty
// window throws; a window where the slope is unidentifiable (single point or
// all w_i equal) falls back to the local-constant fit and is marked.
SmootherFit local_linear_fit(const std::vector<SmoothPoint>& pts, double w0, double h,
                             Kernel kernel = Kernel::kEpanechnikov,
                             WindowSide side = WindowSide::kBoth,
                             bool include_boundary = true);

// The y-independent weights alone.
std::vector<double> smoother_weights(const std::vector<double>& ws, double w0, double h,
                                     Kernel kernel = Kernel::kEpanechnikov,
                                     WindowSide side = WindowSide::kBoth,
                                     bool include_boundary = true);

}  // namespace drcut
