#include "core/smoother.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "core/errors.hpp"

namespace drcut {

const char* kernel_name(Kernel k) {
    return k == Kernel::kEpanechnikov ? "epanechnikov" : "triangular";
}

Kernel kernel_from_name(const std::string& name) {
    if (name == "epanechnikov") return Kernel::kEpanechnikov;
    if (name == "triangular") return Kernel::kTriangular;
    throw InvalidArgument("unknown kernel: " + name);
}

double bandwidth_rule(double n, double c) {
    if (!(n >= 2.0)) throw InvalidArgument("bandwidth rule needs n >= 2");
    if (!(c > 0.0)) throw InvalidArgument("bandwidth constant must be positive");
    return c * std::pow(n, -1.0 / 4.5);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

double kernel_value(Kernel k, double u) {
    double a = std::abs(u);
    if (a >= 1.0) return 0.0;
    return k == Kernel::kEpanechnikov ? 0.75 * (1.0 - a * a) : 1.0 - a;
}

bool in_side(double w, double w0, WindowSide side, bool include_boundary) {
    switch (side) {
        case WindowSide::kBoth: return true;
        case WindowSide::kRight: return include_boundary ? w >= w0 : w > w0;
        case WindowSide::kLeft: return include_boundary ? w <= w0 : w < w0;
    }
    return true;
}

}  // namespace

SmootherFit local_linear_fit(const std::vector<SmoothPoint>& pts, double w0, double h,
                             Kernel kernel, WindowSide side, bool include_boundary) {
    if (!(h > 0.0)) throw InvalidArgument("smoother: bandwidth must be positive");
    const std::size_t n = pts.size();
    SmootherFit fit;
    fit.w0 = w0;
    fit.h = h;
    fit.weights.assign(n, 0.0);

    std::vector<double> k(n, 0.0), z(n, 0.0);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_side(pts[i].w, w0, side, include_boundary)) continue;
        z[i] = (pts[i].w - w0) / h;
        k[i] = kernel_value(kernel, z[i]);
        if (k[i] <= 0.0) continue;
        ++fit.n_window;
        s0 += k[i];
        s1 += k[i] * z[i];
        s2 += k[i] * z[i] * z[i];
    }
    if (fit.n_window == 0 || !(s0 > 0.0))
        throw NumericError("smoother: empty window at w0=" + std::to_string(w0));

    double det = s0 * s2 - s1 * s1;
    fit.degenerate = !(det > 1e-12 * s0 * std::max(s2, 1e-300));

    double slope_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (k[i] <= 0.0) continue;
        double p = fit.degenerate ? k[i] / s0 : k[i] * (s2 - s1 * z[i]) / det;
        fit.weights[i] = p;
        fit.estimate += p * pts[i].y;
        fit.sum_abs_weights += std::abs(p);
        if (!fit.degenerate) slope_z += k[i] * (s0 * z[i] - s1) / det * pts[i].y;
    }
    fit.slope = slope_z / h;

    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (k[i] <= 0.0) continue;
        double fitted = fit.estimate + slope_z * z[i];
        double r = pts[i].y - fitted;
        var += fit.weights[i] * fit.weights[i] * r * r;
    }
    fit.se = std::sqrt(var);
    return fit;
}

std::vector<double> smoother_weights(const std::vector<double>& ws, double w0, double h,
                                     Kernel kernel, WindowSide side, bool include_boundary) {
    std::vector<SmoothPoint> pts(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) pts[i] = {ws[i], 0.0};
    return local_linear_fit(pts, w0, h, kernel, side, include_boundary).weights;
}

}  // namespace drcut
