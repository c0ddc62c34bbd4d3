#include "core/rdd.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace drcut {

namespace {

struct Paired {
    std::vector<SmoothPoint> y, a;
};

Paired pair_inputs(const std::vector<PseudoOutcome>& pseudo_y,
                   const std::vector<PseudoOutcome>& pseudo_a) {
    if (pseudo_y.size() != pseudo_a.size())
        throw InvalidArgument("rdd: outcome and treatment lists differ in length");
    auto order = [](const std::vector<PseudoOutcome>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t l, std::size_t r) { return v[l].id < v[r].id; });
        return idx;
    };
    auto oy = order(pseudo_y), oa = order(pseudo_a);
    Paired out;
    out.y.resize(pseudo_y.size());
    out.a.resize(pseudo_a.size());
    for (std::size_t i = 0; i < pseudo_y.size(); ++i) {
        const auto& py = pseudo_y[oy[i]];
        const auto& pa = pseudo_a[oa[i]];
        if (py.id != pa.id || std::abs(py.w - pa.w) > 1e-9)
            throw InvalidArgument("rdd: lists do not describe the same subjects");
        out.y[i] = {py.w, py.value};
        out.a[i] = {pa.w, pa.value};
    }
    return out;
}

struct SideFit {
    SmootherFit y, a;
    double cov = 0.0;
};

SideFit fit_side(const Paired& data, double w0, double h, Kernel kernel, WindowSide side,
                 bool include_boundary) {
    SideFit out;
    out.y = local_linear_fit(data.y, w0, h, kernel, side, include_boundary);
    out.a = local_linear_fit(data.a, w0, h, kernel, side, include_boundary);
    for (std::size_t i = 0; i < data.y.size(); ++i) {
        double p = out.y.weights[i];
        if (p == 0.0) continue;
        double dw = data.y[i].w - w0;
        double ry = data.y[i].y - (out.y.estimate + out.y.slope * dw);
        double ra = data.a[i].y - (out.a.estimate + out.a.slope * dw);
        out.cov += p * p * ry * ra;
    }
    return out;
}

}  // namespace

RddResult fuzzy_rdd(const std::vector<PseudoOutcome>& pseudo_y,
                    const std::vector<PseudoOutcome>& pseudo_a, const RddOptions& options) {
    if (!(options.denom_floor >= 0.0))
        throw InvalidArgument("rdd: denominator floor must be nonnegative");
    auto data = pair_inputs(pseudo_y, pseudo_a);

    auto right = fit_side(data, options.w0, options.h, options.kernel, WindowSide::kRight,
                          options.boundary_on_right);
    auto left = fit_side(data, options.w0, options.h, options.kernel, WindowSide::kLeft,
                         !options.boundary_on_right);

    RddResult res;
    res.w0 = options.w0;
    res.h = options.h;
    res.y_plus = {right.y.estimate, right.y.se, right.y.n_window};
    res.y_minus = {left.y.estimate, left.y.se, left.y.n_window};
    res.a_plus = {right.a.estimate, right.a.se, right.a.n_window};
    res.a_minus = {left.a.estimate, left.a.se, left.a.n_window};
    res.cov_plus = right.cov;
    res.cov_minus = left.cov;
    res.n_right = right.y.n_window;
    res.n_left = left.y.n_window;

    double denom = res.a_plus.estimate - res.a_minus.estimate;
    if (std::abs(denom) < options.denom_floor)
        throw NumericError("rdd: no detectable discontinuity in treatment (jump " +
                           std::to_string(denom) + ")");
    res.tau = (res.y_plus.estimate - res.y_minus.estimate) / denom;

    double vy = res.y_plus.se * res.y_plus.se + res.y_minus.se * res.y_minus.se;
    double va = res.a_plus.se * res.a_plus.se + res.a_minus.se * res.a_minus.se;
    double var = (vy + res.tau * res.tau * va -
                  2.0 * res.tau * (res.cov_plus + res.cov_minus)) /
                 (denom * denom);
    res.se = std::sqrt(std::max(var, 0.0));
    return res;
}

std::vector<RddSensitivityRow> rdd_sensitivity(const std::vector<PseudoOutcome>& pseudo_y,
                                               const std::vector<PseudoOutcome>& pseudo_a,
                                               RddOptions options,
                                               const std::vector<double>& h_list) {
    if (h_list.empty()) throw InvalidArgument("rdd sensitivity: empty bandwidth list");
    std::vector<RddSensitivityRow> rows;
    rows.reserve(h_list.size());
    for (double h : h_list) {
        RddSensitivityRow row;
        row.h = h;
        options.h = h;
        try {
            row.result = fuzzy_rdd(pseudo_y, pseudo_a, options);
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BinnedMean> binned_means(const std::vector<PseudoOutcome>& pseudo, double lo,
                                     double hi, double width) {
    if (!(width > 0.0) || !(hi > lo)) throw InvalidArgument("binned means: bad bin layout");
    auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-12));
    std::vector<double> sum(nbins, 0.0);
    std::vector<std::size_t> count(nbins, 0);
    for (const auto& p : pseudo) {
        if (p.w < lo || p.w >= hi) continue;
        auto idx = std::min(static_cast<std::size_t>((p.w - lo) / width), nbins - 1);
        sum[idx] += p.value;
        ++count[idx];
    }
    std::vector<BinnedMean> out;
    for (std::size_t i = 0; i < nbins; ++i)
        if (count[i] > 0)
            out.push_back({lo + (static_cast<double>(i) + 0.5) * width,
                           sum[i] / static_cast<double>(count[i]), count[i]});
    return out;
}

}  // namespace drcut
