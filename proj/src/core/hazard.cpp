#include "core/hazard.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace drcut {

namespace {

// Index of the half-open cell [k_{i-1}, k_i) containing x, with outer edges
// at +-infinity.
std::size_t interval_index(const std::vector<double>& knots, double x) {
    return static_cast<std::size_t>(
        std::upper_bound(knots.begin(), knots.end(), x) - knots.begin());
}

// Exact integral of exp(a*t) over [t0, t1], stable near a = 0.
double exp_integral(double a, double t0, double t1) {
    double len = t1 - t0;
    if (len <= 0.0) return 0.0;
    if (std::abs(a * len) < 1e-12) return len * std::exp(a * t0) * (1.0 + 0.5 * a * len);
    return std::exp(a * t0) * std::expm1(a * len) / a;
}

}  // namespace

void HazardModel::time_breakpoints(double, double, double, double, std::vector<double>&) const {}

ConstantHazard::ConstantHazard(double rate, int active_state)
    : HazardModel(active_state), rate_(rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw InvalidArgument("ConstantHazard: rate must be finite and nonnegative");
}

OracleGammaHazard::OracleGammaHazard(const GammaParams& p) : HazardModel(1), params_(p) {}

double OracleGammaHazard::rate(double, double, double w) const {
    if (params_.scale == 0.0) return 0.0;
    double lp = params_.log_level +
                ((w >= params_.band_lo && w < params_.band_hi) ? params_.band_coef : 0.0);
    return params_.scale * std::exp(lp);
}

double OracleGammaHazard::cumulative(double t0, double t1, double, double w) const {
    return rate(t0, 0.0, w) * std::max(0.0, t1 - t0);
}

OracleMu12Hazard::OracleMu12Hazard(const Mu12Params& p) : HazardModel(1), params_(p) {}

double OracleMu12Hazard::rate(double t, double, double w) const {
    if (params_.scale == 0.0) return 0.0;
    double lp = params_.log_level + params_.cos_coef * std::cos(M_PI * w / 2.0) +
                (t > params_.late_time ? params_.late_coef : 0.0) + params_.w_coef * w;
    return params_.scale * std::exp(lp);
}

double OracleMu12Hazard::cumulative(double t0, double t1, double, double w) const {
    if (t1 <= t0) return 0.0;
    double early = rate(std::min(t0, params_.late_time), 0.0, w);
    double late = early * std::exp(params_.late_coef);
    double split = std::clamp(params_.late_time, t0, t1);
    return early * (split - t0) + late * (t1 - split);
}

void OracleMu12Hazard::time_breakpoints(double t0, double t1, double, double,
                                        std::vector<double>& out) const {
    if (t0 < params_.late_time && params_.late_time < t1) out.push_back(params_.late_time);
}

OracleMu13Hazard::OracleMu13Hazard(const Mu13Params& p) : HazardModel(1), params_(p) {}

double OracleMu13Hazard::rate(double t, double, double w) const {
    if (params_.scale == 0.0) return 0.0;
    double lp = params_.log_level + params_.sin_coef * std::sin(M_PI * w / 2.0) +
                params_.t_coef * t;
    return params_.scale * std::exp(lp);
}

double OracleMu13Hazard::cumulative(double t0, double t1, double, double w) const {
    if (t1 <= t0 || params_.scale == 0.0) return 0.0;
    double base = params_.scale *
                  std::exp(params_.log_level + params_.sin_coef * std::sin(M_PI * w / 2.0));
    return base * exp_integral(params_.t_coef, t0, t1);
}

OracleMu23Hazard::OracleMu23Hazard(const Mu23Params& p) : HazardModel(2), params_(p) {}

double OracleMu23Hazard::rate(double t, double entry, double w) const {
    if (params_.scale == 0.0) return 0.0;
    double wb = std::min(w, params_.wbar_cap);
    double poly = 0.0, x = 1.0;
    for (double coef : params_.poly) {
        poly += coef * x;
        x *= wb;
    }
    double d = std::min(std::max(t - entry, 0.0), params_.dur_cap);
    return params_.scale * std::exp(params_.dur_factor * d * poly);
}

double OracleMu23Hazard::cumulative(double t0, double t1, double entry, double w) const {
    if (t1 <= t0 || params_.scale == 0.0) return 0.0;
    double wb = std::min(w, params_.wbar_cap);
    double poly = 0.0, x = 1.0;
    for (double coef : params_.poly) {
        poly += coef * x;
        x *= wb;
    }
    double b = params_.dur_factor * poly;
    double d0 = std::max(t0 - entry, 0.0);
    double d1 = std::max(t1 - entry, 0.0);
    double cap = params_.dur_cap;
    double total = 0.0;
    if (d0 < cap) total += exp_integral(b, d0, std::min(d1, cap));
    if (d1 > cap) total += std::exp(b * cap) * (d1 - std::max(d0, cap));
    return params_.scale * total;
}

void OracleMu23Hazard::time_breakpoints(double t0, double t1, double entry, double,
                                        std::vector<double>& out) const {
    double t_cap = entry + params_.dur_cap;
    if (t0 < t_cap && t_cap < t1) out.push_back(t_cap);
}

ParametricCensoringHazard::ParametricCensoringHazard(double b0, double b1, double b2)
    : HazardModel(1), b0_(b0), b1_(b1), b2_(b2) {}

double ParametricCensoringHazard::rate(double t, double, double w) const {
    return std::exp(b0_ + b1_ * t + b2_ * w);
}

double ParametricCensoringHazard::cumulative(double t0, double t1, double, double w) const {
    if (t1 <= t0) return 0.0;
    return std::exp(b0_ + b2_ * w) * exp_integral(b1_, t0, t1);
}

PiecewiseHazard::PiecewiseHazard(std::vector<double> t_knots, std::vector<double> dur_knots,
                                 std::vector<double> w_knots, std::vector<double> log_rates,
                                 int active_state)
    : HazardModel(active_state),
      t_knots_(std::move(t_knots)),
      dur_knots_(std::move(dur_knots)),
      w_knots_(std::move(w_knots)),
      log_rates_(std::move(log_rates)),
      nt_(t_knots_.size()),
      nd_(dur_knots_.size()),
      nw_(w_knots_.size()) {
    auto sorted = [](const std::vector<double>& v) { return std::is_sorted(v.begin(), v.end()); };
    if (!sorted(t_knots_) || !sorted(dur_knots_) || !sorted(w_knots_))
        throw InvalidArgument("PiecewiseHazard: knot vectors must be sorted");
    if (log_rates_.size() != (nt_ + 1) * (nd_ + 1) * (nw_ + 1))
        throw InvalidArgument("PiecewiseHazard: log_rates size does not match the cell grid");
}

double PiecewiseHazard::cell_rate(std::size_t it, std::size_t id, std::size_t iw) const {
    return std::exp(log_rates_[(it * (nd_ + 1) + id) * (nw_ + 1) + iw]);
}

double PiecewiseHazard::rate(double t, double entry, double w) const {
    std::size_t it = interval_index(t_knots_, t);
    std::size_t id = interval_index(dur_knots_, t - entry);
    std::size_t iw = interval_index(w_knots_, w);
    return cell_rate(it, id, iw);
}

double PiecewiseHazard::cumulative(double t0, double t1, double entry, double w) const {
    if (t1 <= t0) return 0.0;
    std::vector<double> cuts;
    cuts.push_back(t0);
    time_breakpoints(t0, t1, entry, w, cuts);
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        total += rate(mid, entry, w) * (cuts[i + 1] - cuts[i]);
    }
    return total;
}

void PiecewiseHazard::time_breakpoints(double t0, double t1, double entry, double,
                                       std::vector<double>& out) const {
    for (double k : t_knots_)
        if (t0 < k && k < t1) out.push_back(k);
    for (double k : dur_knots_) {
        double t = entry + k;
        if (t0 < t && t < t1) out.push_back(t);
    }
}

HazardPtr oracle_censoring(const ScenarioConfig& scen) {
    return std::make_shared<OracleGammaHazard>(scen.gamma);
}

TransitionModels oracle_transitions(const ScenarioConfig& scen) {
    return {std::make_shared<OracleMu12Hazard>(scen.mu12),
            std::make_shared<OracleMu13Hazard>(scen.mu13),
            std::make_shared<OracleMu23Hazard>(scen.mu23)};
}

TransitionModels zero_transitions() {
    return {std::make_shared<ZeroHazard>(1), std::make_shared<ZeroHazard>(1),
            std::make_shared<ZeroHazard>(2)};
}

}  // namespace drcut
