#include "core/scenario.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace drcut {

ScenarioConfig::ScenarioConfig() {
    mu12 = Mu12Params{std::log(0.3), 0.15, 0.15, 2.5, -0.05, 1.0};
    mu13 = Mu13Params{std::log(0.1), 0.3, 0.05, 1.0};
    mu23 = Mu23Params{-0.75, 3.0, 3.0, {1.07, 0.09, -0.024, -0.014, 0.001, 0.00065}, 1.0};
    gamma = GammaParams{std::log(0.2), 0.6, -2.0, 2.0, 1.0};
}

double ScenarioConfig::mu12_rate(double t, double w) const {
    if (mu12.scale == 0.0) return 0.0;
    double lp = mu12.log_level + mu12.cos_coef * std::cos(M_PI * w / 2.0) +
                (t > mu12.late_time ? mu12.late_coef : 0.0) + mu12.w_coef * w;
    return mu12.scale * std::exp(lp);
}

double ScenarioConfig::mu13_rate(double t, double w) const {
    if (mu13.scale == 0.0) return 0.0;
    double lp = mu13.log_level + mu13.sin_coef * std::sin(M_PI * w / 2.0) + mu13.t_coef * t;
    return mu13.scale * std::exp(lp);
}

double ScenarioConfig::mu23_rate(double duration, double w) const {
    if (mu23.scale == 0.0) return 0.0;
    double wb = std::min(w, mu23.wbar_cap);
    double p = 0.0, x = 1.0;
    for (double coef : mu23.poly) {
        p += coef * x;
        x *= wb;
    }
    double d = std::min(duration, mu23.dur_cap);
    return mu23.scale * std::exp(mu23.dur_factor * d * p);
}

double ScenarioConfig::gamma_rate(double w) const {
    if (gamma.scale == 0.0) return 0.0;
    double lp = gamma.log_level + ((w >= gamma.band_lo && w < gamma.band_hi) ? gamma.band_coef : 0.0);
    return gamma.scale * std::exp(lp);
}

void ScenarioConfig::validate() const {
    if (!(eta > 0.0)) throw InvalidArgument("scenario: eta must be positive");
    if (!(w_lo < w_hi)) throw InvalidArgument("scenario: need w_lo < w_hi");
    if (mu12.scale < 0 || mu13.scale < 0 || mu23.scale < 0 || gamma.scale < 0)
        throw InvalidArgument("scenario: hazard scales must be nonnegative");
    if (!(gamma.band_lo <= gamma.band_hi))
        throw InvalidArgument("scenario: need gamma.band_lo <= gamma.band_hi");
    if (!(mu23.dur_cap > 0)) throw InvalidArgument("scenario: mu23.dur_cap must be positive");
}

ScenarioConfig ScenarioConfig::from_config(const ConfigMap& cfg) {
    static const std::set<std::string> allowed = {
        "eta", "w_lo", "w_hi",
        "mu12.log_level", "mu12.cos_coef", "mu12.late_coef", "mu12.late_time", "mu12.w_coef",
        "mu12.scale",
        "mu13.log_level", "mu13.sin_coef", "mu13.t_coef", "mu13.scale",
        "mu23.dur_factor", "mu23.dur_cap", "mu23.wbar_cap", "mu23.poly", "mu23.scale",
        "gamma.log_level", "gamma.band_coef", "gamma.band_lo", "gamma.band_hi", "gamma.scale",
    };
    cfg.require_known_keys(allowed);

    ScenarioConfig s;
    s.eta = cfg.get_double("eta", s.eta);
    s.w_lo = cfg.get_double("w_lo", s.w_lo);
    s.w_hi = cfg.get_double("w_hi", s.w_hi);

    s.mu12.log_level = cfg.get_double("mu12.log_level", s.mu12.log_level);
    s.mu12.cos_coef = cfg.get_double("mu12.cos_coef", s.mu12.cos_coef);
    s.mu12.late_coef = cfg.get_double("mu12.late_coef", s.mu12.late_coef);
    s.mu12.late_time = cfg.get_double("mu12.late_time", s.mu12.late_time);
    s.mu12.w_coef = cfg.get_double("mu12.w_coef", s.mu12.w_coef);
    s.mu12.scale = cfg.get_double("mu12.scale", s.mu12.scale);

    s.mu13.log_level = cfg.get_double("mu13.log_level", s.mu13.log_level);
    s.mu13.sin_coef = cfg.get_double("mu13.sin_coef", s.mu13.sin_coef);
    s.mu13.t_coef = cfg.get_double("mu13.t_coef", s.mu13.t_coef);
    s.mu13.scale = cfg.get_double("mu13.scale", s.mu13.scale);

    s.mu23.dur_factor = cfg.get_double("mu23.dur_factor", s.mu23.dur_factor);
    s.mu23.dur_cap = cfg.get_double("mu23.dur_cap", s.mu23.dur_cap);
    s.mu23.wbar_cap = cfg.get_double("mu23.wbar_cap", s.mu23.wbar_cap);
    if (cfg.has("mu23.poly")) {
        auto poly = cfg.get_doubles("mu23.poly");
        if (poly.size() != s.mu23.poly.size())
            throw ParseError("scenario: mu23.poly must list exactly 6 coefficients");
        for (std::size_t i = 0; i < poly.size(); ++i) s.mu23.poly[i] = poly[i];
    }
    s.mu23.scale = cfg.get_double("mu23.scale", s.mu23.scale);

    s.gamma.log_level = cfg.get_double("gamma.log_level", s.gamma.log_level);
    s.gamma.band_coef = cfg.get_double("gamma.band_coef", s.gamma.band_coef);
    s.gamma.band_lo = cfg.get_double("gamma.band_lo", s.gamma.band_lo);
    s.gamma.band_hi = cfg.get_double("gamma.band_hi", s.gamma.band_hi);
    s.gamma.scale = cfg.get_double("gamma.scale", s.gamma.scale);

    s.validate();
    return s;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    return from_config(ConfigMap::parse_file(path));
}

std::string ScenarioConfig::to_config_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "eta = " << eta << "\n"
        << "w_lo = " << w_lo << "\n"
        << "w_hi = " << w_hi << "\n"
        << "mu12.log_level = " << mu12.log_level << "\n"
        << "mu12.cos_coef = " << mu12.cos_coef << "\n"
        << "mu12.late_coef = " << mu12.late_coef << "\n"
        << "mu12.late_time = " << mu12.late_time << "\n"
        << "mu12.w_coef = " << mu12.w_coef << "\n"
        << "mu12.scale = " << mu12.scale << "\n"
        << "mu13.log_level = " << mu13.log_level << "\n"
        << "mu13.sin_coef = " << mu13.sin_coef << "\n"
        << "mu13.t_coef = " << mu13.t_coef << "\n"
        << "mu13.scale = " << mu13.scale << "\n"
        << "mu23.dur_factor = " << mu23.dur_factor << "\n"
        << "mu23.dur_cap = " << mu23.dur_cap << "\n"
        << "mu23.wbar_cap = " << mu23.wbar_cap << "\n"
        << "mu23.poly = " << mu23.poly[0] << ", " << mu23.poly[1] << ", " << mu23.poly[2] << ", "
        << mu23.poly[3] << ", " << mu23.poly[4] << ", " << mu23.poly[5] << "\n"
        << "mu23.scale = " << mu23.scale << "\n"
        << "gamma.log_level = " << gamma.log_level << "\n"
        << "gamma.band_coef = " << gamma.band_coef << "\n"
        << "gamma.band_lo = " << gamma.band_lo << "\n"
        << "gamma.band_hi = " << gamma.band_hi << "\n"
        << "gamma.scale = " << gamma.scale << "\n";
    return out.str();
}

}  // namespace drcut
