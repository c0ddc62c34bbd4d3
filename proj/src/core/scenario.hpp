#pragma once

#include <array>
#include <string>

#include "core/config.hpp"

namespace drcut {

// Data-generating scenario for the illness-death process with censoring.
// States: 1 = healthy, 2 = ill, 3 = dead (absorbing). Covariate W is uniform
// on [w_lo, w_hi] and fixed at baseline. Each hazard keeps a multiplicative
// `scale` (1 = as parametrized, 0 = switched off) so degenerate scenarios are
// expressible in config files.

struct Mu12Params {
    double log_level;   // baseline log rate
    double cos_coef;    // coefficient on cos(pi*w/2)
    double late_coef;   // added to the log rate for t > late_time
    double late_time;
    double w_coef;      // linear w term
    double scale;
};

struct Mu13Params {
    double log_level;
    double sin_coef;    // coefficient on sin(pi*w/2)
    double t_coef;      // linear time trend in the log rate
    double scale;
};

// Recovery hazard: exp(dur_factor * min(d, dur_cap) * poly(min(w, wbar_cap)))
// where d is time spent in state 2 and poly is a degree-5 polynomial.
struct Mu23Params {
    double dur_factor;
    double dur_cap;
    double wbar_cap;
    std::array<double, 6> poly;
    double scale;
};

// Censoring hazard: active in state 1 only, constant in time, with a bump on
// the covariate band [band_lo, band_hi).
struct GammaParams {
    double log_level;
    double band_coef;
    double band_lo;
    double band_hi;
    double scale;
};

struct ScenarioConfig {
    double eta = 5.0;
    double w_lo = -4.0;
    double w_hi = 4.0;
    Mu12Params mu12;
    Mu13Params mu13;
    Mu23Params mu23;
    GammaParams gamma;

    ScenarioConfig();  // defaults below

    // Hazard evaluations (raw rates, no state-activity masking).
    double mu12_rate(double t, double w) const;
    double mu13_rate(double t, double w) const;
    double mu23_rate(double duration, double w) const;
    double gamma_rate(double w) const;

    void validate() const;  // throws InvalidArgument on nonsense

    static ScenarioConfig from_config(const ConfigMap& cfg);
    static ScenarioConfig load(const std::string& path);
    std::string to_config_text() const;
};

}  // namespace drcut
