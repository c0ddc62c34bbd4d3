#pragma once

#include <array>
#include <vector>

#include "core/hazard.hpp"
#include "core/trajectory.hpp"

namespace drcut {

// L1-penalized piecewise-exponential hazard regression over a zero-order
// spline (indicator) tensor basis. Knots sit at empirical quantiles of the
// fitting data; the basis holds every product of per-margin indicators
// 1(x_m >= knot) up to the interaction-order cap, so the fitted hazard is
// constant on the induced cell partition. The penalized Poisson likelihood
// uses exact per-cell exposure (events and at-risk time aggregate to
// sufficient statistics, so no time discretization enters), coordinate
// descent with soft thresholding, and subject-level V-fold cross-validation
// over a descending lambda path with warm starts.

// Which event/exposure pair a fit targets.
enum class HalTarget {
    kCensoring,        // censoring events, state-1 exposure, margins (t, w)
    kIllness,          // 1 -> 2 jumps, state-1 exposure, margins (t, w)
    kDeathFromHealth,  // 1 -> 3 jumps, state-1 exposure, margins (t, w)
    kDeathFromIllness  // 2 -> 3 jumps, state-2 exposure, margins (t, d, w)
};

struct HalConfig {
    int knots_per_margin = 8;  // 0 = intercept-only (constant hazard)
    int max_order = 0;         // interaction cap; 0 = auto (2, or 3 with duration)
    int n_lambda = 30;
    double lambda_min_ratio = 1e-3;
    int cv_folds = 5;  // subject folds by position mod cv_folds; < 2 skips CV
    double tol = 1e-7;        // convergence: max coefficient change per sweep
    int max_sweeps = 100000;  // budget per lambda value; the overlapping
                              // indicator boxes make small-lambda fits crawl
    int workers = 1;  // parallelism across CV folds
};

// One subject's at-risk segments {t0, t1, entry} and events {time, entry}
// for a single target hazard.
struct SubjectRisk {
    double w = 0.0;
    std::vector<std::array<double, 3>> segments;
    std::vector<std::array<double, 2>> events;
};

std::vector<SubjectRisk> extract_risk(const std::vector<ObservedSubject>& data,
                                      HalTarget target);

struct HalFit {
    HazardPtr hazard;
    double lambda = 0.0;
    int nonzero = 0;  // penalized coefficients away from zero at the chosen lambda
    std::vector<double> lambda_path;
    // Mean held-out negative log-likelihood per lambda. May be shorter than
    // lambda_path: the search stops once the loss stops improving.
    std::vector<double> cv_loss;
    // Penalized objective after each coordinate-descent sweep of the final
    // full-data fit, tagged with the lambda index; nonincreasing within a tag.
    std::vector<std::pair<int, double>> objective_trace;
};

// Fit from pre-extracted risk data. `with_duration` adds the duration margin
// (for the 2 -> 3 hazard). `active_state` is stamped on the returned model.
HalFit fit_hal_risk(const std::vector<SubjectRisk>& risk, bool with_duration,
                    int active_state, const HalConfig& config = {});

HalFit fit_hal_hazard(const std::vector<ObservedSubject>& data, HalTarget target,
                      const HalConfig& config = {});

// All three transition hazards, fit in parallel.
TransitionModels fit_hal_transitions(const std::vector<ObservedSubject>& data,
                                     const HalConfig& config = {}, int workers = 0);

// Occurrence/exposure constant hazard (the intercept-only special case).
HazardPtr fit_constant_hazard(const std::vector<ObservedSubject>& data, HalTarget target);
TransitionModels fit_constant_transitions(const std::vector<ObservedSubject>& data);

}  // namespace drcut
