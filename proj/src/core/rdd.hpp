#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/pseudo.hpp"
#include "core/smoother.hpp"

namespace drcut {

struct RddOptions {
    double w0 = 0.0;
    double h = 1.0;
    Kernel kernel = Kernel::kEpanechnikov;
    double denom_floor = 0.05;  // minimum |a_plus - a_minus|
    // Which side owns points at exactly w0. true: right window [w0, w0+h],
    // left window [w0-h, w0); false: the mirror convention.
    bool boundary_on_right = true;
};

struct RddSide {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct RddResult {
    double tau = 0.0;
    double se = 0.0;
    RddSide y_plus, y_minus, a_plus, a_minus;
    double cov_plus = 0.0;   // Cov(y_hat, a_hat) on the right side
    double cov_minus = 0.0;  // and on the left
    double w0 = 0.0;
    double h = 0.0;
    std::size_t n_left = 0, n_right = 0;
};

// Fuzzy regression discontinuity on a paired pseudo-outcome sample:
// one-sided local linear limits of E[Y|W] and E[A|W] at w0, the ratio
//   tau = (y_plus - y_minus) / (a_plus - a_minus),
// and a delta-method standard error. Each side's (y, a) fits share the
// smoother weights, so their joint covariance is sum_i p_i^2 r_y,i r_a,i.
// The two lists must describe the same subjects (matching ids and
// covariates). A treatment jump smaller than denom_floor is an error.
RddResult fuzzy_rdd(const std::vector<PseudoOutcome>& pseudo_y,
                    const std::vector<PseudoOutcome>& pseudo_a, const RddOptions& options);

struct RddSensitivityRow {
    double h = 0.0;
    bool ok = false;
    RddResult result;
    std::string error;
};

// One fuzzy_rdd per bandwidth; per-bandwidth failures are recorded, not
// fatal. The bandwidth list must be nonempty.
std::vector<RddSensitivityRow> rdd_sensitivity(const std::vector<PseudoOutcome>& pseudo_y,
                                               const std::vector<PseudoOutcome>& pseudo_a,
                                               RddOptions options,
                                               const std::vector<double>& h_list);

struct BinnedMean {
    double center = 0.0;
    double mean = 0.0;
    std::size_t count = 0;
};

// Plot data: mean pseudo-outcome per covariate bin of the given width.
std::vector<BinnedMean> binned_means(const std::vector<PseudoOutcome>& pseudo, double lo,
                                     double hi, double width);

}  // namespace drcut
