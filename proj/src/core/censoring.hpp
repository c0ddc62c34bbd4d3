#pragma once

#include <vector>

#include "core/hazard.hpp"
#include "core/trajectory.hpp"

namespace drcut {

// A censoring hazard plus the positivity floor used wherever its survival
// shows up in a denominator.
class CensoringModel {
public:
    CensoringModel(HazardPtr hazard, double epsilon);

    const HazardModel& hazard() const { return *hazard_; }
    HazardPtr hazard_ptr() const { return hazard_; }
    double epsilon() const { return epsilon_; }

    // Integral of the hazard along a path up to time u; only stretches spent
    // in the hazard's active state contribute, and each piece is integrated
    // exactly.
    double cumulative_along(const std::vector<PathSegment>& segs, double u, double w) const;

    double survival_unclamped(const std::vector<PathSegment>& segs, double u, double w) const;

    // exp(-cumulative), clamped to [epsilon, 1].
    double survival(const std::vector<PathSegment>& segs, double u, double w) const;

private:
    HazardPtr hazard_;
    double epsilon_;
};

struct ParametricCensoringFit {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;
    double loglik = 0.0;  // mean log-likelihood per subject
};

// Maximum likelihood for the censoring hazard exp(b0 + b1*t + b2*w) on the
// observed cohort: events are observed censoring times, exposure is time
// spent in state 1 under observation. Newton with analytic gradient/Hessian
// and step halving; converges when the gradient sup-norm (on the mean
// log-likelihood scale) drops below 1e-8, throws ConvergenceError after 100
// iterations.
ParametricCensoringFit fit_parametric_censoring(const std::vector<ObservedSubject>& data,
                                                double eta);

HazardPtr parametric_censoring_hazard(const ParametricCensoringFit& fit);

// Mean log-likelihood and gradient at beta, exposed for testing against
// finite differences.
void parametric_censoring_objective(const std::vector<ObservedSubject>& data, double eta,
                                    const double beta[3], double* loglik, double grad[3],
                                    double hess[9]);

}  // namespace drcut
