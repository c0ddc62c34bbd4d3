#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "core/scenario.hpp"
#include "core/trajectory.hpp"

namespace drcut {

// Event simulation for the illness-death scenario by thinning: per active
// hazard, proposals come from a constant dominating rate (the analytic sup of
// the hazard over the remainder of the current segment) and are accepted with
// probability hazard/bound. The censoring hazard competes in the same loop,
// masked by its state-activity indicator, but an accepted censoring event
// does not stop the path: the full trajectory keeps evolving so latent
// ground truth stays available.

struct ProspectivePath {
    std::vector<Jump> jumps;   // jumps strictly after the start time
    double censor_time = kNeverCensored;
};

// Simulate forward from time t0 in `state0` (entered at `entry0 <= t0`),
// stopping at eta. with_censoring=false leaves censor_time at +inf.
ProspectivePath simulate_from(const ScenarioConfig& scen, double w, double t0, int state0,
                              double entry0, bool with_censoring, RngStream& rng);

FullTrajectory simulate_subject(const ScenarioConfig& scen, double w, RngStream& rng,
                                bool with_censoring = true);

// n subjects, W ~ Uniform(w_lo, w_hi), subject i driven by stream (seed, i).
std::vector<FullTrajectory> simulate_cohort(const ScenarioConfig& scen, long n,
                                            std::uint64_t seed, int workers = 0);

// Apply the eta-horizon observation map and assign ids 0..n-1.
std::vector<ObservedSubject> observe_cohort(const std::vector<FullTrajectory>& full, double eta);

}  // namespace drcut
