#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace drcut {

constexpr double kNeverCensored = std::numeric_limits<double>::infinity();

struct Jump {
    double time;
    int state;  // state entered at `time`
};

// Maximal state interval [t0, t1) of a path, with the entry time into the
// state (needed by duration-dependent hazards) and the illness time accrued
// on [0, t0).
struct PathSegment {
    double t0;
    double t1;
    int state;
    double entry;         // time the state was entered
    double accrued_ill;   // time spent in state 2 before t0
};

// Decompose a jump sequence (starting at (0, 1)) into segments on [0, upto).
std::vector<PathSegment> path_segments(const std::vector<Jump>& jumps, double upto);

// Complete latent data for one subject: the multi-state path on [0, eta]
// plus the censoring time. censor_time is +inf when C >= eta.
struct FullTrajectory {
    double w = 0.0;
    std::vector<Jump> jumps;  // first element is {0, 1}
    double censor_time = kNeverCensored;

    int state_at(double t) const;         // right-continuous
    double illness_time(double upto) const;
};

// What an analyst sees: the path truncated at c = min(C, eta).
struct ObservedSubject {
    std::int64_t id = 0;
    double w = 0.0;
    std::vector<Jump> jumps;  // jump times < c
    double c = 0.0;
    bool censored = false;    // true iff C < eta
    std::optional<int> treatment;  // baseline arm, when the data carry one

    int state_at(double t) const;      // right-continuous
    int state_before(double t) const;  // left limit (jump at exactly t ignored)
    double entry_before(double t) const;
    double illness_time(double upto) const;
    std::vector<PathSegment> segments() const { return path_segments(jumps, c); }
};

ObservedSubject observe(const FullTrajectory& full, double eta);

// Observed outcome: total illness time on [0, eta). Unavailable (nullopt)
// when the subject is censored before eta.
std::optional<double> outcome_duration(const ObservedSubject& subject, double eta);

// Full-data outcome, always available.
double outcome_duration(const FullTrajectory& full, double eta);

void validate_subject(const ObservedSubject& subject, double eta);

}  // namespace drcut
