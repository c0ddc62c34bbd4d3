#include "core/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace drcut {

namespace {

int state_at_impl(const std::vector<Jump>& jumps, double t, bool strict) {
    int state = 1;
    for (const auto& j : jumps) {
        if (strict ? (j.time < t) : (j.time <= t)) state = j.state;
        else break;
    }
    return state;
}

double illness_time_impl(const std::vector<Jump>& jumps, double upto) {
    double total = 0.0;
    for (const auto& seg : path_segments(jumps, upto))
        if (seg.state == 2) total += seg.t1 - seg.t0;
    return total;
}

}  // namespace

std::vector<PathSegment> path_segments(const std::vector<Jump>& jumps, double upto) {
    std::vector<PathSegment> segs;
    if (upto <= 0.0) return segs;
    double t = 0.0, entry = 0.0, accrued = 0.0;
    int state = 1;
    for (const auto& j : jumps) {
        if (j.time <= 0.0 && j.state == 1) continue;  // the (0,1) origin row
        if (j.time >= upto) break;
        if (j.time > t) {
            segs.push_back({t, j.time, state, entry, accrued});
            if (state == 2) accrued += j.time - t;
        }
        t = j.time;
        entry = j.time;
        state = j.state;
    }
    if (upto > t) segs.push_back({t, upto, state, entry, accrued});
    return segs;
}

int FullTrajectory::state_at(double t) const { return state_at_impl(jumps, t, false); }

double FullTrajectory::illness_time(double upto) const { return illness_time_impl(jumps, upto); }

int ObservedSubject::state_at(double t) const { return state_at_impl(jumps, t, false); }

int ObservedSubject::state_before(double t) const { return state_at_impl(jumps, t, true); }

double ObservedSubject::entry_before(double t) const {
    double entry = 0.0;
    for (const auto& j : jumps) {
        if (j.time < t && !(j.time <= 0.0 && j.state == 1)) entry = j.time;
        if (j.time >= t) break;
    }
    return entry;
}

double ObservedSubject::illness_time(double upto) const { return illness_time_impl(jumps, upto); }

ObservedSubject observe(const FullTrajectory& full, double eta) {
    ObservedSubject s;
    s.w = full.w;
    s.censored = full.censor_time < eta;
    s.c = s.censored ? full.censor_time : eta;
    for (const auto& j : full.jumps)
        if (j.time < s.c) s.jumps.push_back(j);
    return s;
}

std::optional<double> outcome_duration(const ObservedSubject& subject, double eta) {
    if (subject.censored) return std::nullopt;
    return subject.illness_time(eta);
}

double outcome_duration(const FullTrajectory& full, double eta) {
    return full.illness_time(eta);
}

void validate_subject(const ObservedSubject& subject, double eta) {
    auto fail = [&](const std::string& what) {
        throw InvalidArgument("subject " + std::to_string(subject.id) + ": " + what);
    };
    if (!(subject.c > 0.0) || subject.c > eta) fail("follow-up time outside (0, eta]");
    if (subject.censored && subject.c >= eta) fail("censored flag with c >= eta");
    if (!subject.censored && subject.c != eta) fail("uncensored subject must have c == eta");
    int state = 1;
    double t = 0.0;
    for (const auto& j : subject.jumps) {
        if (j.time <= 0.0 && j.state == 1) continue;
        if (j.time <= t) fail("jump times must strictly increase");
        if (j.time >= subject.c) fail("jump at or after the follow-up limit");
        bool ok = (state == 1 && (j.state == 2 || j.state == 3)) || (state == 2 && j.state == 3);
        if (!ok)
            fail("illegal transition " + std::to_string(state) + " -> " + std::to_string(j.state));
        state = j.state;
        t = j.time;
    }
}

}  // namespace drcut
