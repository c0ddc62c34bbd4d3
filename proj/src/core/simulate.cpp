#include "core/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace drcut {

namespace {

// Cause identifiers, in fixed draw order.
enum Cause { kIll = 0, kDie = 1, kRecoverOrDie = 2, kCensor = 3 };

struct ActiveHazard {
    int cause;
    double bound;  // sup of the rate over [t, eta]
};

// All scenario hazards are monotone between their breakpoints (the mu12 late
// jump, the mu23 duration cap), so the sup over a time window is attained at
// a window endpoint: both t-pieces of mu12 are sampled by the endpoints, and
// min(d, cap) is nondecreasing in d.
double sup_mu12(const ScenarioConfig& s, double t0, double t1, double w) {
    return std::max(s.mu12_rate(t0, w), s.mu12_rate(t1, w));
}

double sup_mu13(const ScenarioConfig& s, double t0, double t1, double w) {
    return std::max(s.mu13_rate(t0, w), s.mu13_rate(t1, w));
}

double sup_mu23(const ScenarioConfig& s, double d0, double d1, double w) {
    return std::max(s.mu23_rate(d0, w), s.mu23_rate(d1, w));
}

}  // namespace

ProspectivePath simulate_from(const ScenarioConfig& scen, double w, double t0, int state0,
                              double entry0, bool with_censoring, RngStream& rng) {
    const double eta = scen.eta;
    ProspectivePath out;
    double t = t0, entry = entry0;
    int state = state0;
    bool censor_pending = with_censoring;
    const int max_proposals = 1000000;

    int proposals = 0;
    while (t < eta && state != 3) {
        ActiveHazard active[3];
        int n_active = 0;
        if (state == 1) {
            active[n_active++] = {kIll, sup_mu12(scen, t, eta, w)};
            active[n_active++] = {kDie, sup_mu13(scen, t, eta, w)};
            if (censor_pending) active[n_active++] = {kCensor, scen.gamma_rate(w)};
        } else {  // state == 2
            active[n_active++] = {kRecoverOrDie, sup_mu23(scen, t - entry, eta - entry, w)};
        }

        double bound_total = 0.0;
        for (int i = 0; i < n_active; ++i) bound_total += active[i].bound;
        if (bound_total <= 0.0) break;  // nothing can fire on the rest of the horizon

        if (++proposals > max_proposals)
            throw NumericError("thinning: proposal cap exceeded; hazards look unbounded");

        t = t + rng.exponential(bound_total);
        if (t >= eta) break;

        // Evaluate true rates at the proposal and verify domination.
        double rates[3];
        double total = 0.0;
        for (int i = 0; i < n_active; ++i) {
            double r = 0.0;
            switch (active[i].cause) {
                case kIll: r = scen.mu12_rate(t, w); break;
                case kDie: r = scen.mu13_rate(t, w); break;
                case kRecoverOrDie: r = scen.mu23_rate(t - entry, w); break;
                case kCensor: r = scen.gamma_rate(w); break;
            }
            if (!std::isfinite(r) || r < 0.0)
                throw NumericError("thinning: non-finite hazard at t=" + std::to_string(t));
            if (r > active[i].bound * (1.0 + 1e-12) + 1e-300)
                throw NumericError("thinning: dominating bound violated at t=" + std::to_string(t));
            rates[i] = r;
            total += r;
        }

        // Accept with probability total/bound_total; on acceptance the same
        // uniform (rescaled to [0, total)) picks the cause.
        double u = rng.uniform() * bound_total;
        if (u >= total) continue;  // rejected proposal

        int cause = active[n_active - 1].cause;
        double acc = 0.0;
        for (int i = 0; i < n_active; ++i) {
            acc += rates[i];
            if (u < acc) {
                cause = active[i].cause;
                break;
            }
        }

        switch (cause) {
            case kCensor:
                out.censor_time = t;
                censor_pending = false;
                break;
            case kIll:
                out.jumps.push_back({t, 2});
                state = 2;
                entry = t;
                break;
            case kDie:
            case kRecoverOrDie:
                out.jumps.push_back({t, 3});
                state = 3;
                break;
        }
    }
    return out;
}

FullTrajectory simulate_subject(const ScenarioConfig& scen, double w, RngStream& rng,
                                bool with_censoring) {
    ProspectivePath path = simulate_from(scen, w, 0.0, 1, 0.0, with_censoring, rng);
    FullTrajectory full;
    full.w = w;
    full.jumps.push_back({0.0, 1});
    full.jumps.insert(full.jumps.end(), path.jumps.begin(), path.jumps.end());
    full.censor_time = path.censor_time;
    return full;
}

std::vector<FullTrajectory> simulate_cohort(const ScenarioConfig& scen, long n,
                                            std::uint64_t seed, int workers) {
    if (n < 0) throw InvalidArgument("simulate_cohort: n must be nonnegative");
    scen.validate();
    std::vector<FullTrajectory> cohort(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        double w = rng.uniform(scen.w_lo, scen.w_hi);
        cohort[i] = simulate_subject(scen, w, rng);
    }, workers);
    return cohort;
}

std::vector<ObservedSubject> observe_cohort(const std::vector<FullTrajectory>& full, double eta) {
    std::vector<ObservedSubject> out;
    out.reserve(full.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
        ObservedSubject s = observe(full[i], eta);
        s.id = static_cast<std::int64_t>(i);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace drcut
