#include "core/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/simulate.hpp"

namespace drcut {

namespace {

// Composite Simpson over [a, b), split at the supplied interior breakpoints
// and then into panels no wider than `step`. The integrand callback receives
// a flag marking piece right-endpoints, where discontinuous factors (hazard
// rates) must be evaluated as left limits; everything else is continuous.
template <class F>
double simpson_over(double a, double b, double step, std::vector<double>& breaks, F&& g) {
    if (!(b > a)) return 0.0;
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> pts{a};
    for (double x : breaks)
        if (x > pts.back() + 1e-12 && x < b - 1e-12) pts.push_back(x);
    pts.push_back(b);

    double total = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        double p0 = pts[p], p1 = pts[p + 1];
        auto npan = static_cast<std::size_t>(std::ceil((p1 - p0) / step));
        npan = std::max<std::size_t>(npan, 1);
        double hp = (p1 - p0) / static_cast<double>(npan);
        for (std::size_t k = 0; k < npan; ++k) {
            double x0 = p0 + static_cast<double>(k) * hp;
            double x1 = k + 1 == npan ? p1 : x0 + hp;
            double xm = 0.5 * (x0 + x1);
            total += (x1 - x0) / 6.0 *
                     (g(x0, false) + 4.0 * g(xm, false) + g(x1, k + 1 == npan));
        }
    }
    return total;
}

double left_limit(double x, double floor_at) {
    (void)floor_at;
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}

}  // namespace

const char* variant_name(PseudoVariant v) {
    switch (v) {
        case PseudoVariant::kIpcw: return "ipcw";
        case PseudoVariant::kDr: return "dr";
        case PseudoVariant::kOracleDr: return "oracle-dr";
        case PseudoVariant::kCausal: return "causal";
    }
    return "dr";
}

PseudoVariant variant_from_name(const std::string& name) {
    if (name == "ipcw") return PseudoVariant::kIpcw;
    if (name == "dr") return PseudoVariant::kDr;
    if (name == "oracle-dr") return PseudoVariant::kOracleDr;
    if (name == "causal") return PseudoVariant::kCausal;
    throw InvalidArgument("unknown pseudo-outcome variant: " + name);
}

double ipcw_value(const ObservedSubject& subject, const CensoringModel& cens, double eta) {
    if (subject.censored) return 0.0;
    double y = subject.illness_time(subject.c);
    auto segs = subject.segments();
    return y / cens.survival(segs, eta, subject.w);
}

double dr_value(const ObservedSubject& subject, const CensoringModel& cens,
                const ValueTables& outcome, double quad_step) {
    if (!(quad_step > 0.0)) throw InvalidArgument("dr transform: quad_step must be positive");
    auto q = outcome.locate_w(subject.w);
    auto segs = subject.segments();
    const double w = subject.w;

    double value = 0.0;
    if (!subject.censored) {
        double y = subject.illness_time(subject.c);
        value += y / cens.survival(segs, outcome.eta(), w);
    } else {
        double e2c = q.conditional_mean(subject.state_before(subject.c),
                                        subject.entry_before(subject.c),
                                        subject.illness_time(subject.c), subject.c);
        value += e2c / cens.survival(segs, subject.c, w);
    }

    const HazardModel& haz = cens.hazard();
    int active = haz.active_state();
    std::vector<double> breaks;
    for (const auto& seg : segs) {
        if (seg.state != active || !(seg.t1 > seg.t0)) continue;
        breaks.clear();
        haz.time_breakpoints(seg.t0, seg.t1, seg.entry, w, breaks);
        value -= simpson_over(
            seg.t0, seg.t1, quad_step, breaks, [&](double u, bool at_piece_end) {
                double accrued = seg.accrued_ill + (seg.state == 2 ? u - seg.t0 : 0.0);
                double e2 = q.conditional_mean(seg.state, seg.entry, accrued, u);
                double x = at_piece_end ? left_limit(u, seg.t0) : u;
                return e2 * haz.rate(x, seg.entry, w) / cens.survival(segs, u, w);
            });
    }
    return value;
}

double causal_value(const ObservedSubject& subject, int arm, double propensity,
                    const CensoringModel& cens, const ValueTables& outcome,
                    double quad_step) {
    if (!subject.treatment)
        throw InvalidArgument("causal transform: subject carries no treatment arm");
    if (!(propensity > 0.0) || propensity > 1.0)
        throw InvalidArgument("causal transform: propensity must be in (0, 1]");
    double baseline = outcome.v1(0.0, subject.w);
    if (*subject.treatment != arm) return baseline;
    return dr_value(subject, cens, outcome, quad_step) / propensity -
           (1.0 - propensity) / propensity * baseline;
}

std::vector<PseudoOutcome> transform_cohort(const std::vector<ObservedSubject>& data,
                                            const CensoringModel& cens,
                                            std::shared_ptr<const ValueTables> outcome,
                                            const TransformOptions& options) {
    if (options.variant != PseudoVariant::kIpcw && !outcome)
        throw InvalidArgument("transform: this variant needs an outcome model");
    double eta = outcome ? outcome->eta() : options.eta;

    std::vector<PseudoOutcome> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const ObservedSubject& subj = data[i];
        double value = 0.0;
        switch (options.variant) {
            case PseudoVariant::kIpcw:
                value = ipcw_value(subj, cens, eta);
                break;
            case PseudoVariant::kDr:
            case PseudoVariant::kOracleDr:
                value = dr_value(subj, cens, *outcome, options.quad_step);
                break;
            case PseudoVariant::kCausal:
                value = causal_value(subj, options.arm, options.propensity, cens, *outcome,
                                     options.quad_step);
                break;
        }
        out[i] = PseudoOutcome{subj.id,  subj.w,
                               options.variant, value,
                               options.censoring_kind, options.outcome_kind};
    }, options.workers);
    return out;
}

BiasDiagnostic oracle_bias_diagnostic(const ScenarioConfig& scen, double w,
                                      const CensoringModel& cens1,
                                      const ValueTables& outcome2, const ValueTables& truth,
                                      std::size_t n_mc, std::uint64_t seed, double quad_step,
                                      int workers) {
    if (!(quad_step > 0.0))
        throw InvalidArgument("bias diagnostic: quad_step must be positive");
    if (n_mc == 0) throw InvalidArgument("bias diagnostic: n_mc must be positive");

    const double eta = scen.eta;
    HazardPtr truth_haz = oracle_censoring(scen);
    CensoringModel truth_cens(truth_haz, 1e-300);
    auto qt = truth.locate_w(w);
    auto qe = outcome2.locate_w(w);

    std::vector<double> vals(n_mc, 0.0);
    parallel_for(n_mc, [&](std::size_t i) {
        RngStream rng(seed, i);
        auto path = simulate_from(scen, w, 0.0, 1, 0.0, /*with_censoring=*/false, rng);
        std::vector<Jump> jumps;
        jumps.reserve(path.jumps.size() + 1);
        jumps.push_back({0.0, 1});
        jumps.insert(jumps.end(), path.jumps.begin(), path.jumps.end());
        auto segs = path_segments(jumps, eta);

        double total = 0.0;
        std::vector<double> breaks;
        for (const auto& seg : segs) {
            bool act_est = seg.state == cens1.hazard().active_state();
            bool act_true = seg.state == truth_haz->active_state();
            if ((!act_est && !act_true) || !(seg.t1 > seg.t0)) continue;
            breaks.clear();
            if (act_est)
                cens1.hazard().time_breakpoints(seg.t0, seg.t1, seg.entry, w, breaks);
            if (act_true) truth_haz->time_breakpoints(seg.t0, seg.t1, seg.entry, w, breaks);
            total += simpson_over(
                seg.t0, seg.t1, quad_step, breaks, [&](double u, bool at_piece_end) {
                    double accrued = seg.accrued_ill + (seg.state == 2 ? u - seg.t0 : 0.0);
                    double ediff = qt.conditional_mean(seg.state, seg.entry, accrued, u) -
                                   qe.conditional_mean(seg.state, seg.entry, accrued, u);
                    double x = at_piece_end ? left_limit(u, seg.t0) : u;
                    double gdiff =
                        (act_est ? cens1.hazard().rate(x, seg.entry, w) : 0.0) -
                        (act_true ? truth_haz->rate(x, seg.entry, w) : 0.0);
                    double ratio = truth_cens.survival_unclamped(segs, u, w) /
                                   cens1.survival(segs, u, w);
                    return ediff * gdiff * ratio;
                });
        }
        vals[i] = total;
    }, workers);

    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(n_mc);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    double sd = n_mc > 1 ? std::sqrt(ss / static_cast<double>(n_mc - 1)) : 0.0;
    return BiasDiagnostic{mean, sd / std::sqrt(static_cast<double>(n_mc)), n_mc};
}

}  // namespace drcut
