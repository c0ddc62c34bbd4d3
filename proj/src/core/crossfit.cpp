#include "core/crossfit.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/simulate.hpp"

namespace drcut {

const char* cens_estimator_name(CensEstimator e) {
    switch (e) {
        case CensEstimator::kOracle: return "oracle";
        case CensEstimator::kHal: return "hal";
        case CensEstimator::kParametric: return "parametric";
        case CensEstimator::kZero: return "zero";
    }
    return "oracle";
}

CensEstimator cens_estimator_from_name(const std::string& name) {
    if (name == "oracle") return CensEstimator::kOracle;
    if (name == "hal") return CensEstimator::kHal;
    if (name == "parametric") return CensEstimator::kParametric;
    if (name == "zero") return CensEstimator::kZero;
    throw InvalidArgument("unknown censoring estimator: " + name);
}

const char* outcome_estimator_name(OutcomeEstimator e) {
    switch (e) {
        case OutcomeEstimator::kOracle: return "oracle";
        case OutcomeEstimator::kHal: return "hal";
        case OutcomeEstimator::kConstant: return "constant";
        case OutcomeEstimator::kZero: return "zero";
    }
    return "oracle";
}

OutcomeEstimator outcome_estimator_from_name(const std::string& name) {
    if (name == "oracle") return OutcomeEstimator::kOracle;
    if (name == "hal") return OutcomeEstimator::kHal;
    if (name == "constant") return OutcomeEstimator::kConstant;
    if (name == "zero") return OutcomeEstimator::kZero;
    throw InvalidArgument("unknown outcome estimator: " + name);
}

FittedNuisances fit_pipeline_nuisances(const std::vector<ObservedSubject>& train,
                                       const ScenarioConfig& scen,
                                       const PipelineConfig& config) {
    FittedNuisances out;
    out.cens_kind = cens_estimator_name(config.cens);

    HazardPtr cens_haz;
    switch (config.cens) {
        case CensEstimator::kOracle:
            cens_haz = oracle_censoring(scen);
            break;
        case CensEstimator::kHal:
            cens_haz = fit_hal_hazard(train, HalTarget::kCensoring, config.hal).hazard;
            break;
        case CensEstimator::kParametric:
            cens_haz = parametric_censoring_hazard(fit_parametric_censoring(train, scen.eta));
            break;
        case CensEstimator::kZero:
            cens_haz = std::make_shared<ZeroHazard>(1);
            break;
    }
    out.cens = std::make_shared<CensoringModel>(cens_haz, config.epsilon);

    if (config.variant == PseudoVariant::kIpcw) {
        out.outcome_kind = "none";
        return out;
    }

    ValueGridSpec grid = config.table_grid;
    grid.eta = scen.eta;
    grid.w_lo = scen.w_lo;
    grid.w_hi = scen.w_hi;
    out.outcome_kind = outcome_estimator_name(config.outcome);
    switch (config.outcome) {
        case OutcomeEstimator::kOracle:
            out.outcome = config.oracle_tables
                              ? config.oracle_tables
                              : ValueTables::build(oracle_transitions(scen), grid, {},
                                                   config.workers);
            break;
        case OutcomeEstimator::kHal:
            out.outcome = ValueTables::build(
                fit_hal_transitions(train, config.hal, config.workers), grid, {},
                config.workers);
            break;
        case OutcomeEstimator::kConstant:
            out.outcome = ValueTables::build(fit_constant_transitions(train), grid, {},
                                             config.workers);
            break;
        case OutcomeEstimator::kZero:
            out.outcome = ValueTables::build(zero_transitions(), grid, {}, config.workers);
            break;
    }
    return out;
}

std::vector<PseudoOutcome> pipeline_transform(const std::vector<ObservedSubject>& data,
                                              const FittedNuisances& fit,
                                              const ScenarioConfig& scen,
                                              const PipelineConfig& config) {
    TransformOptions opts;
    opts.variant = config.variant;
    opts.quad_step = config.quad_step;
    opts.censoring_kind = fit.cens_kind;
    opts.outcome_kind = fit.outcome_kind;
    opts.eta = scen.eta;
    opts.workers = config.workers;
    return transform_cohort(data, *fit.cens, fit.outcome, opts);
}

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("fold count must be >= 1");
    if (static_cast<std::size_t>(k) > n)
        throw InvalidArgument("more folds than subjects");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    RngStream rng(seed, 0);
    for (std::size_t i = n; i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        j = std::min(j, i - 1);
        std::swap(perm[i - 1], perm[j]);
    }
    std::vector<int> fold(n, 0);
    for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = static_cast<int>(i % k);
    return fold;
}

namespace {

std::vector<ObservedSubject> take(const std::vector<ObservedSubject>& data,
                                  const std::vector<int>& fold, int which, bool invert) {
    std::vector<ObservedSubject> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        if ((fold[i] == which) != invert) out.push_back(data[i]);
    return out;
}

std::vector<SmoothPoint> to_points(const std::vector<PseudoOutcome>& pseudo) {
    std::vector<SmoothPoint> pts(pseudo.size());
    for (std::size_t i = 0; i < pseudo.size(); ++i) pts[i] = {pseudo[i].w, pseudo[i].value};
    return pts;
}

template <class Fn>
auto with_fold_context(int fold, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("fold " + std::to_string(fold) + ": " + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("fold " + std::to_string(fold) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("fold " + std::to_string(fold) + ": " + e.what());
    }
}

}  // namespace

SplitEstimate sample_split_estimate(const std::vector<ObservedSubject>& data,
                                    const ScenarioConfig& scen, const PipelineConfig& config,
                                    double w0, std::uint64_t split_seed) {
    if (data.size() < 4) throw InvalidArgument("sample split needs at least 4 subjects");
    auto fold = fold_assignment(data.size(), 2, split_seed);
    auto nuisance_half = take(data, fold, 0, false);
    auto regress_half = take(data, fold, 1, false);

    auto fit = fit_pipeline_nuisances(nuisance_half, scen, config);
    auto pseudo = pipeline_transform(regress_half, fit, scen, config);
    double h = bandwidth_rule(static_cast<double>(regress_half.size()), config.bandwidth_c);
    auto sm = local_linear_fit(to_points(pseudo), w0, h, config.kernel);
    return SplitEstimate{sm.estimate, sm.se, nuisance_half.size(), regress_half.size()};
}

CrossFitResult crossfit_estimate(const std::vector<ObservedSubject>& data,
                                 const ScenarioConfig& scen, const PipelineConfig& config,
                                 double w0, int k, std::uint64_t fold_seed) {
    if (k < 2) throw InvalidArgument("cross-fitting needs K >= 2");
    CrossFitResult result;
    result.w0 = w0;
    result.k = k;
    result.assignment = fold_assignment(data.size(), k, fold_seed);
    double h =
        bandwidth_rule(static_cast<double>(data.size()) / k, config.bandwidth_c);

    for (int j = 0; j < k; ++j) {
        auto fe = with_fold_context(j, [&] {
            auto train = take(data, result.assignment, j, true);
            auto eval = take(data, result.assignment, j, false);
            auto fit = fit_pipeline_nuisances(train, scen, config);
            auto pseudo = pipeline_transform(eval, fit, scen, config);
            auto sm = local_linear_fit(to_points(pseudo), w0, h, config.kernel);
            return FoldEstimate{sm.estimate, sm.se, eval.size()};
        });
        result.folds.push_back(fe);
    }

    for (const auto& f : result.folds) {
        result.cf_estimate += f.estimate;
        result.cf_se += f.se;
    }
    result.cf_estimate /= static_cast<double>(k);
    result.cf_se /= static_cast<double>(k) * std::sqrt(static_cast<double>(k));
    return result;
}

std::vector<CurvePoint> regress_curve(const std::vector<PseudoOutcome>& pseudo,
                                      const std::vector<double>& grid, double h,
                                      Kernel kernel) {
    auto pts = to_points(pseudo);
    std::vector<CurvePoint> curve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto sm = local_linear_fit(pts, grid[i], h, kernel);
        curve[i] = CurvePoint{grid[i], sm.estimate, sm.se};
    }
    return curve;
}

std::vector<CurvePoint> crossfit_curve(const std::vector<ObservedSubject>& data,
                                       const ScenarioConfig& scen,
                                       const PipelineConfig& config,
                                       const std::vector<double>& grid, int k,
                                       std::uint64_t fold_seed) {
    if (k <= 1) {
        auto fit = fit_pipeline_nuisances(data, scen, config);
        auto pseudo = pipeline_transform(data, fit, scen, config);
        double h = bandwidth_rule(static_cast<double>(data.size()), config.bandwidth_c);
        return regress_curve(pseudo, grid, h, config.kernel);
    }

    auto fold = fold_assignment(data.size(), k, fold_seed);
    double h = bandwidth_rule(static_cast<double>(data.size()) / k, config.bandwidth_c);
    std::vector<CurvePoint> curve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) curve[i].w = grid[i];

    for (int j = 0; j < k; ++j) {
        with_fold_context(j, [&] {
            auto train = take(data, fold, j, true);
            auto eval = take(data, fold, j, false);
            auto fit = fit_pipeline_nuisances(train, scen, config);
            auto pseudo = pipeline_transform(eval, fit, scen, config);
            auto fold_curve = regress_curve(pseudo, grid, h, config.kernel);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                curve[i].estimate += fold_curve[i].estimate;
                curve[i].se += fold_curve[i].se;
            }
            return 0;
        });
    }
    for (auto& p : curve) {
        p.estimate /= static_cast<double>(k);
        p.se /= static_cast<double>(k) * std::sqrt(static_cast<double>(k));
    }
    return curve;
}

NuisanceNorms nuisance_error_norms(const FittedNuisances& fit, const ScenarioConfig& scen,
                                   const ValueTables& truth, const std::vector<double>& ws,
                                   const std::vector<double>& weights,
                                   std::size_t paths_per_point, std::uint64_t seed,
                                   int workers) {
    if (ws.size() != weights.size())
        throw InvalidArgument("nuisance norms: covariates and weights differ in length");
    if (paths_per_point == 0)
        throw InvalidArgument("nuisance norms: need at least one path per point");
    double total = 0.0;
    for (double w : weights) total += std::abs(w);
    if (!(total > 0.0)) throw InvalidArgument("nuisance norms: all weights zero");

    const double eta = scen.eta;
    const double step = 0.02;
    HazardPtr truth_haz = oracle_censoring(scen);
    const HazardModel& est_haz = fit.cens->hazard();

    std::vector<double> out_acc(ws.size(), 0.0), haz_acc(ws.size(), 0.0);
    parallel_for(ws.size(), [&](std::size_t i) {
        if (std::abs(weights[i]) == 0.0) return;
        double w = ws[i];
        auto qt = truth.locate_w(w);
        ValueTables::WQuery qe;
        if (fit.outcome) qe = fit.outcome->locate_w(w);

        double out_sum = 0.0, haz_sum = 0.0;
        for (std::size_t p = 0; p < paths_per_point; ++p) {
            RngStream rng(seed, i * paths_per_point + p);
            auto path = simulate_from(scen, w, 0.0, 1, 0.0, false, rng);
            std::vector<Jump> jumps{{0.0, 1}};
            jumps.insert(jumps.end(), path.jumps.begin(), path.jumps.end());
            auto segs = path_segments(jumps, eta);
            for (const auto& seg : segs) {
                if (!(seg.t1 > seg.t0)) continue;
                bool act_est = seg.state == est_haz.active_state();
                bool act_true = seg.state == truth_haz->active_state();
                std::vector<double> breaks;
                if (act_est) est_haz.time_breakpoints(seg.t0, seg.t1, seg.entry, w, breaks);
                if (act_true)
                    truth_haz->time_breakpoints(seg.t0, seg.t1, seg.entry, w, breaks);
                std::sort(breaks.begin(), breaks.end());
                std::vector<double> pts{seg.t0};
                for (double x : breaks)
                    if (x > pts.back() + 1e-12 && x < seg.t1 - 1e-12) pts.push_back(x);
                pts.push_back(seg.t1);
                for (std::size_t pi = 0; pi + 1 < pts.size(); ++pi) {
                    double a = pts[pi], b = pts[pi + 1];
                    auto npan = std::max<std::size_t>(
                        1, static_cast<std::size_t>(std::ceil((b - a) / step)));
                    double hp = (b - a) / static_cast<double>(npan);
                    auto eval = [&](double u, bool left) {
                        double uu = left ? std::nextafter(u, seg.t0) : u;
                        double od = 0.0;
                        if (fit.outcome) {
                            double accrued =
                                seg.accrued_ill + (seg.state == 2 ? u - seg.t0 : 0.0);
                            double d = qt.conditional_mean(seg.state, seg.entry, accrued, u) -
                                       qe.conditional_mean(seg.state, seg.entry, accrued, u);
                            od = d * d;
                        }
                        double gd = (act_est ? est_haz.rate(uu, seg.entry, w) : 0.0) -
                                    (act_true ? truth_haz->rate(uu, seg.entry, w) : 0.0);
                        return std::pair<double, double>{od, gd * gd};
                    };
                    for (std::size_t pk = 0; pk < npan; ++pk) {
                        double x0 = a + static_cast<double>(pk) * hp;
                        double x1 = pk + 1 == npan ? b : x0 + hp;
                        auto g0 = eval(x0, false);
                        auto gm = eval(0.5 * (x0 + x1), false);
                        auto g1 = eval(x1, pk + 1 == npan);
                        out_sum += (x1 - x0) / 6.0 *
                                   (g0.first + 4.0 * gm.first + g1.first);
                        haz_sum += (x1 - x0) / 6.0 *
                                   (g0.second + 4.0 * gm.second + g1.second);
                    }
                }
            }
        }
        out_acc[i] = out_sum / static_cast<double>(paths_per_point);
        haz_acc[i] = haz_sum / static_cast<double>(paths_per_point);
    }, workers);

    NuisanceNorms norms;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        norms.outcome_norm += std::abs(weights[i]) / total * out_acc[i];
        norms.hazard_norm += std::abs(weights[i]) / total * haz_acc[i];
    }
    norms.outcome_norm = std::sqrt(norms.outcome_norm);
    norms.hazard_norm = std::sqrt(norms.hazard_norm);
    return norms;
}

}  // namespace drcut
