#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "core/crossfit.hpp"
#include "core/errors.hpp"
#include "core/simulate.hpp"
#include "helpers.hpp"

using namespace drcut;

namespace {

std::vector<ObservedSubject> sim_cohort(const ScenarioConfig& sc, long n, std::uint64_t seed) {
    return observe_cohort(simulate_cohort(sc, n, seed, 1), sc.eta);
}

ValueGridSpec coarse_grid() {
    ValueGridSpec g;
    g.t_step = 0.01;
    g.s_step = 0.1;
    g.store_stride = 5;
    g.w_step = 0.5;
    return g;
}

PipelineConfig ipcw_oracle() {
    PipelineConfig pc;
    pc.variant = PseudoVariant::kIpcw;
    pc.cens = CensEstimator::kOracle;
    pc.bandwidth_c = 3.0;
    return pc;
}

}  // namespace

TEST_CASE("nuisance estimator names round trip") {
    for (auto e : {CensEstimator::kOracle, CensEstimator::kHal, CensEstimator::kParametric,
                   CensEstimator::kZero})
        CHECK(cens_estimator_from_name(cens_estimator_name(e)) == e);
    for (auto e : {OutcomeEstimator::kOracle, OutcomeEstimator::kHal,
                   OutcomeEstimator::kConstant, OutcomeEstimator::kZero})
        CHECK(outcome_estimator_from_name(outcome_estimator_name(e)) == e);
    CHECK(std::string(cens_estimator_name(CensEstimator::kParametric)) == "parametric");
    CHECK(std::string(outcome_estimator_name(OutcomeEstimator::kConstant)) == "constant");
    CHECK_THROWS_AS(cens_estimator_from_name("weibull"), InvalidArgument);
    CHECK_THROWS_AS(outcome_estimator_from_name("cox"), InvalidArgument);
}

TEST_CASE("fold assignment deals balanced deterministic folds") {
    auto fold = fold_assignment(10, 3, 99);
    REQUIRE(fold.size() == 10);
    std::vector<int> counts(3, 0);
    for (int f : fold) {
        REQUIRE(f >= 0);
        REQUIRE(f < 3);
        ++counts[f];
    }
    std::sort(counts.begin(), counts.end());
    CHECK(counts == std::vector<int>{3, 3, 4});

    CHECK(fold == fold_assignment(10, 3, 99));
    CHECK(fold != fold_assignment(10, 3, 100));

    // One fold means everything lands in fold zero.
    auto all = fold_assignment(6, 1, 7);
    CHECK(std::all_of(all.begin(), all.end(), [](int f) { return f == 0; }));

    CHECK_THROWS_AS(fold_assignment(10, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(fold_assignment(3, 5, 1), InvalidArgument);
}

TEST_CASE("curve regression is the pointwise local linear fit") {
    std::vector<PseudoOutcome> pseudo;
    for (int i = 0; i < 60; ++i) {
        double w = -2.0 + 4.0 * static_cast<double>(i) / 59.0;
        pseudo.push_back({i, w, PseudoVariant::kDr, std::cos(w) + 0.1 * w, "o", "o"});
    }
    std::vector<double> grid{-1.5, -0.5, 0.0, 0.5, 1.5};
    double h = 0.6;
    auto curve = regress_curve(pseudo, grid, h, Kernel::kTriangular);
    REQUIRE(curve.size() == grid.size());

    std::vector<SmoothPoint> pts;
    for (const auto& p : pseudo) pts.push_back({p.w, p.value});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto sm = local_linear_fit(pts, grid[i], h, Kernel::kTriangular);
        CHECK(curve[i].w == grid[i]);
        CHECK(curve[i].estimate == sm.estimate);
        CHECK(curve[i].se == sm.se);
    }
}

TEST_CASE("single-fold cross-fit curve is the plain full-data pipeline") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 400, 606);

    PipelineConfig pc;
    pc.variant = PseudoVariant::kDr;
    pc.cens = CensEstimator::kOracle;
    pc.outcome = OutcomeEstimator::kOracle;
    pc.bandwidth_c = 2.0;
    pc.table_grid = coarse_grid();
    {
        ValueGridSpec g = coarse_grid();
        g.eta = sc.eta;
        g.w_lo = sc.w_lo;
        g.w_hi = sc.w_hi;
        pc.oracle_tables = ValueTables::build(oracle_transitions(sc), g, {}, 1);
    }
    pc.workers = 1;

    std::vector<double> grid{-2.0, -1.0, 0.0, 1.0, 2.0};
    auto curve = crossfit_curve(data, sc, pc, grid, 1, 12345);

    auto fit = fit_pipeline_nuisances(data, sc, pc);
    CHECK(fit.outcome.get() == pc.oracle_tables.get());
    auto pseudo = pipeline_transform(data, fit, sc, pc);
    double h = bandwidth_rule(static_cast<double>(data.size()), pc.bandwidth_c);
    auto manual = regress_curve(pseudo, grid, h, pc.kernel);

    REQUIRE(curve.size() == manual.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].w == manual[i].w);
        CHECK(curve[i].estimate == manual[i].estimate);
        CHECK(curve[i].se == manual[i].se);
    }
}

TEST_CASE("cross-fit point estimate is the fold average") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 200, 515);
    auto pc = ipcw_oracle();

    const int k = 3;
    const std::uint64_t seed = 42;
    auto res = crossfit_estimate(data, sc, pc, 0.0, k, seed);
    CHECK(res.w0 == 0.0);
    CHECK(res.k == k);
    REQUIRE(res.folds.size() == k);
    CHECK(res.assignment == fold_assignment(data.size(), k, seed));

    double mean_est = 0.0, mean_se = 0.0;
    std::vector<std::size_t> counts(k, 0);
    for (int f : res.assignment) ++counts[static_cast<std::size_t>(f)];
    for (int j = 0; j < k; ++j) {
        mean_est += res.folds[j].estimate;
        mean_se += res.folds[j].se;
        CHECK(res.folds[j].n == counts[static_cast<std::size_t>(j)]);
    }
    mean_est /= k;
    mean_se /= k;
    CHECK(res.cf_estimate == doctest::Approx(mean_est).epsilon(1e-14));
    CHECK(res.cf_se == doctest::Approx(mean_se / std::sqrt(3.0)).epsilon(1e-14));

    // Reproduce fold 0 by hand: train on the complement, regress on the fold,
    // bandwidth from n / K.
    std::vector<ObservedSubject> train, eval;
    for (std::size_t i = 0; i < data.size(); ++i)
        (res.assignment[i] == 0 ? eval : train).push_back(data[i]);
    auto fit = fit_pipeline_nuisances(train, sc, pc);
    CHECK(fit.outcome == nullptr);
    CHECK(fit.outcome_kind == "none");
    auto pseudo = pipeline_transform(eval, fit, sc, pc);
    double h = bandwidth_rule(static_cast<double>(data.size()) / k, pc.bandwidth_c);
    std::vector<SmoothPoint> pts;
    for (const auto& p : pseudo) pts.push_back({p.w, p.value});
    auto sm = local_linear_fit(pts, 0.0, h, pc.kernel);
    CHECK(res.folds[0].estimate == sm.estimate);
    CHECK(res.folds[0].se == sm.se);

    // Determinism and the K >= 2 rule.
    auto res2 = crossfit_estimate(data, sc, pc, 0.0, k, seed);
    CHECK(res2.cf_estimate == res.cf_estimate);
    CHECK(res2.cf_se == res.cf_se);
    CHECK_THROWS_AS(crossfit_estimate(data, sc, pc, 0.0, 1, seed), InvalidArgument);
}

TEST_CASE("sample split fits on one half and regresses on the other") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 41, 77);
    auto pc = ipcw_oracle();

    auto est = sample_split_estimate(data, sc, pc, 0.0, 5);
    CHECK(est.n_fit == 21);
    CHECK(est.n_reg == 20);
    CHECK(std::isfinite(est.estimate));
    CHECK(est.se > 0.0);

    auto again = sample_split_estimate(data, sc, pc, 0.0, 5);
    CHECK(again.estimate == est.estimate);
    CHECK(again.se == est.se);
    auto other = sample_split_estimate(data, sc, pc, 0.0, 6);
    CHECK(other.estimate != est.estimate);

    std::vector<ObservedSubject> tiny(data.begin(), data.begin() + 3);
    CHECK_THROWS_AS(sample_split_estimate(tiny, sc, pc, 0.0, 5), InvalidArgument);
}

TEST_CASE("oracle pipelines reuse shared truth tables") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 60, 8);

    PipelineConfig pc;
    pc.variant = PseudoVariant::kDr;
    pc.cens = CensEstimator::kOracle;
    pc.outcome = OutcomeEstimator::kOracle;
    pc.table_grid = coarse_grid();

    // Without shared tables each fit solves its own copy.
    auto own = fit_pipeline_nuisances(data, sc, pc);
    REQUIRE(own.outcome != nullptr);
    CHECK(own.cens_kind == "oracle");
    CHECK(own.outcome_kind == "oracle");

    ValueGridSpec g = coarse_grid();
    g.eta = sc.eta;
    g.w_lo = sc.w_lo;
    g.w_hi = sc.w_hi;
    pc.oracle_tables = ValueTables::build(oracle_transitions(sc), g, {}, 1);
    auto shared = fit_pipeline_nuisances(data, sc, pc);
    CHECK(shared.outcome.get() == pc.oracle_tables.get());
    // Same grid, same truth: both copies agree.
    CHECK(own.outcome->v1(0.0, -1.0) ==
          doctest::Approx(shared.outcome->v1(0.0, -1.0)).epsilon(1e-14));
}

TEST_CASE("nuisance error norms separate the two nuisances") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 300, 21);

    ValueGridSpec g = coarse_grid();
    g.eta = sc.eta;
    g.w_lo = sc.w_lo;
    g.w_hi = sc.w_hi;
    auto truth = ValueTables::build(oracle_transitions(sc), g, {}, 1);

    std::vector<double> ws{0.0, 1.0};
    std::vector<double> wts{0.5, 0.5};

    // Oracle everywhere: both norms are exactly zero.
    PipelineConfig pc;
    pc.variant = PseudoVariant::kDr;
    pc.cens = CensEstimator::kOracle;
    pc.outcome = OutcomeEstimator::kOracle;
    pc.table_grid = coarse_grid();
    pc.oracle_tables = truth;
    auto fit = fit_pipeline_nuisances(data, sc, pc);
    auto norms = nuisance_error_norms(fit, sc, *truth, ws, wts, 50, 3);
    CHECK(norms.outcome_norm == 0.0);
    CHECK(norms.hazard_norm == 0.0);

    // Zeroed outcome model: outcome norm lights up, hazard norm stays zero.
    pc.outcome = OutcomeEstimator::kZero;
    auto fit_zero_out = fit_pipeline_nuisances(data, sc, pc);
    auto n2 = nuisance_error_norms(fit_zero_out, sc, *truth, ws, wts, 50, 3);
    CHECK(n2.outcome_norm > 0.1);
    CHECK(n2.hazard_norm == 0.0);

    // Zeroed censoring hazard under ipcw: no outcome model, hazard norm only.
    PipelineConfig ipcw;
    ipcw.variant = PseudoVariant::kIpcw;
    ipcw.cens = CensEstimator::kZero;
    auto fit_zero_cens = fit_pipeline_nuisances(data, sc, ipcw);
    CHECK(fit_zero_cens.outcome == nullptr);
    auto n3 = nuisance_error_norms(fit_zero_cens, sc, *truth, ws, wts, 50, 3);
    CHECK(n3.outcome_norm == 0.0);
    CHECK(n3.hazard_norm > 0.1);

    CHECK_THROWS_AS(nuisance_error_norms(fit, sc, *truth, ws, {0.5}, 50, 3),
                    InvalidArgument);
    CHECK_THROWS_AS(nuisance_error_norms(fit, sc, *truth, ws, wts, 0, 3), InvalidArgument);
    CHECK_THROWS_AS(nuisance_error_norms(fit, sc, *truth, ws, {0.0, 0.0}, 50, 3),
                    InvalidArgument);
}

TEST_CASE("two-fold cross-fit with spline nuisances runs end to end") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 600, 1001);

    PipelineConfig pc;
    pc.variant = PseudoVariant::kDr;
    pc.cens = CensEstimator::kHal;
    pc.outcome = OutcomeEstimator::kHal;
    pc.bandwidth_c = 3.0;
    pc.table_grid = coarse_grid();
    pc.hal.knots_per_margin = 3;
    pc.hal.n_lambda = 8;
    pc.hal.lambda_min_ratio = 0.05;
    pc.hal.cv_folds = 3;
    pc.workers = 1;

    auto res = crossfit_estimate(data, sc, pc, -1.0, 2, 31);
    REQUIRE(res.folds.size() == 2);
    CHECK(res.folds[0].n + res.folds[1].n == data.size());
    CHECK(std::isfinite(res.cf_estimate));
    CHECK(res.cf_se > 0.0);
    // Desk-scale sanity: the estimate lands within a wide band of the truth.
    CHECK(res.cf_estimate > 0.2);
    CHECK(res.cf_estimate < 2.5);
}
