#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/pseudo.hpp"
#include "core/simulate.hpp"
#include "helpers.hpp"

using namespace drcut;
using drcut::testing::make_subject;

namespace {

// Value tables on a narrow covariate window around the points a test uses.
ValueTablesPtr tables_near(const ScenarioConfig& sc, double w_lo, double w_hi) {
    ValueGridSpec grid;
    grid.eta = sc.eta;
    grid.t_step = 0.005;
    grid.s_step = 0.05;
    grid.store_stride = 4;
    grid.w_lo = w_lo;
    grid.w_hi = w_hi;
    grid.w_step = 0.25;
    return ValueTables::build(oracle_transitions(sc), grid, {}, 1);
}

ValueTablesPtr zero_tables(const ScenarioConfig& sc, double w_lo, double w_hi) {
    ValueGridSpec grid;
    grid.eta = sc.eta;
    grid.t_step = 0.01;
    grid.s_step = 0.1;
    grid.store_stride = 5;
    grid.w_lo = w_lo;
    grid.w_hi = w_hi;
    grid.w_step = 0.5;
    return ValueTables::build(zero_transitions(), grid, {}, 1);
}

}  // namespace

TEST_CASE("pseudo-outcome variant names round trip") {
    for (auto v : {PseudoVariant::kIpcw, PseudoVariant::kDr, PseudoVariant::kOracleDr,
                   PseudoVariant::kCausal})
        CHECK(variant_from_name(variant_name(v)) == v);
    CHECK(std::string(variant_name(PseudoVariant::kIpcw)) == "ipcw");
    CHECK_THROWS_AS(variant_from_name("banana"), InvalidArgument);
}

TEST_CASE("ipcw value matches the closed form on a hand-built path") {
    ScenarioConfig sc;
    CensoringModel cens(oracle_censoring(sc), 1e-6);

    // w = 3 sits outside the band, so gamma = 0.2 while healthy. Ill from
    // t = 2 to eta = 5: outcome 3, survival exp(-0.4).
    auto subj = make_subject(1, 3.0, {{0.0, 1}, {2.0, 2}}, 5.0, false);
    CHECK(ipcw_value(subj, cens, sc.eta) ==
          doctest::Approx(3.0 * std::exp(0.4)).epsilon(1e-12));

    // Censored subjects contribute exactly zero.
    auto censored = make_subject(2, 3.0, {{0.0, 1}}, 2.0, true);
    CHECK(ipcw_value(censored, cens, sc.eta) == 0.0);
}

TEST_CASE("ipcw survival weight clamps at the positivity floor") {
    ScenarioConfig sc;
    sc.gamma.log_level = std::log(2.0);
    sc.gamma.band_coef = 0.0;
    CensoringModel cens(oracle_censoring(sc), 0.5);

    // Healthy for 4 years: true survival exp(-8) is far below the 0.5 floor,
    // so the weight is exactly 1 / 0.5.
    auto subj = make_subject(1, 0.0, {{0.0, 1}, {4.0, 2}}, 5.0, false);
    CHECK(ipcw_value(subj, cens, sc.eta) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("dr transform with censoring switched off returns the plain outcome") {
    ScenarioConfig sc;
    auto tables = tables_near(sc, 2.5, 3.5);
    CensoringModel no_cens(std::make_shared<ZeroHazard>(1), 1e-6);

    // Uncensored: weight 1, no jump term, compensator identically zero.
    auto subj = make_subject(1, 3.0, {{0.0, 1}, {1.5, 2}, {4.0, 3}}, 5.0, false);
    double y = subj.illness_time(5.0);
    CHECK(y == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(dr_value(subj, no_cens, *tables) == doctest::Approx(y).epsilon(1e-14));

    // Censored: only the jump term survives, and the weight is 1, so the
    // transform is the conditional mean at the censoring time.
    auto cen = make_subject(2, 3.0, {{0.0, 1}, {1.0, 2}}, 2.5, true);
    CHECK(dr_value(cen, no_cens, *tables) ==
          doctest::Approx(tables->conditional_mean(cen, 2.5)).epsilon(1e-13));

    CHECK_THROWS_AS(dr_value(subj, no_cens, *tables, 0.0), InvalidArgument);
    CHECK_THROWS_AS(dr_value(subj, no_cens, *tables, -0.1), InvalidArgument);
}

TEST_CASE("dr compensator quadrature is converged at the default step") {
    ScenarioConfig sc;
    auto tables = tables_near(sc, -4.0, 4.0);
    CensoringModel cens(oracle_censoring(sc), 1e-6);

    auto cohort = observe_cohort(simulate_cohort(sc, 25, 424, 1), sc.eta);
    double worst = 0.0;
    for (const auto& subj : cohort) {
        double coarse = dr_value(subj, cens, *tables, 0.01);
        double fine = dr_value(subj, cens, *tables, 0.0025);
        worst = std::max(worst, std::abs(coarse - fine));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("dr and ipcw transforms are conditionally unbiased at a covariate point") {
    ScenarioConfig sc;
    const double w = 3.0;
    auto tables = tables_near(sc, 2.75, 3.25);
    CensoringModel cens(oracle_censoring(sc), 1e-6);
    double truth = tables->v1(0.0, w);

    const std::size_t m = 3000;
    std::vector<double> dr_vals(m), ipcw_vals(m);
    for (std::size_t i = 0; i < m; ++i) {
        RngStream rng(909, i);
        auto full = simulate_subject(sc, w, rng);
        auto subj = observe(full, sc.eta);
        subj.id = static_cast<std::int64_t>(i);
        dr_vals[i] = dr_value(subj, cens, *tables);
        ipcw_vals[i] = ipcw_value(subj, cens, sc.eta);
    }

    auto mean_se = [m](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(m);
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair{mean, std::sqrt(ss / static_cast<double>(m - 1) /
                                         static_cast<double>(m))};
    };
    auto [dr_mean, dr_se] = mean_se(dr_vals);
    auto [ip_mean, ip_se] = mean_se(ipcw_vals);
    CHECK(std::abs(dr_mean - truth) < 3.5 * dr_se);
    CHECK(std::abs(ip_mean - truth) < 3.5 * ip_se);
    // The doubly robust transform should not be wilder than the IPCW one.
    CHECK(dr_se < ip_se * 1.5);
}

TEST_CASE("causal transform reduces to the dr transform and the baseline") {
    ScenarioConfig sc;
    auto tables = tables_near(sc, -0.5, 0.5);
    CensoringModel cens(oracle_censoring(sc), 1e-6);

    auto subj = make_subject(1, 0.25, {{0.0, 1}, {1.0, 2}}, 3.0, true);
    subj.treatment = 1;
    double dr = dr_value(subj, cens, *tables);
    double baseline = tables->v1(0.0, subj.w);

    CHECK(causal_value(subj, 1, 1.0, cens, *tables) == doctest::Approx(dr).epsilon(1e-14));
    CHECK(causal_value(subj, 1, 0.5, cens, *tables) ==
          doctest::Approx(2.0 * dr - baseline).epsilon(1e-12));
    // Other arm: only the baseline augmentation remains.
    CHECK(causal_value(subj, 0, 0.5, cens, *tables) ==
          doctest::Approx(baseline).epsilon(1e-14));

    auto bare = make_subject(2, 0.0, {{0.0, 1}}, 5.0, false);
    CHECK_THROWS_AS(causal_value(bare, 1, 0.5, cens, *tables), InvalidArgument);
    CHECK_THROWS_AS(causal_value(subj, 1, 0.0, cens, *tables), InvalidArgument);
    CHECK_THROWS_AS(causal_value(subj, 1, 1.2, cens, *tables), InvalidArgument);
}

TEST_CASE("batch transform stamps metadata and matches the scalar transforms") {
    ScenarioConfig sc;
    auto tables = tables_near(sc, -4.0, 4.0);
    CensoringModel cens(oracle_censoring(sc), 1e-6);
    auto cohort = observe_cohort(simulate_cohort(sc, 40, 31337, 1), sc.eta);

    TransformOptions opt;
    opt.variant = PseudoVariant::kDr;
    opt.censoring_kind = "oracle-gamma";
    opt.outcome_kind = "oracle-tables";
    auto out = transform_cohort(cohort, cens, tables, opt);
    REQUIRE(out.size() == cohort.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].id == cohort[i].id);
        CHECK(out[i].w == cohort[i].w);
        CHECK(out[i].variant == PseudoVariant::kDr);
        CHECK(out[i].censoring_kind == "oracle-gamma");
        CHECK(out[i].outcome_kind == "oracle-tables");
        CHECK(out[i].value == dr_value(cohort[i], cens, *tables, opt.quad_step));
    }

    // The ipcw variant runs without an outcome model.
    TransformOptions ipcw;
    ipcw.variant = PseudoVariant::kIpcw;
    ipcw.eta = sc.eta;
    auto out2 = transform_cohort(cohort, cens, nullptr, ipcw);
    for (std::size_t i = 0; i < out2.size(); ++i)
        CHECK(out2[i].value == ipcw_value(cohort[i], cens, sc.eta));

    // Everything else needs one.
    TransformOptions dr;
    dr.variant = PseudoVariant::kDr;
    CHECK_THROWS_AS(transform_cohort(cohort, cens, nullptr, dr), InvalidArgument);

    // Worker count never changes values.
    TransformOptions par = opt;
    par.workers = 2;
    auto out3 = transform_cohort(cohort, cens, tables, par);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out3[i].value == out[i].value);
}

TEST_CASE("bias diagnostic vanishes when either nuisance is the truth") {
    ScenarioConfig sc;
    auto truth = tables_near(sc, -0.5, 0.5);
    auto wrong_outcome = zero_tables(sc, -0.5, 0.5);

    // Oracle censoring, wrong outcome: the hazard difference is identically
    // zero, so every Monte Carlo draw integrates to exactly zero.
    CensoringModel oracle_cens(oracle_censoring(sc), 1e-6);
    auto d1 = oracle_bias_diagnostic(sc, 0.0, oracle_cens, *wrong_outcome, *truth, 50, 5);
    CHECK(d1.mean == 0.0);
    CHECK(d1.se == 0.0);
    CHECK(d1.n == 50);

    // Wrong censoring, oracle outcome: the outcome difference vanishes.
    CensoringModel flat_cens(std::make_shared<ParametricCensoringHazard>(std::log(0.3), 0.0, 0.0),
                             1e-6);
    auto d2 = oracle_bias_diagnostic(sc, 0.0, flat_cens, *truth, *truth, 50, 5);
    CHECK(d2.mean == 0.0);
    CHECK(d2.se == 0.0);

    CHECK_THROWS_AS(oracle_bias_diagnostic(sc, 0.0, oracle_cens, *truth, *truth, 0, 5),
                    InvalidArgument);
    CHECK_THROWS_AS(
        oracle_bias_diagnostic(sc, 0.0, oracle_cens, *truth, *truth, 10, 5, 0.0),
        InvalidArgument);
}

TEST_CASE("bias diagnostic flags a doubly misspecified pair") {
    ScenarioConfig sc;
    auto truth = tables_near(sc, -0.5, 0.5);
    auto wrong_outcome = zero_tables(sc, -0.5, 0.5);
    // At w = 0 the true censoring rate is 0.2 * exp(0.6); this one is flat 0.3.
    CensoringModel flat_cens(std::make_shared<ParametricCensoringHazard>(std::log(0.3), 0.0, 0.0),
                             1e-6);

    auto d = oracle_bias_diagnostic(sc, 0.0, flat_cens, *wrong_outcome, *truth, 2000, 17);
    CHECK(d.se > 0.0);
    CHECK(std::abs(d.mean) > 3.0 * d.se);
}
