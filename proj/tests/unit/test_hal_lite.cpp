#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/hal_lite.hpp"
#include "core/scenario.hpp"
#include "core/simulate.hpp"
#include "helpers.hpp"

using namespace drcut;
using drcut::testing::make_subject;

namespace {

// Four subjects covering every event/exposure pattern the extractor handles:
// ill then dead, censored healthy, dead from health, censored while ill.
std::vector<ObservedSubject> crafted() {
    std::vector<ObservedSubject> out;
    out.push_back(make_subject(1, 0.5, {{0.0, 1}, {1.0, 2}, {3.0, 3}}, 5.0, false));
    out.push_back(make_subject(2, -1.0, {{0.0, 1}}, 2.0, true));
    out.push_back(make_subject(3, 2.0, {{0.0, 1}, {1.5, 3}}, 5.0, false));
    out.push_back(make_subject(4, 1.0, {{0.0, 1}, {0.5, 2}}, 2.5, true));
    return out;
}

std::vector<ObservedSubject> sim_cohort(const ScenarioConfig& sc, long n, std::uint64_t seed) {
    return observe_cohort(simulate_cohort(sc, n, seed, 1), sc.eta);
}

}  // namespace

TEST_CASE("risk extraction splits each target into the right events and exposure") {
    auto data = crafted();

    auto cens = extract_risk(data, HalTarget::kCensoring);
    REQUIRE(cens.size() == 4);
    // Healthy-time exposure for the (t, w) targets.
    CHECK(cens[0].segments == std::vector<std::array<double, 3>>{{0.0, 1.0, 0.0}});
    CHECK(cens[1].segments == std::vector<std::array<double, 3>>{{0.0, 2.0, 0.0}});
    CHECK(cens[2].segments == std::vector<std::array<double, 3>>{{0.0, 1.5, 0.0}});
    CHECK(cens[3].segments == std::vector<std::array<double, 3>>{{0.0, 0.5, 0.0}});
    // Only the subject censored while still healthy contributes an event.
    CHECK(cens[0].events.empty());
    CHECK(cens[1].events == std::vector<std::array<double, 2>>{{2.0, 0.0}});
    CHECK(cens[2].events.empty());
    CHECK(cens[3].events.empty());
    CHECK(cens[1].w == -1.0);

    auto ill = extract_risk(data, HalTarget::kIllness);
    CHECK(ill[0].events == std::vector<std::array<double, 2>>{{1.0, 0.0}});
    CHECK(ill[1].events.empty());
    CHECK(ill[2].events.empty());
    CHECK(ill[3].events == std::vector<std::array<double, 2>>{{0.5, 0.0}});
    CHECK(ill[0].segments == cens[0].segments);

    auto d13 = extract_risk(data, HalTarget::kDeathFromHealth);
    CHECK(d13[0].events.empty());
    CHECK(d13[2].events == std::vector<std::array<double, 2>>{{1.5, 0.0}});

    // Illness-state exposure carries the entry time for the duration margin.
    auto d23 = extract_risk(data, HalTarget::kDeathFromIllness);
    CHECK(d23[0].segments == std::vector<std::array<double, 3>>{{1.0, 3.0, 1.0}});
    CHECK(d23[0].events == std::vector<std::array<double, 2>>{{3.0, 1.0}});
    CHECK(d23[1].segments.empty());
    CHECK(d23[2].segments.empty());
    CHECK(d23[3].segments == std::vector<std::array<double, 3>>{{0.5, 2.5, 0.5}});
    CHECK(d23[3].events.empty());
}

TEST_CASE("constant hazard fit is the occurrence over exposure ratio") {
    auto data = crafted();
    // State-1 exposure 1 + 2 + 1.5 + 0.5 = 5, state-2 exposure 2 + 2 = 4.
    auto ill = fit_constant_hazard(data, HalTarget::kIllness);
    CHECK(ill->rate(0.7, 0.0, 0.0) == doctest::Approx(2.0 / 5.0).epsilon(1e-14));
    CHECK(ill->active_state() == 1);

    auto d13 = fit_constant_hazard(data, HalTarget::kDeathFromHealth);
    CHECK(d13->rate(0.0, 0.0, 0.0) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));

    auto d23 = fit_constant_hazard(data, HalTarget::kDeathFromIllness);
    CHECK(d23->rate(2.0, 1.0, 0.0) == doctest::Approx(1.0 / 4.0).epsilon(1e-14));
    CHECK(d23->active_state() == 2);

    auto all = fit_constant_transitions(data);
    CHECK(all.m12->rate(0.0, 0.0, 0.0) == ill->rate(0.0, 0.0, 0.0));
    CHECK(all.m13->rate(0.0, 0.0, 0.0) == d13->rate(0.0, 0.0, 0.0));
    CHECK(all.m23->rate(0.0, 0.0, 0.0) == d23->rate(0.0, 0.0, 0.0));

    // No subject ever enters state 2: no exposure for the 2 -> 3 target.
    std::vector<ObservedSubject> healthy;
    healthy.push_back(make_subject(1, 0.0, {{0.0, 1}}, 3.0, true));
    CHECK_THROWS_AS(fit_constant_hazard(healthy, HalTarget::kDeathFromIllness),
                    InvalidArgument);
}

TEST_CASE("intercept-only spline fit reduces to the constant hazard") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 500, 77);

    HalConfig cfg;
    cfg.knots_per_margin = 0;
    cfg.n_lambda = 1;
    auto fit = fit_hal_hazard(data, HalTarget::kIllness, cfg);
    auto constant = fit_constant_hazard(data, HalTarget::kIllness);

    CHECK(fit.nonzero == 0);
    CHECK(fit.lambda_path == std::vector<double>{0.0});
    CHECK(fit.cv_loss.empty());
    CHECK(fit.hazard->active_state() == 1);
    for (double t : {0.3, 2.0, 4.5})
        for (double w : {-3.0, 0.0, 3.0})
            CHECK(fit.hazard->rate(t, 0.0, w) ==
                  doctest::Approx(constant->rate(t, 0.0, w)).epsilon(1e-14));
    // A single cell has no interior breakpoints.
    std::vector<double> bps;
    fit.hazard->time_breakpoints(0.0, 5.0, 0.0, 0.0, bps);
    CHECK(bps.empty());
}

TEST_CASE("lambda path descends geometrically and the pick matches the loss") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 800, 31);

    HalConfig cfg;
    cfg.knots_per_margin = 4;
    cfg.n_lambda = 12;
    cfg.cv_folds = 3;
    auto fit = fit_hal_hazard(data, HalTarget::kCensoring, cfg);

    REQUIRE(fit.lambda_path.size() == 12);
    for (std::size_t i = 1; i < fit.lambda_path.size(); ++i)
        CHECK(fit.lambda_path[i] < fit.lambda_path[i - 1]);
    // Endpoints of the geometric grid.
    CHECK(fit.lambda_path.back() ==
          doctest::Approx(fit.lambda_path.front() * cfg.lambda_min_ratio).epsilon(1e-12));

    REQUIRE(!fit.cv_loss.empty());
    CHECK(fit.cv_loss.size() <= fit.lambda_path.size());
    auto best = std::min_element(fit.cv_loss.begin(), fit.cv_loss.end());
    auto chosen = static_cast<std::size_t>(best - fit.cv_loss.begin());
    CHECK(fit.lambda == fit.lambda_path[chosen]);
    for (double l : fit.cv_loss) CHECK(std::isfinite(l));

    // The final full-data refit walks the path down to the chosen lambda;
    // within each lambda the penalized objective never increases.
    REQUIRE(!fit.objective_trace.empty());
    CHECK(fit.objective_trace.back().first == static_cast<int>(chosen));
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        const auto& [tag_prev, obj_prev] = fit.objective_trace[i - 1];
        const auto& [tag, obj] = fit.objective_trace[i];
        CHECK(tag >= tag_prev);
        if (tag == tag_prev)
            CHECK(obj <= obj_prev + 1e-12 * std::max(1.0, std::abs(obj_prev)));
    }
}

TEST_CASE("spline hazard fit is deterministic") {
    ScenarioConfig sc;
    auto data = sim_cohort(sc, 600, 55);

    HalConfig cfg;
    cfg.knots_per_margin = 3;
    cfg.n_lambda = 8;
    cfg.cv_folds = 3;
    auto a = fit_hal_hazard(data, HalTarget::kIllness, cfg);
    auto b = fit_hal_hazard(data, HalTarget::kIllness, cfg);
    CHECK(a.lambda == b.lambda);
    CHECK(a.nonzero == b.nonzero);
    CHECK(a.cv_loss == b.cv_loss);
    for (double t : {0.25, 1.0, 2.6, 4.1})
        for (double w : {-3.5, -1.0, 0.5, 3.5})
            CHECK(a.hazard->rate(t, 0.0, w) == b.hazard->rate(t, 0.0, w));
}

TEST_CASE("spline censoring fit tracks the banded censoring hazard") {
    ScenarioConfig sc;  // gamma = 0.2 * exp(0.6 * 1{-2 <= w < 2}), constant in t
    auto data = sim_cohort(sc, 8000, 40);
    auto gamma = oracle_censoring(sc);

    HalConfig cfg;
    cfg.knots_per_margin = 8;
    auto fit = fit_hal_hazard(data, HalTarget::kCensoring, cfg);
    CHECK(fit.hazard->active_state() == 1);

    // Survival of a healthy subject to t, fitted against truth.
    double worst = 0.0;
    for (double w : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
        for (double t : {1.0, 2.5, 4.0}) {
            double s_hat = std::exp(-fit.hazard->cumulative(0.0, t, 0.0, w));
            double s_true = std::exp(-gamma->cumulative(0.0, t, 0.0, w));
            worst = std::max(worst, std::abs(s_hat - s_true));
        }
    }
    CHECK(worst < 0.06);

    // The band contrast survives the penalty: inside-band rate clearly above
    // the outside-band rate (truth 0.364 vs 0.2).
    double inside = fit.hazard->rate(2.0, 0.0, 0.0);
    double outside = fit.hazard->rate(2.0, 0.0, 3.0);
    CHECK(inside - outside > 0.05);
}

TEST_CASE("spline hazard fit rejects unusable inputs") {
    CHECK_THROWS_AS(fit_hal_risk({}, false, 1, {}), InvalidArgument);

    // Nobody censored: the censoring target has no events.
    ScenarioConfig sc;
    sc.gamma.scale = 0.0;
    auto data = sim_cohort(sc, 150, 5);
    try {
        fit_hal_hazard(data, HalTarget::kCensoring, {});
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("no events") != std::string::npos);
    }
}
