#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/rdd.hpp"

using namespace drcut;

namespace {

PseudoOutcome po(std::int64_t id, double w, double value) {
    return PseudoOutcome{id, w, PseudoVariant::kDr, value, "", ""};
}

// Paired (y, a) samples with linear sides and jumps at w0.
struct Design {
    std::vector<PseudoOutcome> y, a;
};

Design linear_design(double w0, double y_jump, double a_jump, double y_slope,
                     double a_slope) {
    Design d;
    std::int64_t id = 0;
    for (double dw : {-0.9, -0.6, -0.35, -0.1, 0.08, 0.3, 0.55, 0.85}) {
        double w = w0 + dw;
        double right = dw >= 0.0 ? 1.0 : 0.0;
        d.y.push_back(po(id, w, 1.0 + y_slope * dw + y_jump * right));
        d.a.push_back(po(id, w, 0.1 + a_slope * dw + a_jump * right));
        ++id;
    }
    return d;
}

}  // namespace

TEST_CASE("fuzzy rdd recovers the ratio of jumps on noiseless linear sides") {
    auto d = linear_design(0.0, 0.5, 0.8, 0.3, 0.05);
    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;
    auto res = fuzzy_rdd(d.y, d.a, opt);

    CHECK(std::abs(res.y_plus.estimate - 1.5) < 1e-10);
    CHECK(std::abs(res.y_minus.estimate - 1.0) < 1e-10);
    CHECK(std::abs(res.a_plus.estimate - 0.9) < 1e-10);
    CHECK(std::abs(res.a_minus.estimate - 0.1) < 1e-10);
    CHECK(std::abs(res.tau - 0.625) < 1e-10);
    CHECK(res.se < 1e-10);
    CHECK(res.n_right == 4);
    CHECK(res.n_left == 4);
    CHECK(res.w0 == 0.0);
    CHECK(res.h == 1.0);
}

TEST_CASE("sharp design reduces to the outcome jump and the one-sided fits") {
    std::mt19937_64 gen(13);
    std::normal_distribution<double> noise(0.0, 0.3);
    const double w0 = 0.3;

    std::vector<PseudoOutcome> py, pa;
    std::vector<SmoothPoint> pts;
    std::int64_t id = 0;
    for (double dw : {-0.95, -0.7, -0.45, -0.2, -0.05, 0.0, 0.15, 0.4, 0.65, 0.9}) {
        double w = w0 + dw;
        double y = std::sin(w) + noise(gen);
        py.push_back(po(id, w, y));
        pa.push_back(po(id, w, dw >= 0.0 ? 1.0 : 0.0));
        pts.push_back({w, y});
        ++id;
    }

    RddOptions opt;
    opt.w0 = w0;
    opt.h = 1.0;
    auto res = fuzzy_rdd(py, pa, opt);

    CHECK(res.a_plus.estimate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.a_minus.estimate == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(res.a_plus.se < 1e-12);
    CHECK(res.a_minus.se < 1e-12);

    auto right = local_linear_fit(pts, w0, opt.h, opt.kernel, WindowSide::kRight, true);
    auto left = local_linear_fit(pts, w0, opt.h, opt.kernel, WindowSide::kLeft, false);
    CHECK(res.y_plus.estimate == right.estimate);
    CHECK(res.y_minus.estimate == left.estimate);
    CHECK(res.y_plus.se == right.se);
    CHECK(res.y_minus.se == left.se);
    CHECK(res.tau == doctest::Approx(right.estimate - left.estimate).epsilon(1e-12));
}

TEST_CASE("fuzzy rdd is equivariant under translation and scaling") {
    std::mt19937_64 gen(29);
    std::normal_distribution<double> noise(0.0, 0.2);
    auto d = linear_design(0.0, 0.6, 0.7, -0.4, 0.1);
    for (auto& p : d.y) p.value += noise(gen);
    for (auto& p : d.a) p.value += 0.1 * noise(gen);

    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;
    auto base = fuzzy_rdd(d.y, d.a, opt);

    // Shift the running variable.
    const double shift = 2.5;
    Design moved = d;
    for (auto& p : moved.y) p.w += shift;
    for (auto& p : moved.a) p.w += shift;
    RddOptions opt2 = opt;
    opt2.w0 = shift;
    auto res2 = fuzzy_rdd(moved.y, moved.a, opt2);
    CHECK(res2.tau == doctest::Approx(base.tau).epsilon(1e-12));
    CHECK(res2.se == doctest::Approx(base.se).epsilon(1e-12));

    // Doubling the outcomes doubles tau and se exactly.
    Design scaled = d;
    for (auto& p : scaled.y) p.value *= 2.0;
    auto res3 = fuzzy_rdd(scaled.y, scaled.a, opt);
    CHECK(res3.tau == 2.0 * base.tau);
    CHECK(res3.se == 2.0 * base.se);
}

TEST_CASE("delta-method standard error matches its exposed ingredients") {
    std::mt19937_64 gen(4242);
    std::normal_distribution<double> noise(0.0, 0.4);
    auto d = linear_design(0.0, 0.8, 0.6, 0.2, -0.05);
    for (auto& p : d.y) p.value += noise(gen);
    for (auto& p : d.a) p.value += 0.2 * noise(gen);

    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;
    auto r = fuzzy_rdd(d.y, d.a, opt);

    double denom = r.a_plus.estimate - r.a_minus.estimate;
    CHECK(r.tau == doctest::Approx((r.y_plus.estimate - r.y_minus.estimate) / denom)
                       .epsilon(1e-14));
    double vy = r.y_plus.se * r.y_plus.se + r.y_minus.se * r.y_minus.se;
    double va = r.a_plus.se * r.a_plus.se + r.a_minus.se * r.a_minus.se;
    double var =
        (vy + r.tau * r.tau * va - 2.0 * r.tau * (r.cov_plus + r.cov_minus)) /
        (denom * denom);
    CHECK(r.se == doctest::Approx(std::sqrt(std::max(var, 0.0))).epsilon(1e-12));
    CHECK(r.se > 0.0);
}

TEST_CASE("vanishing treatment jump is a numeric failure") {
    auto d = linear_design(0.0, 0.5, 0.0, 0.3, 0.05);  // no jump in a
    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;
    try {
        fuzzy_rdd(d.y, d.a, opt);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("no detectable discontinuity") != std::string::npos);
    }

    RddOptions bad = opt;
    bad.denom_floor = -0.1;
    CHECK_THROWS_AS(fuzzy_rdd(d.y, d.a, bad), InvalidArgument);
}

TEST_CASE("rdd pairs the two lists by subject id") {
    auto d = linear_design(0.0, 0.5, 0.8, 0.3, 0.05);
    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;
    auto base = fuzzy_rdd(d.y, d.a, opt);

    // Shuffled treatment list with the same ids gives the identical answer.
    auto shuffled = d.a;
    std::reverse(shuffled.begin(), shuffled.end());
    auto res = fuzzy_rdd(d.y, shuffled, opt);
    CHECK(res.tau == base.tau);
    CHECK(res.se == base.se);

    auto shorter = d.a;
    shorter.pop_back();
    CHECK_THROWS_AS(fuzzy_rdd(d.y, shorter, opt), InvalidArgument);

    auto wrong_id = d.a;
    wrong_id[2].id = 555;
    CHECK_THROWS_AS(fuzzy_rdd(d.y, wrong_id, opt), InvalidArgument);

    auto wrong_w = d.a;
    wrong_w[3].w += 0.01;
    CHECK_THROWS_AS(fuzzy_rdd(d.y, wrong_w, opt), InvalidArgument);
}

TEST_CASE("boundary ownership moves points at the threshold between sides") {
    std::vector<PseudoOutcome> py, pa;
    std::int64_t id = 0;
    for (double w : {-0.8, -0.4, -0.2, 0.0, 0.0, 0.3, 0.6, 0.9}) {
        py.push_back(po(id, w, w < 0.0 ? 1.0 + w : 2.0 + w));
        pa.push_back(po(id, w, w < 0.0 ? 0.0 : 1.0));
        ++id;
    }
    RddOptions opt;
    opt.w0 = 0.0;
    opt.h = 1.0;

    opt.boundary_on_right = true;
    auto right_owns = fuzzy_rdd(py, pa, opt);
    CHECK(right_owns.n_right == 5);
    CHECK(right_owns.n_left == 3);

    opt.boundary_on_right = false;
    auto left_owns = fuzzy_rdd(py, pa, opt);
    CHECK(left_owns.n_right == 3);
    CHECK(left_owns.n_left == 5);
}

TEST_CASE("bandwidth sensitivity records per-bandwidth failures") {
    auto d = linear_design(0.0, 0.5, 0.8, 0.3, 0.05);
    RddOptions opt;
    opt.w0 = 0.0;

    auto rows = rdd_sensitivity(d.y, d.a, opt, {1e-12, 0.7, 1.0});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].h == 1e-12);
    CHECK_FALSE(rows[0].ok);
    CHECK(!rows[0].error.empty());
    CHECK(rows[1].ok);
    CHECK(rows[2].ok);
    CHECK(rows[1].result.h == 0.7);
    CHECK(std::abs(rows[2].result.tau - 0.625) < 1e-10);

    CHECK_THROWS_AS(rdd_sensitivity(d.y, d.a, opt, {}), InvalidArgument);
}

TEST_CASE("binned means average within right-open bins and skip empty ones") {
    std::vector<PseudoOutcome> pseudo{
        po(0, 0.10, 1.0), po(1, 0.20, 3.0),  // bin [0, 0.25)
        po(2, 0.30, 5.0),                    // bin [0.25, 0.5)
        po(3, 0.90, 7.0),                    // bin [0.75, 1)
        po(4, -0.10, 100.0),                 // below lo: dropped
        po(5, 1.00, 100.0),                  // at hi: dropped (right-open)
    };
    auto bins = binned_means(pseudo, 0.0, 1.0, 0.25);
    REQUIRE(bins.size() == 3);  // bin [0.5, 0.75) is empty and skipped
    CHECK(bins[0].center == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(bins[0].mean == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(bins[0].count == 2);
    CHECK(bins[1].center == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(bins[1].mean == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(bins[2].center == doctest::Approx(0.875).epsilon(1e-14));
    CHECK(bins[2].count == 1);

    // A width that does not divide the range still covers it; the last bin
    // clamps strays from rounding.
    auto odd = binned_means({po(0, 0.99, 4.0)}, 0.0, 1.0, 0.4);
    REQUIRE(odd.size() == 1);
    CHECK(odd[0].center == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(binned_means(pseudo, 0.0, 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(binned_means(pseudo, 1.0, 0.0, 0.5), InvalidArgument);
}
