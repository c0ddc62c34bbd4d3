#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "core/hazard.hpp"
#include "core/scenario.hpp"

using namespace drcut;

namespace {

// Independent check of the exact `cumulative` members: composite Simpson on
// panels split at the model's own breakpoints. On the smooth exponential
// pieces used here the panel width makes this accurate to ~1e-12.
double simpson_cumulative(const HazardModel& h, double t0, double t1, double entry, double w) {
    std::vector<double> breaks;
    h.time_breakpoints(t0, t1, entry, w, breaks);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> pts{t0};
    for (double b : breaks)
        if (b > pts.back() + 1e-12 && b < t1 - 1e-12) pts.push_back(b);
    pts.push_back(t1);

    double total = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        double a = pts[p], b = pts[p + 1];
        auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / 1e-3)));
        double dx = (b - a) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            double x0 = a + static_cast<double>(k) * dx;
            double x1 = k + 1 == n ? b : x0 + dx;
            double xm = 0.5 * (x0 + x1);
            // Evaluate piece endpoints just inside so a discontinuity at a
            // breakpoint cannot leak across.
            double f0 = h.rate(k == 0 ? std::nextafter(x0, x1) : x0, entry, w);
            double f1 = h.rate(k + 1 == n ? std::nextafter(x1, x0) : x1, entry, w);
            total += (x1 - x0) / 6.0 * (f0 + 4.0 * h.rate(xm, entry, w) + f1);
        }
    }
    return total;
}

void check_cumulative_matches_quadrature(const HazardModel& h, double entry, double w,
                                         std::mt19937& gen) {
    std::uniform_real_distribution<double> u(entry, entry + 5.0);
    for (int rep = 0; rep < 8; ++rep) {
        double a = u(gen), b = u(gen);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-6) continue;
        double exact = h.cumulative(a, b, entry, w);
        double quad = simpson_cumulative(h, a, b, entry, w);
        CHECK(exact == doctest::Approx(quad).epsilon(1e-9));
    }
}

}  // namespace

TEST_CASE("zero and constant hazards") {
    ZeroHazard z(2);
    CHECK(z.rate(1.0, 0.0, 0.0) == 0.0);
    CHECK(z.cumulative(0.0, 10.0, 0.0, 0.0) == 0.0);
    CHECK(z.active_state() == 2);
    CHECK(z.duration_only());

    ConstantHazard c(0.35, 1);
    CHECK(c.rate(2.0, 0.0, -1.0) == 0.35);
    CHECK(c.level() == 0.35);
    CHECK(c.cumulative(1.0, 4.0, 0.0, 0.0) == doctest::Approx(1.05).epsilon(1e-15));
    CHECK(c.active_state() == 1);
}

TEST_CASE("censoring hazard has the banded closed form") {
    ScenarioConfig s;
    OracleGammaHazard g(s.gamma);
    CHECK(g.active_state() == 1);
    CHECK(g.duration_only());
    CHECK(g.rate(0.7, 0.0, 3.0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(g.rate(0.7, 0.0, 0.0) == doctest::Approx(0.2 * std::exp(0.6)).epsilon(1e-12));
    // Two healthy years off the band: survival exp(-0.4).
    double cum = g.cumulative(0.0, 2.0, 0.0, 3.0);
    CHECK(cum == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(std::exp(-cum) == doctest::Approx(0.67032).epsilon(1e-4));
}

TEST_CASE("illness onset hazard splits at the late-time knot") {
    ScenarioConfig s;
    OracleMu12Hazard m(s.mu12);
    const double w = -1.7;
    double early = s.mu12_rate(1.0, w);
    double late = s.mu12_rate(4.0, w);
    CHECK(late == doctest::Approx(early * std::exp(0.15)).epsilon(1e-12));
    CHECK(m.rate(2.49, 0.0, w) == doctest::Approx(early).epsilon(1e-12));
    CHECK(m.rate(2.51, 0.0, w) == doctest::Approx(late).epsilon(1e-12));

    // Piecewise-constant integral by hand across the knot.
    CHECK(m.cumulative(1.0, 4.0, 0.0, w) ==
          doctest::Approx(1.5 * early + 1.5 * late).epsilon(1e-12));

    std::vector<double> br;
    m.time_breakpoints(0.0, 5.0, 0.0, w, br);
    REQUIRE(br.size() == 1);
    CHECK(br[0] == doctest::Approx(2.5).epsilon(1e-15));
    br.clear();
    m.time_breakpoints(0.0, 2.0, 0.0, w, br);
    CHECK(br.empty());
}

TEST_CASE("healthy-death hazard integrates its exponential trend exactly") {
    ScenarioConfig s;
    OracleMu13Hazard m(s.mu13);
    const double w = 0.0;
    CHECK(m.rate(2.0, 0.0, w) == doctest::Approx(0.1 * std::exp(0.1)).epsilon(1e-12));
    // int_0^5 0.1 exp(0.05 t) dt = 2 (e^0.25 - 1).
    CHECK(m.cumulative(0.0, 5.0, 0.0, w) ==
          doctest::Approx(2.0 * std::expm1(0.25)).epsilon(1e-12));
}

TEST_CASE("exit-from-illness hazard caps duration and covariate") {
    ScenarioConfig s;
    OracleMu23Hazard m(s.mu23);
    CHECK(m.active_state() == 2);
    CHECK(m.duration_only());
    const double entry = 1.0;
    CHECK(m.rate(entry + 4.0, entry, 1.0) ==
          doctest::Approx(m.rate(entry + 3.0, entry, 1.0)).epsilon(1e-12));
    CHECK(m.rate(entry + 1.0, entry, 3.7) ==
          doctest::Approx(m.rate(entry + 1.0, entry, 3.0)).epsilon(1e-12));
    CHECK(m.rate(entry + 1.5, entry, -0.3) ==
          doctest::Approx(s.mu23_rate(1.5, -0.3)).epsilon(1e-12));
    // Once the duration cap binds the rate is constant, so the tail integral
    // is linear in elapsed time.
    double r = m.rate(entry + 3.5, entry, 0.5);
    CHECK(m.cumulative(entry + 3.0, entry + 4.5, entry, 0.5) ==
          doctest::Approx(1.5 * r).epsilon(1e-10));
}

TEST_CASE("parametric censoring hazard closed forms") {
    ParametricCensoringHazard h(-1.0, 0.2, -0.1);
    CHECK(h.active_state() == 1);
    CHECK(h.b0() == -1.0);
    CHECK(h.b1() == 0.2);
    CHECK(h.b2() == -0.1);
    double w = 1.5;
    CHECK(h.rate(2.0, 0.0, w) == doctest::Approx(std::exp(-1.0 + 0.4 - 0.15)).epsilon(1e-12));
    // exp(b0 + b2 w) (e^{b1 t1} - e^{b1 t0}) / b1.
    double expect = std::exp(-1.0 - 0.15) * (std::exp(0.2 * 3.0) - std::exp(0.2 * 1.0)) / 0.2;
    CHECK(h.cumulative(1.0, 3.0, 0.0, w) == doctest::Approx(expect).epsilon(1e-12));

    ParametricCensoringHazard flat(-1.0, 0.0, -0.1);
    CHECK(flat.cumulative(1.0, 3.0, 0.0, w) ==
          doctest::Approx(2.0 * std::exp(-1.15)).epsilon(1e-12));
}

TEST_CASE("piecewise hazard places cells in time and covariate") {
    // t cells (-inf,1), [1,2), [2,inf); w cells (-inf,0), [0,inf).
    PiecewiseHazard h({1.0, 2.0}, {}, {0.0},
                      {std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4),
                       std::log(0.5), std::log(0.6)},
                      1);
    CHECK(!h.duration_only());
    CHECK(h.rate(0.5, 0.0, -1.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(h.rate(0.5, 0.0, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(h.rate(1.5, 0.0, -1.0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(h.rate(1.5, 0.0, 1.0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(h.rate(2.5, 0.0, -1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(h.rate(2.5, 0.0, 0.0) == doctest::Approx(0.6).epsilon(1e-12));
    // Knot membership: t = 1 belongs to the second cell, w = 0 to the upper.
    CHECK(h.rate(1.0, 0.0, -1.0) == doctest::Approx(0.3).epsilon(1e-12));

    CHECK(h.cumulative(0.5, 2.5, 0.0, -1.0) ==
          doctest::Approx(0.5 * 0.1 + 1.0 * 0.3 + 0.5 * 0.5).epsilon(1e-12));

    std::vector<double> br;
    h.time_breakpoints(0.5, 2.5, 0.0, -1.0, br);
    std::sort(br.begin(), br.end());
    REQUIRE(br.size() == 2);
    CHECK(br[0] == 1.0);
    CHECK(br[1] == 2.0);
}

TEST_CASE("piecewise hazard duration cells move with the entry time") {
    PiecewiseHazard h({}, {1.0}, {}, {std::log(0.3), std::log(0.7)}, 2);
    CHECK(h.duration_only());
    double entry = 2.0;
    CHECK(h.rate(entry + 0.5, entry, 0.0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(h.rate(entry + 1.5, entry, 0.0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(h.cumulative(entry, entry + 2.0, entry, 0.0) ==
          doctest::Approx(0.3 + 0.7).epsilon(1e-12));
    // The breakpoint sits at entry + knot.
    std::vector<double> br;
    h.time_breakpoints(entry, entry + 2.0, entry, 0.0, br);
    REQUIRE(br.size() == 1);
    CHECK(br[0] == doctest::Approx(entry + 1.0).epsilon(1e-15));
}

TEST_CASE("every model's cumulative equals quadrature of its rate") {
    ScenarioConfig s;
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> uw(-4.0, 4.0);

    OracleGammaHazard g(s.gamma);
    OracleMu12Hazard m12(s.mu12);
    OracleMu13Hazard m13(s.mu13);
    OracleMu23Hazard m23(s.mu23);
    ParametricCensoringHazard pc(-1.2, 0.15, 0.08);
    PiecewiseHazard pw({0.8, 2.2, 3.9}, {0.6, 1.4}, {-1.0, 1.0},
                       [] {
                           std::vector<double> lr;
                           std::mt19937 g2(7);
                           std::uniform_real_distribution<double> u(-2.0, 0.5);
                           for (int i = 0; i < 4 * 3 * 3; ++i) lr.push_back(u(g2));
                           return lr;
                       }(),
                       1);

    for (int rep = 0; rep < 5; ++rep) {
        double w = uw(gen);
        check_cumulative_matches_quadrature(g, 0.0, w, gen);
        check_cumulative_matches_quadrature(m12, 0.0, w, gen);
        check_cumulative_matches_quadrature(m13, 0.0, w, gen);
        check_cumulative_matches_quadrature(m23, 1.3, w, gen);
        check_cumulative_matches_quadrature(pc, 0.0, w, gen);
        check_cumulative_matches_quadrature(pw, 0.9, w, gen);
    }
}

TEST_CASE("oracle bundles wire the scenario hazards to the right states") {
    ScenarioConfig s;
    auto cens = oracle_censoring(s);
    CHECK(cens->active_state() == 1);
    CHECK(cens->rate(1.0, 0.0, 0.0) == doctest::Approx(s.gamma_rate(0.0)).epsilon(1e-12));

    auto tr = oracle_transitions(s);
    CHECK(tr.m12->active_state() == 1);
    CHECK(tr.m13->active_state() == 1);
    CHECK(tr.m23->active_state() == 2);
    CHECK(tr.m12->rate(1.0, 0.0, 0.7) == doctest::Approx(s.mu12_rate(1.0, 0.7)).epsilon(1e-12));
    CHECK(tr.m13->rate(1.0, 0.0, 0.7) == doctest::Approx(s.mu13_rate(1.0, 0.7)).epsilon(1e-12));
    CHECK(tr.m23->rate(2.0, 1.0, 0.7) == doctest::Approx(s.mu23_rate(1.0, 0.7)).epsilon(1e-12));

    auto zt = zero_transitions();
    CHECK(zt.m12->rate(1.0, 0.0, 0.0) == 0.0);
    CHECK(zt.m13->rate(1.0, 0.0, 0.0) == 0.0);
    CHECK(zt.m23->rate(1.0, 0.0, 0.0) == 0.0);
}
