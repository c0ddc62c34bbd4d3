#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/smoother.hpp"

using namespace drcut;

namespace {

std::vector<SmoothPoint> linear_points(const std::vector<double>& ws, double a, double b,
                                       double w0) {
    std::vector<SmoothPoint> pts;
    pts.reserve(ws.size());
    for (double w : ws) pts.push_back({w, a + b * (w - w0)});
    return pts;
}

}  // namespace

TEST_CASE("kernel names round trip") {
    CHECK(std::string(kernel_name(Kernel::kEpanechnikov)) == "epanechnikov");
    CHECK(std::string(kernel_name(Kernel::kTriangular)) == "triangular");
    CHECK(kernel_from_name("epanechnikov") == Kernel::kEpanechnikov);
    CHECK(kernel_from_name("triangular") == Kernel::kTriangular);
    CHECK_THROWS_AS(kernel_from_name("uniform"), InvalidArgument);
}

TEST_CASE("bandwidth rule follows the undersmoothing exponent") {
    CHECK(bandwidth_rule(32.0, 1.0) ==
          doctest::Approx(std::pow(32.0, -1.0 / 4.5)).epsilon(1e-14));
    CHECK(bandwidth_rule(1000.0, 2.5) ==
          doctest::Approx(2.5 * std::pow(1000.0, -1.0 / 4.5)).epsilon(1e-14));
    // Doubling c doubles h; scaling n by 2^4.5 halves h.
    CHECK(bandwidth_rule(50.0, 2.0) ==
          doctest::Approx(2.0 * bandwidth_rule(50.0, 1.0)).epsilon(1e-14));
    CHECK(bandwidth_rule(50.0 * std::pow(2.0, 4.5), 1.0) ==
          doctest::Approx(0.5 * bandwidth_rule(50.0, 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(bandwidth_rule(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(bandwidth_rule(100.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(bandwidth_rule(100.0, -2.0), InvalidArgument);
}

TEST_CASE("normal quantile hits the textbook values") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035).epsilon(1e-9));
    CHECK(normal_quantile(0.025) == doctest::Approx(-normal_quantile(0.975)).epsilon(1e-12));
    CHECK_THROWS_AS(normal_quantile(0.0), InvalidArgument);
    CHECK_THROWS_AS(normal_quantile(1.0), InvalidArgument);
}

TEST_CASE("local linear fit reproduces lines exactly across random designs") {
    std::mt19937_64 gen(20260819);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_int_distribution<int> nd(5, 60);

    for (int rep = 0; rep < 100; ++rep) {
        int n = nd(gen);
        double w0 = 2.0 * unif(gen);
        double h = 0.3 + 0.7 * std::abs(unif(gen));
        double a = 3.0 * unif(gen);
        double b = 3.0 * unif(gen);
        Kernel kernel = rep % 2 == 0 ? Kernel::kEpanechnikov : Kernel::kTriangular;

        std::vector<double> ws;
        for (int i = 0; i < n; ++i) ws.push_back(w0 + h * unif(gen));
        // Guarantee two distinct in-window points so the slope is identified.
        ws.push_back(w0 - 0.4 * h);
        ws.push_back(w0 + 0.4 * h);

        auto pts = linear_points(ws, a, b, w0);
        auto fit = local_linear_fit(pts, w0, h, kernel);

        CHECK(std::abs(fit.estimate - a) < 1e-10);
        CHECK(std::abs(fit.slope - b) < 1e-9);
        CHECK(fit.se < 1e-9);
        CHECK_FALSE(fit.degenerate);
        CHECK(fit.h == h);
        CHECK(fit.w0 == w0);

        // Hat-row identities: weights sum to one, kill the linear term, and
        // reproduce the estimate.
        REQUIRE(fit.weights.size() == pts.size());
        double sum = 0.0, lin = 0.0, dot = 0.0, sum_abs = 0.0;
        std::size_t in_window = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sum += fit.weights[i];
            lin += fit.weights[i] * (pts[i].w - w0);
            dot += fit.weights[i] * pts[i].y;
            sum_abs += std::abs(fit.weights[i]);
            double u = (pts[i].w - w0) / h;
            if (std::abs(u) < 1.0) ++in_window;
            else CHECK(fit.weights[i] == 0.0);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(std::abs(lin) < 1e-12 * std::max(1.0, h));
        CHECK(std::abs(dot - fit.estimate) < 1e-12 * std::max(1.0, std::abs(fit.estimate)));
        CHECK(fit.sum_abs_weights == doctest::Approx(sum_abs).epsilon(1e-12));
        CHECK(fit.n_window == in_window);
    }
}

TEST_CASE("standard error matches the sandwich identity on noisy data") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<SmoothPoint> pts;
    for (int i = 0; i < 200; ++i) {
        double w = -1.0 + 2.0 * static_cast<double>(i) / 199.0;
        pts.push_back({w, std::sin(w) + noise(gen)});
    }
    double w0 = 0.2, h = 0.5;
    auto fit = local_linear_fit(pts, w0, h);

    double ss = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double r = pts[i].y - (fit.estimate + fit.slope * (pts[i].w - w0));
        ss += fit.weights[i] * fit.weights[i] * r * r;
    }
    CHECK(fit.se == doctest::Approx(std::sqrt(ss)).epsilon(1e-12));
    CHECK(fit.se > 0.0);
}

TEST_CASE("smoother weights are the y-independent part of the fit") {
    std::vector<SmoothPoint> pts{{-0.5, 2.0}, {-0.1, 1.0}, {0.3, -1.0}, {0.8, 0.5}};
    std::vector<double> ws;
    for (const auto& p : pts) ws.push_back(p.w);
    for (auto side : {WindowSide::kBoth, WindowSide::kRight, WindowSide::kLeft}) {
        auto fit = local_linear_fit(pts, 0.05, 0.9, Kernel::kTriangular, side, true);
        auto wt = smoother_weights(ws, 0.05, 0.9, Kernel::kTriangular, side, true);
        REQUIRE(wt.size() == fit.weights.size());
        for (std::size_t i = 0; i < wt.size(); ++i) CHECK(wt[i] == fit.weights[i]);
    }
}

TEST_CASE("one-sided windows split boundary points by ownership") {
    std::vector<SmoothPoint> pts{{-0.6, 1.0}, {-0.2, 2.0}, {0.0, 3.0}, {0.0, 4.0},
                                 {0.25, 5.0}, {0.7, 6.0}};
    double h = 1.0;

    auto right_in = local_linear_fit(pts, 0.0, h, Kernel::kEpanechnikov,
                                     WindowSide::kRight, true);
    auto right_out = local_linear_fit(pts, 0.0, h, Kernel::kEpanechnikov,
                                      WindowSide::kRight, false);
    CHECK(right_in.n_window == 4);   // both w = 0 points and the two above
    CHECK(right_out.n_window == 2);  // strictly positive side only
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(right_in.weights[i] == 0.0);
        CHECK(right_out.weights[i] == 0.0);
    }

    auto left_in = local_linear_fit(pts, 0.0, h, Kernel::kEpanechnikov,
                                    WindowSide::kLeft, true);
    auto left_out = local_linear_fit(pts, 0.0, h, Kernel::kEpanechnikov,
                                     WindowSide::kLeft, false);
    CHECK(left_in.n_window == 4);
    CHECK(left_out.n_window == 2);

    // Exact linear data on each side is still reproduced exactly.
    auto line = linear_points({0.05, 0.3, 0.55, 0.9}, 1.5, -2.0, 0.0);
    auto f = local_linear_fit(line, 0.0, 1.0, Kernel::kTriangular, WindowSide::kRight, true);
    CHECK(std::abs(f.estimate - 1.5) < 1e-12);
    CHECK(std::abs(f.slope + 2.0) < 1e-12);
}

TEST_CASE("empty smoothing window is a numeric failure") {
    std::vector<SmoothPoint> pts{{5.0, 1.0}, {6.0, 2.0}};
    CHECK_THROWS_AS(local_linear_fit(pts, 0.0, 0.5), NumericError);
    try {
        local_linear_fit(pts, 0.0, 0.5);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("empty window") != std::string::npos);
    }
    // Points exactly at the window edge carry zero kernel weight.
    std::vector<SmoothPoint> edge{{0.5, 1.0}, {-0.5, 2.0}};
    CHECK_THROWS_AS(local_linear_fit(edge, 0.0, 0.5), NumericError);

    CHECK_THROWS_AS(local_linear_fit({}, 0.0, 0.5), NumericError);
    CHECK_THROWS_AS(local_linear_fit(pts, 5.5, 0.0), InvalidArgument);
}

TEST_CASE("degenerate designs fall back to the local constant fit") {
    // All mass at a single w: the slope cannot be identified.
    std::vector<SmoothPoint> pts{{1.0, 2.0}, {1.0, 4.0}, {1.0, 6.0}};
    auto fit = local_linear_fit(pts, 1.0, 0.5);
    CHECK(fit.degenerate);
    CHECK(fit.estimate == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(fit.slope == 0.0);
    double sum = 0.0;
    for (double x : fit.weights) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));

    // A single in-window point gets weight one.
    std::vector<SmoothPoint> single{{0.1, 7.0}, {9.0, 0.0}};
    auto f1 = local_linear_fit(single, 0.0, 0.5);
    CHECK(f1.degenerate);
    CHECK(f1.estimate == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(f1.n_window == 1);
    CHECK(f1.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f1.weights[1] == 0.0);
}
