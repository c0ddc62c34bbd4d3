#include "core/censoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace drcut {

CensoringModel::CensoringModel(HazardPtr hazard, double epsilon)
    : hazard_(std::move(hazard)), epsilon_(epsilon) {
    if (!hazard_) throw InvalidArgument("CensoringModel: null hazard");
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw InvalidArgument("CensoringModel: epsilon must lie in (0, 1)");
}

double CensoringModel::cumulative_along(const std::vector<PathSegment>& segs, double u,
                                        double w) const {
    double total = 0.0;
    for (const auto& seg : segs) {
        if (seg.t0 >= u) break;
        if (seg.state != hazard_->active_state()) continue;
        total += hazard_->cumulative(seg.t0, std::min(seg.t1, u), seg.entry, w);
    }
    return total;
}

double CensoringModel::survival_unclamped(const std::vector<PathSegment>& segs, double u,
                                          double w) const {
    return std::exp(-cumulative_along(segs, u, w));
}

double CensoringModel::survival(const std::vector<PathSegment>& segs, double u, double w) const {
    return std::clamp(survival_unclamped(segs, u, w), epsilon_, 1.0);
}

namespace {

// Moments g_k(b, L) = int_0^L s^k exp(b*s) ds with series branches near b=0.
void exp_moments(double b, double L, double& g0, double& g1, double& g2) {
    double x = b * L;
    if (std::abs(x) < 1e-6) {
        g0 = L * (1.0 + x / 2.0 + x * x / 6.0);
        g1 = L * L / 2.0 * (1.0 + 2.0 * x / 3.0 + x * x / 4.0);
        g2 = L * L * L / 3.0 * (1.0 + 3.0 * x / 4.0 + 3.0 * x * x / 10.0);
        return;
    }
    double ex = std::exp(x);
    g0 = std::expm1(x) / b;
    g1 = (L * ex - g0) / b;
    g2 = (L * L * ex - 2.0 * g1) / b;
}

// Time spent in state 1 under observation, as [0, E]; our paths enter state 1
// only once, but walk the segments anyway.
void state1_exposure(const ObservedSubject& s, std::vector<std::pair<double, double>>& out) {
    out.clear();
    for (const auto& seg : s.segments())
        if (seg.state == 1) out.emplace_back(seg.t0, seg.t1);
}

bool solve3(const double a[9], const double rhs[3], double x[3]) {
    // Gaussian elimination with partial pivoting on a 3x3 system.
    double m[3][4];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m[r][c] = a[3 * r + c];
        m[r][3] = rhs[r];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) return false;
        if (piv != col)
            for (int c = 0; c < 4; ++c) std::swap(m[piv][c], m[col][c]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    for (int r = 0; r < 3; ++r) x[r] = m[r][3] / m[r][r];
    return true;
}

}  // namespace

void parametric_censoring_objective(const std::vector<ObservedSubject>& data, double eta,
                                    const double beta[3], double* loglik, double grad[3],
                                    double hess[9]) {
    (void)eta;
    const double b0 = beta[0], b1 = beta[1], b2 = beta[2];
    double ll = 0.0;
    double g[3] = {0.0, 0.0, 0.0};
    double h[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    std::vector<std::pair<double, double>> exposure;
    for (const auto& s : data) {
        const double w = s.w;
        if (s.censored) {
            ll += b0 + b1 * s.c + b2 * w;
            g[0] += 1.0;
            g[1] += s.c;
            g[2] += w;
        }
        state1_exposure(s, exposure);
        double scale = std::exp(b0 + b2 * w);
        for (const auto& [a, b] : exposure) {
            double g0, g1m, g2m;
            exp_moments(b1, b - a, g0, g1m, g2m);
            double ea = std::exp(b1 * a);
            // I_k = int_a^b t^k exp(b1 t) dt
            double i0 = ea * g0;
            double i1 = ea * (a * g0 + g1m);
            double i2 = ea * (a * a * g0 + 2.0 * a * g1m + g2m);
            ll -= scale * i0;
            g[0] -= scale * i0;
            g[1] -= scale * i1;
            g[2] -= scale * w * i0;
            h[0] -= scale * i0;
            h[1] -= scale * i1;
            h[2] -= scale * w * i0;
            h[4] -= scale * i2;
            h[5] -= scale * w * i1;
            h[8] -= scale * w * w * i0;
        }
    }
    h[3] = h[1];
    h[6] = h[2];
    h[7] = h[5];
    double n = static_cast<double>(data.empty() ? 1 : data.size());
    if (loglik) *loglik = ll / n;
    if (grad)
        for (int i = 0; i < 3; ++i) grad[i] = g[i] / n;
    if (hess)
        for (int i = 0; i < 9; ++i) hess[i] = h[i] / n;
}

ParametricCensoringFit fit_parametric_censoring(const std::vector<ObservedSubject>& data,
                                                double eta) {
    if (data.empty()) throw InvalidArgument("fit_parametric_censoring: empty cohort");

    // Start from the pooled occurrence/exposure rate with no trend.
    double events = 0.0, exposure = 0.0;
    for (const auto& s : data) {
        if (s.censored) events += 1.0;
        for (const auto& seg : s.segments())
            if (seg.state == 1) exposure += seg.t1 - seg.t0;
    }
    if (exposure <= 0.0) throw InvalidArgument("fit_parametric_censoring: no state-1 exposure");
    if (events == 0.0)
        throw InvalidArgument("fit_parametric_censoring: no censoring events to fit");

    double beta[3] = {std::log(events / exposure), 0.0, 0.0};
    double ll, grad[3], hess[9];
    parametric_censoring_objective(data, eta, beta, &ll, grad, hess);

    const int max_iter = 100;
    for (int iter = 1; iter <= max_iter; ++iter) {
        double gnorm = std::max({std::abs(grad[0]), std::abs(grad[1]), std::abs(grad[2])});
        if (gnorm < 1e-8) {
            ParametricCensoringFit fit;
            fit.b0 = beta[0];
            fit.b1 = beta[1];
            fit.b2 = beta[2];
            fit.iterations = iter - 1;
            fit.grad_norm = gnorm;
            fit.loglik = ll;
            return fit;
        }

        double neg_hess[9];
        for (int i = 0; i < 9; ++i) neg_hess[i] = -hess[i];
        double step[3];
        if (!solve3(neg_hess, grad, step))
            throw NumericError("fit_parametric_censoring: singular Hessian");

        // Backtracking on the concave log-likelihood.
        double factor = 1.0;
        for (int half = 0; half < 60; ++half) {
            double cand[3] = {beta[0] + factor * step[0], beta[1] + factor * step[1],
                              beta[2] + factor * step[2]};
            double cand_ll;
            parametric_censoring_objective(data, eta, cand, &cand_ll, grad, hess);
            if (cand_ll >= ll - 1e-14 || factor < 1e-12) {
                beta[0] = cand[0];
                beta[1] = cand[1];
                beta[2] = cand[2];
                ll = cand_ll;
                break;
            }
            factor *= 0.5;
        }
    }
    throw ConvergenceError("fit_parametric_censoring: no convergence in " +
                           std::to_string(max_iter) + " iterations");
}

HazardPtr parametric_censoring_hazard(const ParametricCensoringFit& fit) {
    return std::make_shared<ParametricCensoringHazard>(fit.b0, fit.b1, fit.b2);
}

}  // namespace drcut
