#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/hazard.hpp"
#include "core/trajectory.hpp"

namespace drcut {

// Grid layout for the backward value solves. t_step is the RK4 step; the
// general two-argument table stores V2 on a duration grid of step
// t_step * store_stride crossed with an entry-time grid of step s_step.
// All steps must divide eta.
struct ValueGridSpec {
    double eta = 5.0;
    double t_step = 0.005;
    double s_step = 0.05;
    int store_stride = 4;
    double w_lo = -4.0;
    double w_hi = 4.0;
    double w_step = 0.1;
};

// Conditional-expectation tables for the remaining-illness-time outcome:
//   V1(t, w)    = expected future illness time given healthy at t,
//   V2(t, s, w) = expected future illness time given ill at t since s,
// solved backward from eta by classic fourth-order Runge-Kutta:
//   dV1/dt = (m12 + m13) V1 - m12 * V2(t, t, w),       V1(eta) = 0,
//   dV2/dt = -1 + m23(t; s) V2,                        V2(eta, s) = 0.
// The conditional mean of the outcome given a path's present is then the
// accrued illness time plus V_state.
//
// When m23 depends on time only through duration (every model here except
// the fitted spline hazard), V2 collapses to one cumulative pair
//   S(r) = exp(-int_0^r m23), A(r) = int_0^r S,
//   V2(t, s, w) = (A(eta - s) - A(t - s)) / S(t - s),
// which the solver uses: it is exact on the diagonal V2(t, t, w) = A(eta - t)
// that drives the V1 equation. Otherwise V2 is swept backward per entry-time
// grid point and interpolated bilinearly.
//
// Tables hold one slice per w knot (a regular grid plus caller-supplied extra
// knots, solved exactly) and interpolate linearly between knots.
class ValueTables {
public:
    static std::shared_ptr<const ValueTables> build(const TransitionModels& transitions,
                                                    const ValueGridSpec& grid,
                                                    const std::vector<double>& extra_w = {},
                                                    int workers = 0);

    double v1(double t, double w) const;
    double v2(double t, double s, double w) const;
    double marginal(double w) const { return v1(0.0, w); }

    // E[outcome | W = w, in `state` since `entry` at time u, with `accrued`
    // illness time so far].
    double conditional_mean(double w, int state, double entry, double accrued, double u) const;
    // Same, reading the left-limit state of an observed path at u.
    double conditional_mean(const ObservedSubject& subject, double u) const;

    // Pre-resolved w lookup for hot loops over one subject.
    class WQuery {
    public:
        double v1(double t) const;
        double v2(double t, double s) const;
        double conditional_mean(int state, double entry, double accrued, double u) const;

    private:
        friend class ValueTables;
        const ValueTables* tables_ = nullptr;
        std::size_t lo_ = 0, hi_ = 0;
        double frac_ = 0.0;
    };
    WQuery locate_w(double w) const;

    const ValueGridSpec& grid() const { return grid_; }
    double eta() const { return grid_.eta; }
    const std::vector<double>& w_knots() const { return w_knots_; }

    void save(const std::string& path) const;
    static std::shared_ptr<const ValueTables> load(const std::string& path);
    void export_csv(const std::string& path) const;

private:
    struct Slice {
        bool dur_only = false;
        std::vector<double> v1;      // t grid
        std::vector<double> diag;    // V2(s, s) on the s grid (general case)
        std::vector<double> v2;      // (duration-major) x (entry) grid, general case
        std::vector<double> cumhaz;  // L on the half-step grid, duration-only case
        std::vector<double> acc;     // A on the half-step grid, duration-only case
    };

    ValueGridSpec grid_;
    std::vector<double> w_knots_;
    std::vector<Slice> slices_;
    std::size_t nt_ = 0;  // #t intervals
    std::size_t ns_ = 0;  // #entry intervals
    std::size_t nd_ = 0;  // #stored duration intervals

    ValueTables() = default;
    static void validate_grid(const ValueGridSpec& grid);
    void solve_slice(const TransitionModels& transitions, double w, Slice& out) const;
    double slice_v1(const Slice& s, double t) const;
    double slice_v2(const Slice& s, double t, double entry) const;
};

using ValueTablesPtr = std::shared_ptr<const ValueTables>;

}  // namespace drcut
