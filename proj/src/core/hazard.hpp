#pragma once

#include <memory>
#include <vector>

#include "core/scenario.hpp"

namespace drcut {

// A (possibly estimated) cause-specific hazard on the illness-death state
// space. `rate` is the raw intensity as a function of calendar time t, the
// entry time into the current state (duration = t - entry), and the baseline
// covariate w; state-activity masking is the caller's job via active_state().
//
// `cumulative` must be the exact integral of `rate` in t: every concrete
// model here is piecewise constant / exponential in t, so survival factors
// need no quadrature. `time_breakpoints` reports where t -> rate is not
// smooth on an interval, so integrators can split there.
class HazardModel {
public:
    explicit HazardModel(int active_state) : active_state_(active_state) {}
    virtual ~HazardModel() = default;

    virtual double rate(double t, double entry, double w) const = 0;
    virtual double cumulative(double t0, double t1, double entry, double w) const = 0;
    virtual void time_breakpoints(double t0, double t1, double entry, double w,
                                  std::vector<double>& out) const;
    // True when rate(t, entry, w) depends on t only through t - entry.
    virtual bool duration_only() const { return false; }

    int active_state() const { return active_state_; }

private:
    int active_state_;
};

using HazardPtr = std::shared_ptr<const HazardModel>;

class ZeroHazard final : public HazardModel {
public:
    explicit ZeroHazard(int active_state = 1) : HazardModel(active_state) {}
    double rate(double, double, double) const override { return 0.0; }
    double cumulative(double, double, double, double) const override { return 0.0; }
    bool duration_only() const override { return true; }
};

class ConstantHazard final : public HazardModel {
public:
    ConstantHazard(double rate, int active_state);
    double rate(double, double, double) const override { return rate_; }
    double cumulative(double t0, double t1, double, double) const override {
        return rate_ * (t1 - t0);
    }
    bool duration_only() const override { return true; }
    double level() const { return rate_; }

private:
    double rate_;
};

// Scenario censoring hazard: constant in t, band bump in w, state 1.
class OracleGammaHazard final : public HazardModel {
public:
    explicit OracleGammaHazard(const GammaParams& p);
    double rate(double, double, double w) const override;
    double cumulative(double t0, double t1, double, double w) const override;
    bool duration_only() const override { return true; }
    const GammaParams& params() const { return params_; }

private:
    GammaParams params_;
};

// Scenario illness onset hazard: two t-pieces split at late_time, state 1.
class OracleMu12Hazard final : public HazardModel {
public:
    explicit OracleMu12Hazard(const Mu12Params& p);
    double rate(double t, double, double w) const override;
    double cumulative(double t0, double t1, double, double w) const override;
    void time_breakpoints(double t0, double t1, double, double,
                          std::vector<double>& out) const override;
    const Mu12Params& params() const { return params_; }

private:
    Mu12Params params_;
};

// Scenario healthy-death hazard: log-linear in t, state 1.
class OracleMu13Hazard final : public HazardModel {
public:
    explicit OracleMu13Hazard(const Mu13Params& p);
    double rate(double t, double, double w) const override;
    double cumulative(double t0, double t1, double, double w) const override;
    const Mu13Params& params() const { return params_; }

private:
    Mu13Params params_;
};

// Scenario exit-from-illness hazard: depends on capped duration only, state 2.
class OracleMu23Hazard final : public HazardModel {
public:
    explicit OracleMu23Hazard(const Mu23Params& p);
    double rate(double t, double entry, double w) const override;
    double cumulative(double t0, double t1, double entry, double w) const override;
    void time_breakpoints(double t0, double t1, double entry, double,
                          std::vector<double>& out) const override;
    bool duration_only() const override { return true; }
    const Mu23Params& params() const { return params_; }

private:
    Mu23Params params_;
};

// Fitted censoring model exp(b0 + b1*t + b2*w), state 1.
class ParametricCensoringHazard final : public HazardModel {
public:
    ParametricCensoringHazard(double b0, double b1, double b2);
    double rate(double t, double, double w) const override;
    double cumulative(double t0, double t1, double, double w) const override;
    double b0() const { return b0_; }
    double b1() const { return b1_; }
    double b2() const { return b2_; }

private:
    double b0_, b1_, b2_;
};

// Piecewise-constant hazard over a tensor cell partition in (t, duration, w):
// the evaluation form of a fitted zero-order spline model. Knot vectors may
// be empty (no dependence on that margin). Cell (i, j, k) covers
// [t_i, t_{i+1}) x [d_j, d_{j+1}) x [w_k, w_{k+1}) with outer edges at +-inf.
class PiecewiseHazard final : public HazardModel {
public:
    PiecewiseHazard(std::vector<double> t_knots, std::vector<double> dur_knots,
                    std::vector<double> w_knots, std::vector<double> log_rates,
                    int active_state);

    double rate(double t, double entry, double w) const override;
    double cumulative(double t0, double t1, double entry, double w) const override;
    void time_breakpoints(double t0, double t1, double entry, double,
                          std::vector<double>& out) const override;
    bool duration_only() const override { return t_knots_.empty(); }

    const std::vector<double>& t_knots() const { return t_knots_; }
    const std::vector<double>& dur_knots() const { return dur_knots_; }
    const std::vector<double>& w_knots() const { return w_knots_; }
    const std::vector<double>& log_rates() const { return log_rates_; }

private:
    std::vector<double> t_knots_, dur_knots_, w_knots_;
    std::vector<double> log_rates_;  // size (nt+1)*(nd+1)*(nw+1), t-major
    std::size_t nt_, nd_, nw_;

    double cell_rate(std::size_t it, std::size_t id, std::size_t iw) const;
};

// Oracle model bundles for a scenario.
HazardPtr oracle_censoring(const ScenarioConfig& scen);

struct TransitionModels {
    HazardPtr m12;  // 1 -> 2
    HazardPtr m13;  // 1 -> 3
    HazardPtr m23;  // 2 -> 3
};

TransitionModels oracle_transitions(const ScenarioConfig& scen);
TransitionModels zero_transitions();

}  // namespace drcut
