#include "core/hal_lite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace drcut {

namespace {

int target_state(HalTarget t) { return t == HalTarget::kDeathFromIllness ? 2 : 1; }
bool target_has_duration(HalTarget t) { return t == HalTarget::kDeathFromIllness; }

double safe_exp(double x) { return std::exp(std::clamp(x, -40.0, 40.0)); }

// Nearest-rank empirical quantiles at levels i/(k+1), deduplicated.
std::vector<double> quantile_knots(std::vector<double> vals, int k) {
    std::vector<double> out;
    if (k <= 0 || vals.empty()) return out;
    std::sort(vals.begin(), vals.end());
    for (int i = 1; i <= k; ++i) {
        double q = static_cast<double>(i) / static_cast<double>(k + 1);
        auto idx = std::min(vals.size() - 1,
                            static_cast<std::size_t>(q * static_cast<double>(vals.size())));
        double v = vals[idx];
        if (out.empty() || v > out.back() + 1e-12) out.push_back(v);
    }
    return out;
}

std::size_t interval(const std::vector<double>& knots, double x) {
    return static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) -
                                    knots.begin());
}

struct Basis {
    std::vector<double> tk, dk, wk;
    std::size_t nt = 0, nd = 0, nw = 0;  // knot counts per margin
    std::size_t cells = 0;
    // Feature = lower interval bound per margin (0 = margin absent from the
    // product); active on cell (it, id, iw) iff it >= f[0], id >= f[1],
    // iw >= f[2]. Cell layout matches PiecewiseHazard: t-major.
    std::vector<std::array<int, 3>> feats;

    std::size_t cell(std::size_t it, std::size_t id, std::size_t iw) const {
        return (it * (nd + 1) + id) * (nw + 1) + iw;
    }
};

Basis make_basis(const std::vector<SubjectRisk>& risk, bool with_d, const HalConfig& cfg) {
    std::vector<double> times, durs, ws;
    for (const auto& r : risk) {
        if (!r.segments.empty()) ws.push_back(r.w);
        for (const auto& e : r.events) {
            times.push_back(e[0]);
            if (with_d) durs.push_back(e[0] - e[1]);
        }
    }
    Basis b;
    b.tk = quantile_knots(times, cfg.knots_per_margin);
    if (with_d) b.dk = quantile_knots(std::move(durs), cfg.knots_per_margin);
    b.wk = quantile_knots(std::move(ws), cfg.knots_per_margin);
    b.nt = b.tk.size();
    b.nd = b.dk.size();
    b.nw = b.wk.size();
    b.cells = (b.nt + 1) * (b.nd + 1) * (b.nw + 1);
    int cap = cfg.max_order > 0 ? cfg.max_order : (with_d ? 3 : 2);
    for (int a = 0; a <= static_cast<int>(b.nt); ++a)
        for (int d = 0; d <= static_cast<int>(b.nd); ++d)
            for (int e = 0; e <= static_cast<int>(b.nw); ++e) {
                int order = (a > 0) + (d > 0) + (e > 0);
                if (order >= 1 && order <= cap) b.feats.push_back({a, d, e});
            }
    return b;
}

// Exact per-cell sufficient statistics: at-risk time T and event count N.
// Segments are split at every time knot and every duration knot image
// (entry + knot), so each piece lies in a single cell.
void accumulate(const Basis& b, const SubjectRisk& r, std::vector<double>& T,
                std::vector<double>& N) {
    std::size_t iw = interval(b.wk, r.w);
    std::vector<double> cuts;
    for (const auto& s : r.segments) {
        double t0 = s[0], t1 = s[1], entry = s[2];
        if (!(t1 > t0)) continue;
        cuts.clear();
        cuts.push_back(t0);
        for (double k : b.tk)
            if (k > t0 && k < t1) cuts.push_back(k);
        for (double k : b.dk) {
            double x = entry + k;
            if (x > t0 && x < t1) cuts.push_back(x);
        }
        cuts.push_back(t1);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double lo = cuts[i], hi = cuts[i + 1];
            if (!(hi > lo)) continue;
            double mid = 0.5 * (lo + hi);
            T[b.cell(interval(b.tk, mid), interval(b.dk, mid - entry), iw)] += hi - lo;
        }
    }
    for (const auto& ev : r.events)
        N[b.cell(interval(b.tk, ev[0]), interval(b.dk, ev[0] - ev[1]), iw)] += 1.0;
}

// Coordinate descent on f(beta) = (1/n) sum_c [T_c e^{lp_c} - N_c lp_c]
//                                + lambda * sum_{j>=1} |beta_j|,
// where lp_c = beta_0 + sum_j beta_j 1(cell c in feature j's box). Each
// coordinate takes a proximal Newton step with step halving, so the
// objective never increases.
class CellFitter {
public:
    CellFitter(const Basis& b, std::vector<double> T, std::vector<double> N, double n)
        : b_(b), T_(std::move(T)), N_(std::move(N)), n_(n) {
        double tot_t = std::accumulate(T_.begin(), T_.end(), 0.0);
        double tot_n = std::accumulate(N_.begin(), N_.end(), 0.0);
        if (!(n_ > 0) || !(tot_t > 0.0)) throw InvalidArgument("hazard fit: no exposure");
        if (!(tot_n > 0.0)) throw InvalidArgument("hazard fit: no events");
        beta_.assign(b_.feats.size() + 1, 0.0);
        beta_[0] = std::log(tot_n / tot_t);
        lp_.assign(b_.cells, beta_[0]);
        rate_.assign(b_.cells, tot_n / tot_t);
        sn_ = build_suffix(N_);
    }

    double lambda_max() const {
        double m = 0.0;
        for (std::size_t j = 1; j <= b_.feats.size(); ++j) {
            double g, h;
            box_sums(j, g, h);
            m = std::max(m, std::abs(g));
        }
        return m;
    }

    // Cyclic coordinate descent alone crawls here: the nested boxes make
    // many active coordinates trade mass along near-flat valleys in steps
    // barely above tol. A joint Newton step over the active set (cheap,
    // since every Hessian entry is a box-intersection sum available from a
    // suffix-sum tensor) jumps along those valleys; it is interleaved with
    // the sweeps and accepted only on strict objective decrease, so the
    // sweep-to-sweep objective stays nonincreasing and convergence is still
    // certified by a full sweep moving every coordinate less than tol.
    void fit(double lambda, double tol, int max_sweeps, int* sweeps_io,
             std::vector<std::pair<int, double>>* trace, int lambda_index) {
        int& sweeps = *sweeps_io;
        while (true) {
            double moved = sweep(lambda, false);
            bump(sweeps, max_sweeps, trace, lambda_index, lambda);
            if (moved < tol) return;
            polish(lambda);
            int since_polish = 0;
            while (true) {
                double inner = sweep(lambda, true);
                bump(sweeps, max_sweeps, trace, lambda_index, lambda);
                if (inner < tol) break;
                if (++since_polish >= 10) {
                    polish(lambda);
                    since_polish = 0;
                }
            }
        }
    }

    double objective(double lambda) const {
        double f = 0.0;
        for (std::size_t c = 0; c < b_.cells; ++c) f += T_[c] * rate_[c] - N_[c] * lp_[c];
        f /= n_;
        for (std::size_t j = 1; j < beta_.size(); ++j) f += lambda * std::abs(beta_[j]);
        return f;
    }

    const std::vector<double>& cell_log_rates() const { return lp_; }

    int nonzero() const {
        int k = 0;
        for (std::size_t j = 1; j < beta_.size(); ++j)
            if (beta_[j] != 0.0) ++k;
        return k;
    }

    // Held-out negative log-likelihood of another dataset's cell statistics
    // under the current rates, per subject.
    double heldout_loss(const std::vector<double>& T, const std::vector<double>& N,
                        double n) const {
        double f = 0.0;
        for (std::size_t c = 0; c < b_.cells; ++c) f += T[c] * rate_[c] - N[c] * lp_[c];
        return f / n;
    }

private:
    template <class F>
    void for_box(std::size_t j, F&& fn) const {
        std::array<int, 3> lo{0, 0, 0};
        if (j > 0) lo = b_.feats[j - 1];
        for (auto it = static_cast<std::size_t>(lo[0]); it <= b_.nt; ++it)
            for (auto id = static_cast<std::size_t>(lo[1]); id <= b_.nd; ++id) {
                std::size_t base = (it * (b_.nd + 1) + id) * (b_.nw + 1);
                for (auto iw = static_cast<std::size_t>(lo[2]); iw <= b_.nw; ++iw)
                    fn(base + iw);
            }
    }

    void box_sums(std::size_t j, double& g, double& h) const {
        double ev = 0.0, exp_ev = 0.0;
        for_box(j, [&](std::size_t c) {
            ev += N_[c];
            exp_ev += T_[c] * rate_[c];
        });
        g = (ev - exp_ev) / n_;
        h = exp_ev / n_;
    }

    double update(std::size_t j, double lambda) {
        double g, h;
        box_sums(j, g, h);
        if (h < 1e-14) return 0.0;
        double bj = beta_[j];
        double z;
        if (j == 0) {
            z = bj + g / h;
        } else {
            double u = bj + g / h;
            double thr = lambda / h;
            z = std::abs(u) <= thr ? 0.0 : (u > 0 ? u - thr : u + thr);
        }
        double delta = std::clamp(z - bj, -5.0, 5.0);
        if (delta == 0.0) return 0.0;
        double exp_ev = h * n_, ev = g * n_ + exp_ev;
        for (int halve = 0; halve < 60; ++halve) {
            double df = (exp_ev * std::expm1(delta) - ev * delta) / n_;
            if (j > 0) df += lambda * (std::abs(bj + delta) - std::abs(bj));
            if (df <= 1e-14) {
                beta_[j] = bj + delta;
                for_box(j, [&](std::size_t c) {
                    lp_[c] += delta;
                    rate_[c] = safe_exp(lp_[c]);
                });
                return std::abs(delta);
            }
            delta *= 0.5;
        }
        return 0.0;
    }

    double sweep(double lambda, bool active_only) {
        double moved = 0.0;
        for (std::size_t j = 0; j <= b_.feats.size(); ++j) {
            if (active_only && j > 0 && beta_[j] == 0.0) continue;
            moved = std::max(moved, update(j, lambda));
        }
        return moved;
    }

    // 3D suffix sums over cells, zero-padded one layer past each margin, so
    // any lower box's total is a single lookup at its corner.
    std::vector<double> build_suffix(const std::vector<double>& cellvals) const {
        std::size_t d1 = b_.nd + 2, d2 = b_.nw + 2;
        auto su = [&](std::size_t it, std::size_t id, std::size_t iw) {
            return (it * d1 + id) * d2 + iw;
        };
        std::vector<double> s((b_.nt + 2) * d1 * d2, 0.0);
        for (std::size_t it = b_.nt + 1; it-- > 0;)
            for (std::size_t id = b_.nd + 1; id-- > 0;)
                for (std::size_t iw = b_.nw + 1; iw-- > 0;)
                    s[su(it, id, iw)] =
                        cellvals[b_.cell(it, id, iw)] + s[su(it + 1, id, iw)] +
                        s[su(it, id + 1, iw)] + s[su(it, id, iw + 1)] -
                        s[su(it + 1, id + 1, iw)] - s[su(it + 1, id, iw + 1)] -
                        s[su(it, id + 1, iw + 1)] + s[su(it + 1, id + 1, iw + 1)];
        return s;
    }

    double suffix_at(const std::vector<double>& s, int a, int d, int e) const {
        std::size_t d1 = b_.nd + 2, d2 = b_.nw + 2;
        return s[(static_cast<std::size_t>(a) * d1 + static_cast<std::size_t>(d)) * d2 +
                 static_cast<std::size_t>(e)];
    }

    // In-place Cholesky solve of A x = b; false when A is not positive
    // definite (step skipped).
    static bool chol_solve(std::vector<double>& a, std::vector<double>& b, std::size_t m) {
        for (std::size_t k = 0; k < m; ++k) {
            double d = a[k * m + k];
            for (std::size_t i = 0; i < k; ++i) d -= a[k * m + i] * a[k * m + i];
            if (!(d > 0.0)) return false;
            d = std::sqrt(d);
            a[k * m + k] = d;
            for (std::size_t r = k + 1; r < m; ++r) {
                double v = a[r * m + k];
                for (std::size_t i = 0; i < k; ++i) v -= a[r * m + i] * a[k * m + i];
                a[r * m + k] = v / d;
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            double v = b[i];
            for (std::size_t k = 0; k < i; ++k) v -= a[i * m + k] * b[k];
            b[i] = v / a[i * m + i];
        }
        for (std::size_t i = m; i-- > 0;) {
            double v = b[i];
            for (std::size_t k = i + 1; k < m; ++k) v -= a[k * m + i] * b[k];
            b[i] = v / a[i * m + i];
        }
        return true;
    }

    // One damped Newton step over the intercept plus all active features.
    // Gradient and Hessian come from suffix sums of T_c * rate_c: the
    // Hessian entry for features j, k is the sum over the intersection of
    // their boxes, itself a lower box with corner max(corner_j, corner_k).
    void polish(double lambda) {
        std::vector<std::size_t> coords{0};
        for (std::size_t j = 1; j <= b_.feats.size(); ++j)
            if (beta_[j] != 0.0) coords.push_back(j);
        std::size_t m = coords.size();
        if (m < 2) return;

        std::vector<double> tr(b_.cells);
        for (std::size_t c = 0; c < b_.cells; ++c) tr[c] = T_[c] * rate_[c];
        auto sr = build_suffix(tr);
        auto corner = [&](std::size_t j) {
            return j == 0 ? std::array<int, 3>{0, 0, 0} : b_.feats[j - 1];
        };

        std::vector<double> g(m), h(m * m);
        for (std::size_t a = 0; a < m; ++a) {
            auto ca = corner(coords[a]);
            double exp_ev = suffix_at(sr, ca[0], ca[1], ca[2]);
            double ev = suffix_at(sn_, ca[0], ca[1], ca[2]);
            g[a] = (exp_ev - ev) / n_;
            if (coords[a] > 0) g[a] += beta_[coords[a]] > 0 ? lambda : -lambda;
            for (std::size_t b2 = a; b2 < m; ++b2) {
                auto cb = corner(coords[b2]);
                double v = suffix_at(sr, std::max(ca[0], cb[0]), std::max(ca[1], cb[1]),
                                     std::max(ca[2], cb[2])) /
                           n_;
                h[a * m + b2] = h[b2 * m + a] = v;
            }
        }
        double dmax = 0.0;
        for (std::size_t a = 0; a < m; ++a) dmax = std::max(dmax, h[a * m + a]);
        for (std::size_t a = 0; a < m; ++a) h[a * m + a] += 1e-8 * dmax + 1e-12;
        std::vector<double> step(m);
        for (std::size_t a = 0; a < m; ++a) step[a] = -g[a];
        if (!chol_solve(h, step, m)) return;

        double f_cur = objective(lambda);
        std::vector<double> lp_try(b_.cells);
        for (double t = 1.0; t > 1e-10; t *= 0.5) {
            lp_try = lp_;
            for (std::size_t a = 0; a < m; ++a) {
                double d = t * step[a];
                if (d != 0.0) for_box(coords[a], [&](std::size_t c) { lp_try[c] += d; });
            }
            double f = 0.0;
            for (std::size_t c = 0; c < b_.cells; ++c)
                f += T_[c] * safe_exp(lp_try[c]) - N_[c] * lp_try[c];
            f /= n_;
            for (std::size_t j = 1; j < beta_.size(); ++j) f += lambda * std::abs(beta_[j]);
            for (std::size_t a = 0; a < m; ++a)
                if (coords[a] > 0)
                    f += lambda * (std::abs(beta_[coords[a]] + t * step[a]) -
                                   std::abs(beta_[coords[a]]));
            if (f <= f_cur - 1e-14) {
                for (std::size_t a = 0; a < m; ++a) beta_[coords[a]] += t * step[a];
                lp_ = lp_try;
                for (std::size_t c = 0; c < b_.cells; ++c) rate_[c] = safe_exp(lp_[c]);
                return;
            }
        }
    }

    void bump(int& sweeps, int max_sweeps, std::vector<std::pair<int, double>>* trace,
              int lambda_index, double lambda) {
        ++sweeps;
        if (trace) trace->emplace_back(lambda_index, objective(lambda));
        if (sweeps > max_sweeps)
            throw ConvergenceError("hazard fit: coordinate descent did not converge in " +
                                   std::to_string(max_sweeps) + " sweeps");
    }

    const Basis& b_;
    std::vector<double> T_, N_;
    double n_;
    std::vector<double> beta_, lp_, rate_;
    std::vector<double> sn_;  // suffix sums of the event counts
};

}  // namespace

std::vector<SubjectRisk> extract_risk(const std::vector<ObservedSubject>& data,
                                      HalTarget target) {
    int state = target_state(target);
    bool with_d = target_has_duration(target);
    std::vector<SubjectRisk> out;
    out.reserve(data.size());
    for (const auto& subj : data) {
        SubjectRisk r;
        r.w = subj.w;
        for (const auto& seg : subj.segments())
            if (seg.state == state && seg.t1 > seg.t0)
                r.segments.push_back({seg.t0, seg.t1, with_d ? seg.entry : 0.0});
        switch (target) {
            case HalTarget::kCensoring:
                if (subj.censored && subj.state_before(subj.c) == 1)
                    r.events.push_back({subj.c, 0.0});
                break;
            case HalTarget::kIllness:
                for (const auto& j : subj.jumps)
                    if (j.state == 2) r.events.push_back({j.time, 0.0});
                break;
            case HalTarget::kDeathFromHealth:
            case HalTarget::kDeathFromIllness: {
                int prev = 1;
                double entry = 0.0;
                for (std::size_t i = 1; i < subj.jumps.size(); ++i) {
                    const auto& j = subj.jumps[i];
                    int want_prev = target == HalTarget::kDeathFromHealth ? 1 : 2;
                    if (j.state == 3 && prev == want_prev)
                        r.events.push_back({j.time, with_d ? entry : 0.0});
                    entry = j.time;
                    prev = j.state;
                }
                break;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

HalFit fit_hal_risk(const std::vector<SubjectRisk>& risk, bool with_duration,
                    int active_state, const HalConfig& config) {
    if (risk.empty()) throw InvalidArgument("hazard fit: no data");
    Basis basis = make_basis(risk, with_duration, config);
    if (basis.cells == 0) throw InvalidArgument("hazard fit: empty basis");

    int folds = config.cv_folds;
    bool do_cv = folds >= 2 && !basis.feats.empty() && config.n_lambda > 1;
    if (do_cv) folds = std::min<int>(folds, static_cast<int>(risk.size()));

    std::vector<std::vector<double>> fold_t, fold_n;
    std::vector<double> fold_subjects;
    std::vector<double> all_t(basis.cells, 0.0), all_n(basis.cells, 0.0);
    if (do_cv) {
        fold_t.assign(folds, std::vector<double>(basis.cells, 0.0));
        fold_n.assign(folds, std::vector<double>(basis.cells, 0.0));
        fold_subjects.assign(folds, 0.0);
    }
    for (std::size_t i = 0; i < risk.size(); ++i) {
        accumulate(basis, risk[i], all_t, all_n);
        if (do_cv) {
            auto f = static_cast<std::size_t>(i % folds);
            accumulate(basis, risk[i], fold_t[f], fold_n[f]);
            fold_subjects[f] += 1.0;
        }
    }
    auto n_all = static_cast<double>(risk.size());

    HalFit result;
    if (basis.feats.empty()) {
        result.lambda_path = {0.0};
    } else {
        CellFitter probe(basis, all_t, all_n, n_all);
        double lmax = std::max(probe.lambda_max(), 1e-10) * (1.0 + 1e-10);
        result.lambda_path.resize(config.n_lambda);
        for (int i = 0; i < config.n_lambda; ++i) {
            double frac = config.n_lambda == 1
                              ? 1.0
                              : static_cast<double>(i) / static_cast<double>(config.n_lambda - 1);
            result.lambda_path[i] = lmax * std::pow(config.lambda_min_ratio, frac);
        }
    }

    std::size_t chosen = result.lambda_path.size() - 1;
    if (do_cv) {
        // All folds advance down the path in lockstep so the aggregate held-out
        // loss is known after every lambda. Once it has failed to improve for
        // five consecutive values the remaining (ever more expensive) tail is
        // abandoned; the minimiser always lies in the traversed prefix.
        std::vector<std::unique_ptr<CellFitter>> fitters;
        fitters.reserve(folds);
        for (int f = 0; f < folds; ++f) {
            std::vector<double> tr_t(basis.cells), tr_n(basis.cells);
            for (std::size_t c = 0; c < basis.cells; ++c) {
                tr_t[c] = all_t[c] - fold_t[f][c];
                tr_n[c] = all_n[c] - fold_n[f][c];
            }
            fitters.push_back(std::make_unique<CellFitter>(
                basis, std::move(tr_t), std::move(tr_n), n_all - fold_subjects[f]));
        }

        result.cv_loss.clear();
        std::vector<double> losses(folds, 0.0);
        int stale = 0;
        chosen = 0;
        for (std::size_t li = 0; li < result.lambda_path.size(); ++li) {
            parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
                int sweeps = 0;
                fitters[f]->fit(result.lambda_path[li], config.tol, config.max_sweeps,
                                &sweeps, nullptr, static_cast<int>(li));
                losses[f] =
                    fitters[f]->heldout_loss(fold_t[f], fold_n[f], fold_subjects[f]);
            }, config.workers);
            double total = 0.0;
            for (int f = 0; f < folds; ++f) total += losses[f] * fold_subjects[f] / n_all;
            result.cv_loss.push_back(total);
            if (total < result.cv_loss[chosen]) {
                chosen = li;
                stale = 0;
            } else if (li > 0 && ++stale >= 5) {
                break;
            }
        }
    }

    CellFitter fitter(basis, std::move(all_t), std::move(all_n), n_all);
    for (std::size_t li = 0; li <= chosen; ++li) {
        int sweeps = 0;
        fitter.fit(result.lambda_path[li], config.tol, config.max_sweeps, &sweeps,
                   &result.objective_trace, static_cast<int>(li));
    }

    result.lambda = result.lambda_path[chosen];
    result.nonzero = fitter.nonzero();
    result.hazard = std::make_shared<PiecewiseHazard>(basis.tk, basis.dk, basis.wk,
                                                      fitter.cell_log_rates(), active_state);
    return result;
}

HalFit fit_hal_hazard(const std::vector<ObservedSubject>& data, HalTarget target,
                      const HalConfig& config) {
    return fit_hal_risk(extract_risk(data, target), target_has_duration(target),
                        target_state(target), config);
}

TransitionModels fit_hal_transitions(const std::vector<ObservedSubject>& data,
                                     const HalConfig& config, int workers) {
    const HalTarget targets[3] = {HalTarget::kIllness, HalTarget::kDeathFromHealth,
                                  HalTarget::kDeathFromIllness};
    HazardPtr fitted[3];
    parallel_for(3, [&](std::size_t i) {
        fitted[i] = fit_hal_hazard(data, targets[i], config).hazard;
    }, workers);
    return TransitionModels{fitted[0], fitted[1], fitted[2]};
}

HazardPtr fit_constant_hazard(const std::vector<ObservedSubject>& data, HalTarget target) {
    double exposure = 0.0, events = 0.0;
    for (const auto& r : extract_risk(data, target)) {
        for (const auto& s : r.segments) exposure += s[1] - s[0];
        events += static_cast<double>(r.events.size());
    }
    if (!(exposure > 0.0)) throw InvalidArgument("constant hazard fit: no exposure");
    return std::make_shared<ConstantHazard>(events / exposure, target_state(target));
}

TransitionModels fit_constant_transitions(const std::vector<ObservedSubject>& data) {
    return TransitionModels{fit_constant_hazard(data, HalTarget::kIllness),
                            fit_constant_hazard(data, HalTarget::kDeathFromHealth),
                            fit_constant_hazard(data, HalTarget::kDeathFromIllness)};
}

}  // namespace drcut
