#include "core/value_tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "core/errors.hpp"
#include "core/interp.hpp"
#include "core/parallel.hpp"

namespace drcut {

namespace {

std::size_t checked_intervals(double span, double step, const char* what) {
    if (!(step > 0.0)) throw InvalidArgument(std::string("value tables: ") + what + " must be positive");
    double k = span / step;
    auto n = static_cast<std::size_t>(std::llround(k));
    if (n == 0 || std::abs(static_cast<double>(n) * step - span) > 1e-9)
        throw InvalidArgument(std::string("value tables: ") + what + " must divide the span evenly");
    return n;
}

void check_finite(double v, double t, double w, const char* which) {
    if (!std::isfinite(v))
        throw NumericError(std::string("value tables: non-finite ") + which + " at t=" +
                           std::to_string(t) + ", w=" + std::to_string(w));
}

}  // namespace

void ValueTables::validate_grid(const ValueGridSpec& grid) {
    if (!(grid.eta > 0.0)) throw InvalidArgument("value tables: eta must be positive");
    std::size_t nt = checked_intervals(grid.eta, grid.t_step, "t_step");
    if (nt < 4) throw InvalidArgument("value tables: t grid too coarse");
    checked_intervals(grid.eta, grid.s_step, "s_step");
    checked_intervals(grid.s_step, grid.t_step, "t_step (must divide s_step)");
    if (grid.store_stride < 1) throw InvalidArgument("value tables: store_stride must be >= 1");
    checked_intervals(grid.eta, grid.t_step * grid.store_stride, "duration store step");
    if (!(grid.w_lo < grid.w_hi)) throw InvalidArgument("value tables: need w_lo < w_hi");
    checked_intervals(grid.w_hi - grid.w_lo, grid.w_step, "w_step");
}

std::shared_ptr<const ValueTables> ValueTables::build(const TransitionModels& transitions,
                                                      const ValueGridSpec& grid,
                                                      const std::vector<double>& extra_w,
                                                      int workers) {
    if (!transitions.m12 || !transitions.m13 || !transitions.m23)
        throw InvalidArgument("value tables: missing transition model");
    validate_grid(grid);

    auto tables = std::shared_ptr<ValueTables>(new ValueTables());
    tables->grid_ = grid;
    tables->nt_ = checked_intervals(grid.eta, grid.t_step, "t_step");
    tables->ns_ = checked_intervals(grid.eta, grid.s_step, "s_step");
    tables->nd_ = checked_intervals(grid.eta, grid.t_step * grid.store_stride, "duration step");

    std::size_t nw = checked_intervals(grid.w_hi - grid.w_lo, grid.w_step, "w_step");
    std::vector<double> knots;
    knots.reserve(nw + 1 + extra_w.size());
    for (std::size_t i = 0; i <= nw; ++i) knots.push_back(grid.w_lo + static_cast<double>(i) * grid.w_step);
    for (double w : extra_w) {
        if (w < grid.w_lo - 1e-9 || w > grid.w_hi + 1e-9)
            throw InvalidArgument("value tables: extra w knot outside [w_lo, w_hi]");
        knots.push_back(std::clamp(w, grid.w_lo, grid.w_hi));
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                knots.end());
    tables->w_knots_ = std::move(knots);
    tables->slices_.resize(tables->w_knots_.size());

    parallel_for(tables->w_knots_.size(), [&](std::size_t i) {
        tables->solve_slice(transitions, tables->w_knots_[i], tables->slices_[i]);
    }, workers);
    return tables;
}

void ValueTables::solve_slice(const TransitionModels& transitions, double w, Slice& out) const {
    const double eta = grid_.eta;
    const double h = grid_.t_step;
    const HazardModel& m12 = *transitions.m12;
    const HazardModel& m13 = *transitions.m13;
    const HazardModel& m23 = *transitions.m23;

    out.dur_only = m23.duration_only();

    // Hazard rates may jump at breakpoints that sit exactly on the step
    // grid. Each RK4 step integrates the open interval between two grid
    // points, so endpoint stages evaluate the rate just inside the step;
    // otherwise the stage at a grid-aligned jump reads the wrong piece and
    // the solver degrades to first order there.
    auto inside = [](double x, double toward) { return std::nextafter(x, toward); };

    if (out.dur_only) {
        // Forward solve of L' = m23(r), A' = exp(-L) on the half-step grid.
        const double h2 = h / 2.0;
        const std::size_t n2 = 2 * nt_;
        out.cumhaz.assign(n2 + 1, 0.0);
        out.acc.assign(n2 + 1, 0.0);
        double L = 0.0, A = 0.0;
        for (std::size_t i = 0; i < n2; ++i) {
            double r = static_cast<double>(i) * h2;
            auto fl = [&](double x) { return m23.rate(x, 0.0, w); };
            double k1l = fl(inside(r, r + h2)), k1a = std::exp(-L);
            double k2l = fl(r + h2 / 2.0), k2a = std::exp(-(L + h2 / 2.0 * k1l));
            double k3l = k2l, k3a = std::exp(-(L + h2 / 2.0 * k2l));
            double k4l = fl(inside(r + h2, r)), k4a = std::exp(-(L + h2 * k3l));
            L += h2 / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l);
            A += h2 / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            check_finite(L, r, w, "cumulative recovery hazard");
            out.cumhaz[i + 1] = L;
            out.acc[i + 1] = A;
        }
    } else {
        // Backward sweep per entry-time knot; store the duration-major table
        // plus the diagonal that feeds the V1 equation.
        const std::size_t stride = static_cast<std::size_t>(grid_.store_stride);
        const double d_step = h * static_cast<double>(stride);
        out.v2.assign((nd_ + 1) * (ns_ + 1), 0.0);
        out.diag.assign(ns_ + 1, 0.0);
        std::vector<double> vals;
        for (std::size_t j = 0; j <= ns_; ++j) {
            double s = static_cast<double>(j) * grid_.s_step;
            auto m = static_cast<std::size_t>(std::llround((eta - s) / h));
            vals.assign(m + 1, 0.0);
            double v = 0.0;
            for (std::size_t i = m; i-- > 0;) {
                double t1 = s + static_cast<double>(i + 1) * h;
                auto f = [&](double t, double y) { return -1.0 + m23.rate(t, s, w) * y; };
                double k1 = f(inside(t1, t1 - h), v);
                double k2 = f(t1 - h / 2.0, v - h / 2.0 * k1);
                double k3 = f(t1 - h / 2.0, v - h / 2.0 * k2);
                double k4 = f(inside(t1 - h, t1), v - h * k3);
                v -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                check_finite(v, t1 - h, w, "V2");
                vals[i] = v;
            }
            out.diag[j] = vals[0];
            for (std::size_t k = 0; k <= nd_; ++k) {
                double d = static_cast<double>(k) * d_step;
                double value;
                if (k * stride <= m) value = vals[k * stride];
                else value = eta - s - d;  // signed linear extension past eta
                out.v2[k * (ns_ + 1) + j] = value;
            }
        }
    }

    // V1 backward from eta. The V2 diagonal is exact on all RK4 stage points
    // in the duration-only case (A(eta - t) lands on the half-step grid) and
    // interpolated from the entry-knot diagonal otherwise.
    const double h2 = h / 2.0;
    auto diag_v2 = [&](double t) -> double {
        if (out.dur_only) {
            double r = eta - t;
            auto idx = static_cast<std::size_t>(std::llround(r / h2));
            if (idx < out.acc.size() && std::abs(static_cast<double>(idx) * h2 - r) < 1e-9)
                return out.acc[idx];
            return cubic_uniform(out.acc, 0.0, h2, r);
        }
        return cubic_uniform(out.diag, 0.0, grid_.s_step, t);
    };

    out.v1.assign(nt_ + 1, 0.0);
    double v = 0.0;
    for (std::size_t i = nt_; i-- > 0;) {
        double t1 = static_cast<double>(i + 1) * h;
        auto f = [&](double t, double y) {
            double a12 = m12.rate(t, 0.0, w);
            double a13 = m13.rate(t, 0.0, w);
            return (a12 + a13) * y - a12 * diag_v2(t);
        };
        double k1 = f(inside(t1, t1 - h), v);
        double k2 = f(t1 - h2, v - h2 * k1);
        double k3 = f(t1 - h2, v - h2 * k2);
        double k4 = f(inside(t1 - h, t1), v - h * k3);
        v -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(v, t1 - h, w, "V1");
        out.v1[i] = v;
    }
}

double ValueTables::slice_v1(const Slice& s, double t) const {
    return cubic_uniform(s.v1, 0.0, grid_.t_step, t);
}

double ValueTables::slice_v2(const Slice& s, double t, double entry) const {
    const double eta = grid_.eta;
    double d = std::max(t - entry, 0.0);
    double raw;
    if (s.dur_only) {
        const double h2 = grid_.t_step / 2.0;
        double a_end = cubic_uniform(s.acc, 0.0, h2, eta - entry);
        double a_d = cubic_uniform(s.acc, 0.0, h2, d);
        double l_d = cubic_uniform(s.cumhaz, 0.0, h2, d);
        raw = (a_end - a_d) * std::exp(l_d);
    } else {
        const double d_step = grid_.t_step * static_cast<double>(grid_.store_stride);
        double ud = std::min(d / d_step, static_cast<double>(nd_));
        double us = std::min(std::max(entry, 0.0) / grid_.s_step, static_cast<double>(ns_));
        auto kd = std::min(static_cast<std::size_t>(ud), nd_ - 1);
        auto js = std::min(static_cast<std::size_t>(us), ns_ - 1);
        double fd = ud - static_cast<double>(kd);
        double fs = us - static_cast<double>(js);
        const std::size_t row = ns_ + 1;
        double v00 = s.v2[kd * row + js], v01 = s.v2[kd * row + js + 1];
        double v10 = s.v2[(kd + 1) * row + js], v11 = s.v2[(kd + 1) * row + js + 1];
        raw = (1.0 - fd) * ((1.0 - fs) * v00 + fs * v01) + fd * ((1.0 - fs) * v10 + fs * v11);
    }
    return std::clamp(raw, 0.0, std::max(eta - t, 0.0));
}

ValueTables::WQuery ValueTables::locate_w(double w) const {
    if (w < w_knots_.front() - 1e-9 || w > w_knots_.back() + 1e-9)
        throw InvalidArgument("value tables: w=" + std::to_string(w) + " outside covered range");
    WQuery q;
    q.tables_ = this;
    auto it = std::upper_bound(w_knots_.begin(), w_knots_.end(), w);
    std::size_t hi = std::min(static_cast<std::size_t>(it - w_knots_.begin()), w_knots_.size() - 1);
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (std::abs(w_knots_[lo] - w) < 1e-12) hi = lo;
    else if (std::abs(w_knots_[hi] - w) < 1e-12) lo = hi;
    q.lo_ = lo;
    q.hi_ = hi;
    q.frac_ = (hi == lo) ? 0.0 : (w - w_knots_[lo]) / (w_knots_[hi] - w_knots_[lo]);
    q.frac_ = std::clamp(q.frac_, 0.0, 1.0);
    return q;
}

double ValueTables::WQuery::v1(double t) const {
    t = std::clamp(t, 0.0, tables_->grid_.eta);
    double lo = tables_->slice_v1(tables_->slices_[lo_], t);
    if (hi_ == lo_) return lo;
    double hi = tables_->slice_v1(tables_->slices_[hi_], t);
    return lo + frac_ * (hi - lo);
}

double ValueTables::WQuery::v2(double t, double s) const {
    t = std::clamp(t, 0.0, tables_->grid_.eta);
    s = std::clamp(s, 0.0, t);
    double lo = tables_->slice_v2(tables_->slices_[lo_], t, s);
    if (hi_ == lo_) return lo;
    double hi = tables_->slice_v2(tables_->slices_[hi_], t, s);
    return lo + frac_ * (hi - lo);
}

double ValueTables::WQuery::conditional_mean(int state, double entry, double accrued,
                                             double u) const {
    u = std::clamp(u, 0.0, tables_->grid_.eta);
    switch (state) {
        case 1: return accrued + v1(u);
        case 2: return accrued + v2(u, entry);
        case 3: return accrued;
        default: throw InvalidArgument("conditional_mean: state must be 1, 2 or 3");
    }
}

double ValueTables::v1(double t, double w) const { return locate_w(w).v1(t); }

double ValueTables::v2(double t, double s, double w) const { return locate_w(w).v2(t, s); }

double ValueTables::conditional_mean(double w, int state, double entry, double accrued,
                                     double u) const {
    return locate_w(w).conditional_mean(state, entry, accrued, u);
}

double ValueTables::conditional_mean(const ObservedSubject& subject, double u) const {
    int state = subject.state_before(u);
    double entry = subject.entry_before(u);
    double accrued = subject.illness_time(u);
    return conditional_mean(subject.w, state, entry, accrued, u);
}

namespace {
constexpr char kTablesMagic[8] = {'D', 'R', 'C', 'U', 'T', 'V', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_vec(std::ofstream& out, const std::vector<double>& v) {
    std::uint64_t n = v.size();
    write_pod(out, n);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
}

void read_vec(std::ifstream& in, std::vector<double>& v) {
    std::uint64_t n = 0;
    read_pod(in, n);
    if (n > (1ull << 32)) throw ParseError("value tables file: implausible array length");
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}
}  // namespace

void ValueTables::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kTablesMagic, sizeof(kTablesMagic));
    write_pod(out, grid_.eta);
    write_pod(out, grid_.t_step);
    write_pod(out, grid_.s_step);
    std::int64_t stride = grid_.store_stride;
    write_pod(out, stride);
    write_pod(out, grid_.w_lo);
    write_pod(out, grid_.w_hi);
    write_pod(out, grid_.w_step);
    write_vec(out, w_knots_);
    std::uint64_t nslices = slices_.size();
    write_pod(out, nslices);
    for (const auto& s : slices_) {
        std::uint8_t flag = s.dur_only ? 1 : 0;
        write_pod(out, flag);
        write_vec(out, s.v1);
        write_vec(out, s.diag);
        write_vec(out, s.v2);
        write_vec(out, s.cumhaz);
        write_vec(out, s.acc);
    }
    if (!out) throw IoError("write failed: " + path);
}

std::shared_ptr<const ValueTables> ValueTables::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTablesMagic, sizeof(magic)) != 0)
        throw ParseError("not a value-tables file: " + path);
    auto tables = std::shared_ptr<ValueTables>(new ValueTables());
    read_pod(in, tables->grid_.eta);
    read_pod(in, tables->grid_.t_step);
    read_pod(in, tables->grid_.s_step);
    std::int64_t stride = 0;
    read_pod(in, stride);
    tables->grid_.store_stride = static_cast<int>(stride);
    read_pod(in, tables->grid_.w_lo);
    read_pod(in, tables->grid_.w_hi);
    read_pod(in, tables->grid_.w_step);
    read_vec(in, tables->w_knots_);
    std::uint64_t nslices = 0;
    read_pod(in, nslices);
    if (!in || nslices != tables->w_knots_.size() || nslices == 0)
        throw ParseError("value tables file: corrupt slice count in " + path);
    validate_grid(tables->grid_);
    tables->nt_ = checked_intervals(tables->grid_.eta, tables->grid_.t_step, "t_step");
    tables->ns_ = checked_intervals(tables->grid_.eta, tables->grid_.s_step, "s_step");
    tables->nd_ = checked_intervals(
        tables->grid_.eta, tables->grid_.t_step * tables->grid_.store_stride, "duration step");
    tables->slices_.resize(nslices);
    for (auto& s : tables->slices_) {
        std::uint8_t flag = 0;
        read_pod(in, flag);
        s.dur_only = flag != 0;
        read_vec(in, s.v1);
        read_vec(in, s.diag);
        read_vec(in, s.v2);
        read_vec(in, s.cumhaz);
        read_vec(in, s.acc);
        if (!in) throw ParseError("value tables file: truncated: " + path);
        if (s.v1.size() != tables->nt_ + 1)
            throw ParseError("value tables file: wrong V1 grid in " + path);
    }
    return tables;
}

void ValueTables::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(10);
    out << "table,t,s,w,value\n";
    const double t_out = 0.1, s_out = 0.25;
    for (std::size_t i = 0; i < w_knots_.size(); ++i) {
        double w = w_knots_[i];
        for (double t = 0.0; t <= grid_.eta + 1e-9; t += t_out)
            out << "v1," << t << ",," << w << "," << slice_v1(slices_[i], t) << "\n";
        for (double s = 0.0; s <= grid_.eta + 1e-9; s += s_out)
            for (double t = s; t <= grid_.eta + 1e-9; t += t_out)
                out << "v2," << t << "," << s << "," << w << ","
                    << slice_v2(slices_[i], t, s) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace drcut
