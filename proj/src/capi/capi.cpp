#include "drcut/drcut.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/censoring.hpp"
#include "core/crossfit.hpp"
#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/hal_lite.hpp"
#include "core/hazard.hpp"
#include "core/pseudo.hpp"
#include "core/rdd.hpp"
#include "core/scenario.hpp"
#include "core/serialize.hpp"
#include "core/simulate.hpp"
#include "core/smoother.hpp"
#include "core/trajectory.hpp"
#include "core/value_tables.hpp"

// Handle types: thin owning wrappers around the core objects. The tags match
// the opaque typedefs in the public header.
struct drcut_scenario {
    drcut::ScenarioConfig v;
};
struct drcut_cohort {
    std::vector<drcut::ObservedSubject> v;
};
struct drcut_hazard {
    drcut::HazardPtr v;
};
struct drcut_transitions {
    drcut::TransitionModels v;
};
struct drcut_tables {
    drcut::ValueTablesPtr v;
};
struct drcut_pseudo {
    std::vector<drcut::PseudoOutcome> v;
};

namespace {

using nlohmann::json;

thread_local std::string t_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Run the body and translate the error taxonomy into status codes. Output
// parameters are only assigned at the very end of each body, so a failure
// leaves them untouched as the header promises.
template <typename F>
drcut_status guarded(F&& body) noexcept {
    try {
        body();
        return DRCUT_OK;
    } catch (const drcut::InvalidArgument& e) {
        t_error = e.what();
        return DRCUT_ERR_INVALID_ARGUMENT;
    } catch (const drcut::ParseError& e) {
        t_error = e.what();
        return DRCUT_ERR_PARSE;
    } catch (const drcut::NumericError& e) {
        t_error = e.what();
        return DRCUT_ERR_NUMERIC;
    } catch (const drcut::ConvergenceError& e) {
        t_error = e.what();
        return DRCUT_ERR_CONVERGENCE;
    } catch (const drcut::IoError& e) {
        t_error = e.what();
        return DRCUT_ERR_IO;
    } catch (const std::exception& e) {
        t_error = e.what();
        return DRCUT_ERR_UNKNOWN;
    } catch (...) {
        t_error = "unknown failure";
        return DRCUT_ERR_UNKNOWN;
    }
}

void require(bool cond, const char* msg) {
    if (!cond) throw drcut::InvalidArgument(msg);
}

void emit_string(char** out, const std::string& s) {
    if (out == nullptr) return;
    char* dup = dup_string(s);
    if (dup == nullptr) throw drcut::IoError("out of memory duplicating a result string");
    *out = dup;
}

// ------------------------------------------------------- JSON config input --

json parse_object(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') return json::object();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw drcut::ParseError(std::string(what) + ": " + e.what());
    }
    if (!j.is_object())
        throw drcut::ParseError(std::string(what) + ": expected a JSON object");
    return j;
}

void check_keys(const json& j, const char* what,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw drcut::ParseError(std::string(what) + ": unknown key '" + it.key() +
                                    "'");
    }
}

double get_number(const json& j, const char* what, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number())
        throw drcut::ParseError(std::string(what) + ": key '" + key +
                                "' must be a number");
    return it->get<double>();
}

int get_int(const json& j, const char* what, const char* key, int fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer())
        throw drcut::ParseError(std::string(what) + ": key '" + key +
                                "' must be an integer");
    return it->get<int>();
}

bool get_bool(const json& j, const char* what, const char* key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean())
        throw drcut::ParseError(std::string(what) + ": key '" + key +
                                "' must be a boolean");
    return it->get<bool>();
}

std::string get_string(const json& j, const char* what, const char* key,
                       const std::string& fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_string())
        throw drcut::ParseError(std::string(what) + ": key '" + key +
                                "' must be a string");
    return it->get<std::string>();
}

drcut::HalConfig hal_from_json(const json& j, const char* what) {
    check_keys(j, what,
               {"knots_per_margin", "max_order", "n_lambda", "lambda_min_ratio",
                "cv_folds", "tol", "max_sweeps", "workers"});
    drcut::HalConfig c;
    c.knots_per_margin = get_int(j, what, "knots_per_margin", c.knots_per_margin);
    c.max_order = get_int(j, what, "max_order", c.max_order);
    c.n_lambda = get_int(j, what, "n_lambda", c.n_lambda);
    c.lambda_min_ratio = get_number(j, what, "lambda_min_ratio", c.lambda_min_ratio);
    c.cv_folds = get_int(j, what, "cv_folds", c.cv_folds);
    c.tol = get_number(j, what, "tol", c.tol);
    c.max_sweeps = get_int(j, what, "max_sweeps", c.max_sweeps);
    c.workers = get_int(j, what, "workers", c.workers);
    return c;
}

drcut::HalConfig hal_from_text(const char* text, const char* what) {
    return hal_from_json(parse_object(text, what), what);
}

drcut::ValueGridSpec grid_from_json(const json& j, const char* what,
                                    drcut::ValueGridSpec base) {
    check_keys(j, what,
               {"eta", "t_step", "s_step", "store_stride", "w_lo", "w_hi", "w_step"});
    base.eta = get_number(j, what, "eta", base.eta);
    base.t_step = get_number(j, what, "t_step", base.t_step);
    base.s_step = get_number(j, what, "s_step", base.s_step);
    base.store_stride = get_int(j, what, "store_stride", base.store_stride);
    base.w_lo = get_number(j, what, "w_lo", base.w_lo);
    base.w_hi = get_number(j, what, "w_hi", base.w_hi);
    base.w_step = get_number(j, what, "w_step", base.w_step);
    return base;
}

// ------------------------------------------------------------ JSON output --

json curve_to_json(const std::vector<drcut::CurvePoint>& curve) {
    json arr = json::array();
    for (const auto& p : curve)
        arr.push_back({{"w", p.w}, {"estimate", p.estimate}, {"se", p.se}});
    return arr;
}

std::vector<drcut::CurvePoint> curve_from_json(const char* text) {
    json j;
    try {
        j = json::parse(text == nullptr ? "" : text);
    } catch (const json::exception& e) {
        throw drcut::ParseError(std::string("curve: ") + e.what());
    }
    if (!j.is_array()) throw drcut::ParseError("curve: expected a JSON array");
    std::vector<drcut::CurvePoint> curve;
    curve.reserve(j.size());
    for (const auto& row : j) {
        if (!row.is_object())
            throw drcut::ParseError("curve: expected an array of objects");
        drcut::CurvePoint p;
        p.w = get_number(row, "curve", "w", 0.0);
        p.estimate = get_number(row, "curve", "estimate", 0.0);
        p.se = get_number(row, "curve", "se", 0.0);
        curve.push_back(p);
    }
    return curve;
}

json side_to_json(const drcut::RddSide& s) {
    return {{"estimate", s.estimate}, {"se", s.se}, {"n", s.n}};
}

json rdd_to_json(const drcut::RddResult& r) {
    return {{"tau", r.tau},
            {"se", r.se},
            {"w0", r.w0},
            {"h", r.h},
            {"n_left", r.n_left},
            {"n_right", r.n_right},
            {"y_plus", side_to_json(r.y_plus)},
            {"y_minus", side_to_json(r.y_minus)},
            {"a_plus", side_to_json(r.a_plus)},
            {"a_minus", side_to_json(r.a_minus)},
            {"cov_plus", r.cov_plus},
            {"cov_minus", r.cov_minus}};
}

drcut::RddOptions rdd_options_from_text(const char* text) {
    const char* what = "rdd options";
    json j = parse_object(text, what);
    check_keys(j, what, {"w0", "h", "kernel", "denom_floor", "boundary_on_right"});
    drcut::RddOptions o;
    o.w0 = get_number(j, what, "w0", o.w0);
    o.h = get_number(j, what, "h", o.h);
    o.kernel = drcut::kernel_from_name(
        get_string(j, what, "kernel", drcut::kernel_name(o.kernel)));
    o.denom_floor = get_number(j, what, "denom_floor", o.denom_floor);
    o.boundary_on_right = get_bool(j, what, "boundary_on_right", o.boundary_on_right);
    return o;
}

drcut::PipelineConfig pipeline_from_text(const char* text) {
    const char* what = "pipeline";
    json j = parse_object(text, what);
    check_keys(j, what,
               {"variant", "cens", "outcome", "epsilon", "quad_step", "bandwidth_c",
                "kernel", "workers", "hal", "table"});
    drcut::PipelineConfig c;
    c.variant = drcut::variant_from_name(
        get_string(j, what, "variant", drcut::variant_name(c.variant)));
    c.cens = drcut::cens_estimator_from_name(
        get_string(j, what, "cens", drcut::cens_estimator_name(c.cens)));
    c.outcome = drcut::outcome_estimator_from_name(
        get_string(j, what, "outcome", drcut::outcome_estimator_name(c.outcome)));
    c.epsilon = get_number(j, what, "epsilon", c.epsilon);
    c.quad_step = get_number(j, what, "quad_step", c.quad_step);
    c.bandwidth_c = get_number(j, what, "bandwidth_c", c.bandwidth_c);
    c.kernel = drcut::kernel_from_name(
        get_string(j, what, "kernel", drcut::kernel_name(c.kernel)));
    c.workers = get_int(j, what, "workers", c.workers);
    if (auto it = j.find("hal"); it != j.end()) {
        if (!it->is_object())
            throw drcut::ParseError("pipeline: key 'hal' must be an object");
        c.hal = hal_from_json(*it, "pipeline.hal");
    }
    if (auto it = j.find("table"); it != j.end()) {
        if (!it->is_object())
            throw drcut::ParseError("pipeline: key 'table' must be an object");
        const char* tw = "pipeline.table";
        check_keys(*it, tw, {"t_step", "s_step", "store_stride", "w_step"});
        c.table_grid.t_step = get_number(*it, tw, "t_step", c.table_grid.t_step);
        c.table_grid.s_step = get_number(*it, tw, "s_step", c.table_grid.s_step);
        c.table_grid.store_stride =
            get_int(*it, tw, "store_stride", c.table_grid.store_stride);
        c.table_grid.w_step = get_number(*it, tw, "w_step", c.table_grid.w_step);
    }
    return c;
}

std::vector<double> copy_points(const double* xs, size_t n, const char* what) {
    if (n > 0 && xs == nullptr)
        throw drcut::InvalidArgument(std::string(what) + ": null array with nonzero length");
    return std::vector<double>(xs, xs + n);
}

}  // namespace

#define DRCUT_EXPORT extern "C" __attribute__((visibility("default")))

DRCUT_EXPORT const char* drcut_version(void) { return "0.1.0"; }

DRCUT_EXPORT const char* drcut_last_error(void) { return t_error.c_str(); }

DRCUT_EXPORT void drcut_string_free(char* s) { std::free(s); }

// --------------------------------------------------------------- scenario --

DRCUT_EXPORT drcut_status drcut_scenario_default(drcut_scenario** out) {
    return guarded([&] {
        require(out != nullptr, "drcut_scenario_default: out is null");
        *out = new drcut_scenario{drcut::ScenarioConfig{}};
    });
}

DRCUT_EXPORT drcut_status drcut_scenario_load(const char* path, drcut_scenario** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_scenario_load: null argument");
        *out = new drcut_scenario{drcut::ScenarioConfig::load(path)};
    });
}

DRCUT_EXPORT drcut_status drcut_scenario_parse(const char* text, drcut_scenario** out) {
    return guarded([&] {
        require(text != nullptr && out != nullptr, "drcut_scenario_parse: null argument");
        auto cfg = drcut::ConfigMap::parse_string(text, "<scenario>");
        *out = new drcut_scenario{drcut::ScenarioConfig::from_config(cfg)};
    });
}

DRCUT_EXPORT drcut_status drcut_scenario_to_text(const drcut_scenario* scen, char** out) {
    return guarded([&] {
        require(scen != nullptr && out != nullptr, "drcut_scenario_to_text: null argument");
        emit_string(out, scen->v.to_config_text());
    });
}

DRCUT_EXPORT double drcut_scenario_eta(const drcut_scenario* scen) {
    return scen == nullptr ? std::nan("") : scen->v.eta;
}

DRCUT_EXPORT drcut_status drcut_scenario_w_range(const drcut_scenario* scen,
                                                 double* w_lo, double* w_hi) {
    return guarded([&] {
        require(scen != nullptr, "drcut_scenario_w_range: scen is null");
        if (w_lo != nullptr) *w_lo = scen->v.w_lo;
        if (w_hi != nullptr) *w_hi = scen->v.w_hi;
    });
}

DRCUT_EXPORT void drcut_scenario_free(drcut_scenario* scen) { delete scen; }

// ----------------------------------------------------------------- cohort --

DRCUT_EXPORT drcut_status drcut_simulate(const drcut_scenario* scen, long n,
                                         uint64_t seed, int workers,
                                         drcut_cohort** out) {
    return guarded([&] {
        require(scen != nullptr && out != nullptr, "drcut_simulate: null argument");
        auto full = drcut::simulate_cohort(scen->v, n, seed, workers);
        *out = new drcut_cohort{drcut::observe_cohort(full, scen->v.eta)};
    });
}

DRCUT_EXPORT drcut_status drcut_cohort_write_csv(const drcut_cohort* cohort,
                                                 const char* path) {
    return guarded([&] {
        require(cohort != nullptr && path != nullptr,
                "drcut_cohort_write_csv: null argument");
        drcut::write_cohort_csv(path, cohort->v);
    });
}

DRCUT_EXPORT drcut_status drcut_cohort_read_csv(const char* path, double eta,
                                                drcut_cohort** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_cohort_read_csv: null argument");
        *out = new drcut_cohort{drcut::read_cohort_csv(path, eta)};
    });
}

DRCUT_EXPORT long drcut_cohort_size(const drcut_cohort* cohort) {
    return cohort == nullptr ? -1 : static_cast<long>(cohort->v.size());
}

DRCUT_EXPORT void drcut_cohort_free(drcut_cohort* cohort) { delete cohort; }

// -------------------------------------------------------------- nuisances --

DRCUT_EXPORT drcut_status drcut_oracle_censoring(const drcut_scenario* scen,
                                                 drcut_hazard** out) {
    return guarded([&] {
        require(scen != nullptr && out != nullptr, "drcut_oracle_censoring: null argument");
        *out = new drcut_hazard{drcut::oracle_censoring(scen->v)};
    });
}

DRCUT_EXPORT drcut_status drcut_oracle_transitions(const drcut_scenario* scen,
                                                   drcut_transitions** out) {
    return guarded([&] {
        require(scen != nullptr && out != nullptr,
                "drcut_oracle_transitions: null argument");
        *out = new drcut_transitions{drcut::oracle_transitions(scen->v)};
    });
}

DRCUT_EXPORT drcut_status drcut_fit_censoring_hal(const drcut_cohort* cohort,
                                                  const char* hal_json,
                                                  drcut_hazard** out, char** info_json) {
    return guarded([&] {
        require(cohort != nullptr && out != nullptr,
                "drcut_fit_censoring_hal: null argument");
        auto config = hal_from_text(hal_json, "hal config");
        auto fit = drcut::fit_hal_hazard(cohort->v, drcut::HalTarget::kCensoring, config);
        if (info_json != nullptr) {
            json info = {{"lambda", fit.lambda},
                         {"nonzero", fit.nonzero},
                         {"lambda_path", fit.lambda_path},
                         {"cv_loss", fit.cv_loss}};
            emit_string(info_json, info.dump());
        }
        *out = new drcut_hazard{fit.hazard};
    });
}

DRCUT_EXPORT drcut_status drcut_fit_censoring_parametric(const drcut_cohort* cohort,
                                                         double eta, drcut_hazard** out,
                                                         char** info_json) {
    return guarded([&] {
        require(cohort != nullptr && out != nullptr,
                "drcut_fit_censoring_parametric: null argument");
        auto fit = drcut::fit_parametric_censoring(cohort->v, eta);
        if (info_json != nullptr) {
            json info = {{"b0", fit.b0},
                         {"b1", fit.b1},
                         {"b2", fit.b2},
                         {"iterations", fit.iterations},
                         {"loglik", fit.loglik}};
            emit_string(info_json, info.dump());
        }
        *out = new drcut_hazard{drcut::parametric_censoring_hazard(fit)};
    });
}

DRCUT_EXPORT drcut_status drcut_fit_transitions_hal(const drcut_cohort* cohort,
                                                    const char* hal_json, int workers,
                                                    drcut_transitions** out) {
    return guarded([&] {
        require(cohort != nullptr && out != nullptr,
                "drcut_fit_transitions_hal: null argument");
        auto config = hal_from_text(hal_json, "hal config");
        *out = new drcut_transitions{
            drcut::fit_hal_transitions(cohort->v, config, workers)};
    });
}

DRCUT_EXPORT double drcut_hazard_rate(const drcut_hazard* hazard, double t,
                                      double entry, double w) {
    return hazard == nullptr ? std::nan("") : hazard->v->rate(t, entry, w);
}

DRCUT_EXPORT drcut_status drcut_hazard_save(const drcut_hazard* hazard,
                                            const char* path) {
    return guarded([&] {
        require(hazard != nullptr && path != nullptr, "drcut_hazard_save: null argument");
        drcut::save_hazard(path, *hazard->v);
    });
}

DRCUT_EXPORT drcut_status drcut_hazard_load(const char* path, drcut_hazard** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_hazard_load: null argument");
        *out = new drcut_hazard{drcut::load_hazard(path)};
    });
}

DRCUT_EXPORT drcut_status drcut_transitions_save(const drcut_transitions* trans,
                                                 const char* path) {
    return guarded([&] {
        require(trans != nullptr && path != nullptr,
                "drcut_transitions_save: null argument");
        drcut::save_transitions(path, trans->v);
    });
}

DRCUT_EXPORT drcut_status drcut_transitions_load(const char* path,
                                                 drcut_transitions** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_transitions_load: null argument");
        *out = new drcut_transitions{drcut::load_transitions(path)};
    });
}

DRCUT_EXPORT void drcut_hazard_free(drcut_hazard* hazard) { delete hazard; }

DRCUT_EXPORT void drcut_transitions_free(drcut_transitions* trans) { delete trans; }

// ------------------------------------------------------------ value tables --

DRCUT_EXPORT drcut_status drcut_tables_build(const drcut_transitions* trans,
                                             const char* grid_json,
                                             const double* extra_w, size_t n_extra,
                                             int workers, drcut_tables** out) {
    return guarded([&] {
        require(trans != nullptr && out != nullptr, "drcut_tables_build: null argument");
        auto grid = grid_from_json(parse_object(grid_json, "grid"), "grid",
                                   drcut::ValueGridSpec{});
        auto extra = copy_points(extra_w, n_extra, "extra_w");
        *out = new drcut_tables{drcut::ValueTables::build(trans->v, grid, extra, workers)};
    });
}

DRCUT_EXPORT drcut_status drcut_tables_oracle(const drcut_scenario* scen,
                                              const char* grid_json,
                                              const double* extra_w, size_t n_extra,
                                              int workers, drcut_tables** out) {
    return guarded([&] {
        require(scen != nullptr && out != nullptr, "drcut_tables_oracle: null argument");
        drcut::ValueGridSpec base;
        base.eta = scen->v.eta;
        base.w_lo = scen->v.w_lo;
        base.w_hi = scen->v.w_hi;
        auto grid = grid_from_json(parse_object(grid_json, "grid"), "grid", base);
        auto extra = copy_points(extra_w, n_extra, "extra_w");
        *out = new drcut_tables{drcut::ValueTables::build(
            drcut::oracle_transitions(scen->v), grid, extra, workers)};
    });
}

DRCUT_EXPORT double drcut_tables_v1(const drcut_tables* tables, double t, double w) {
    if (tables == nullptr) return std::nan("");
    try {
        return tables->v->v1(t, w);
    } catch (const std::exception& e) {
        t_error = e.what();
        return std::nan("");
    }
}

DRCUT_EXPORT double drcut_tables_v2(const drcut_tables* tables, double t, double s,
                                    double w) {
    if (tables == nullptr) return std::nan("");
    try {
        return tables->v->v2(t, s, w);
    } catch (const std::exception& e) {
        t_error = e.what();
        return std::nan("");
    }
}

DRCUT_EXPORT drcut_status drcut_tables_save(const drcut_tables* tables,
                                            const char* path) {
    return guarded([&] {
        require(tables != nullptr && path != nullptr, "drcut_tables_save: null argument");
        tables->v->save(path);
    });
}

DRCUT_EXPORT drcut_status drcut_tables_load(const char* path, drcut_tables** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_tables_load: null argument");
        *out = new drcut_tables{drcut::ValueTables::load(path)};
    });
}

DRCUT_EXPORT drcut_status drcut_tables_export_csv(const drcut_tables* tables,
                                                  const char* path) {
    return guarded([&] {
        require(tables != nullptr && path != nullptr,
                "drcut_tables_export_csv: null argument");
        tables->v->export_csv(path);
    });
}

DRCUT_EXPORT void drcut_tables_free(drcut_tables* tables) { delete tables; }

// --------------------------------------------------------- pseudo-outcomes --

DRCUT_EXPORT drcut_status drcut_transform(const drcut_cohort* cohort,
                                          const drcut_hazard* cens, double epsilon,
                                          const drcut_tables* outcome,
                                          const char* options_json, drcut_pseudo** out) {
    return guarded([&] {
        require(cohort != nullptr && cens != nullptr && out != nullptr,
                "drcut_transform: null argument");
        const char* what = "transform options";
        json j = parse_object(options_json, what);
        check_keys(j, what,
                   {"variant", "quad_step", "censoring_kind", "outcome_kind", "eta",
                    "arm", "propensity", "workers"});
        drcut::TransformOptions o;
        o.variant = drcut::variant_from_name(
            get_string(j, what, "variant", drcut::variant_name(o.variant)));
        o.quad_step = get_number(j, what, "quad_step", o.quad_step);
        o.censoring_kind = get_string(j, what, "censoring_kind", o.censoring_kind);
        o.outcome_kind = get_string(j, what, "outcome_kind", o.outcome_kind);
        o.eta = get_number(j, what, "eta", o.eta);
        o.arm = get_int(j, what, "arm", o.arm);
        o.propensity = get_number(j, what, "propensity", o.propensity);
        o.workers = get_int(j, what, "workers", o.workers);
        drcut::CensoringModel model(cens->v, epsilon);
        drcut::ValueTablesPtr tables;
        if (outcome != nullptr) tables = outcome->v;
        *out = new drcut_pseudo{drcut::transform_cohort(cohort->v, model, tables, o)};
    });
}

DRCUT_EXPORT drcut_status drcut_pseudo_write_csv(const drcut_pseudo* pseudo,
                                                 const char* path) {
    return guarded([&] {
        require(pseudo != nullptr && path != nullptr,
                "drcut_pseudo_write_csv: null argument");
        drcut::write_pseudo_csv(path, pseudo->v);
    });
}

DRCUT_EXPORT drcut_status drcut_pseudo_read_csv(const char* path, drcut_pseudo** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "drcut_pseudo_read_csv: null argument");
        *out = new drcut_pseudo{drcut::read_pseudo_csv(path)};
    });
}

DRCUT_EXPORT long drcut_pseudo_size(const drcut_pseudo* pseudo) {
    return pseudo == nullptr ? -1 : static_cast<long>(pseudo->v.size());
}

DRCUT_EXPORT void drcut_pseudo_free(drcut_pseudo* pseudo) { delete pseudo; }

// -------------------------------------------------------------- regression --

DRCUT_EXPORT double drcut_bandwidth_rule(double n, double c) {
    return drcut::bandwidth_rule(n, c);
}

DRCUT_EXPORT drcut_status drcut_regress(const drcut_pseudo* pseudo, const double* grid,
                                        size_t n_grid, double h, const char* kernel,
                                        char** curve_json) {
    return guarded([&] {
        require(pseudo != nullptr && curve_json != nullptr,
                "drcut_regress: null argument");
        auto pts = copy_points(grid, n_grid, "grid");
        auto k = kernel == nullptr ? drcut::Kernel::kEpanechnikov
                                   : drcut::kernel_from_name(kernel);
        auto curve = drcut::regress_curve(pseudo->v, pts, h, k);
        emit_string(curve_json, curve_to_json(curve).dump());
    });
}

DRCUT_EXPORT drcut_status drcut_curve_write_csv(const char* curve_json, double level,
                                                const char* path) {
    return guarded([&] {
        require(curve_json != nullptr && path != nullptr,
                "drcut_curve_write_csv: null argument");
        drcut::write_curve_csv(path, curve_from_json(curve_json), level);
    });
}

// ---------------------------------------------------------------- crossfit --

DRCUT_EXPORT drcut_status drcut_crossfit_point(const drcut_cohort* cohort,
                                               const drcut_scenario* scen,
                                               const char* pipeline_json, double w0,
                                               int k, uint64_t fold_seed,
                                               char** result_json) {
    return guarded([&] {
        require(cohort != nullptr && scen != nullptr && result_json != nullptr,
                "drcut_crossfit_point: null argument");
        auto config = pipeline_from_text(pipeline_json);
        auto r = drcut::crossfit_estimate(cohort->v, scen->v, config, w0, k, fold_seed);
        json folds = json::array();
        for (const auto& f : r.folds)
            folds.push_back({{"estimate", f.estimate}, {"se", f.se}, {"n", f.n}});
        json doc = {{"w0", r.w0},
                    {"k", r.k},
                    {"cf_estimate", r.cf_estimate},
                    {"cf_se", r.cf_se},
                    {"folds", folds}};
        emit_string(result_json, doc.dump());
    });
}

DRCUT_EXPORT drcut_status drcut_crossfit_curve(const drcut_cohort* cohort,
                                               const drcut_scenario* scen,
                                               const char* pipeline_json,
                                               const double* grid, size_t n_grid, int k,
                                               uint64_t fold_seed, char** curve_json) {
    return guarded([&] {
        require(cohort != nullptr && scen != nullptr && curve_json != nullptr,
                "drcut_crossfit_curve: null argument");
        auto config = pipeline_from_text(pipeline_json);
        auto pts = copy_points(grid, n_grid, "grid");
        auto curve = drcut::crossfit_curve(cohort->v, scen->v, config, pts, k, fold_seed);
        emit_string(curve_json, curve_to_json(curve).dump());
    });
}

// --------------------------------------------------------------------- rdd --

DRCUT_EXPORT drcut_status drcut_fuzzy_rdd(const drcut_pseudo* pseudo_y,
                                          const drcut_pseudo* pseudo_a,
                                          const char* options_json, char** result_json) {
    return guarded([&] {
        require(pseudo_y != nullptr && pseudo_a != nullptr && result_json != nullptr,
                "drcut_fuzzy_rdd: null argument");
        auto options = rdd_options_from_text(options_json);
        auto r = drcut::fuzzy_rdd(pseudo_y->v, pseudo_a->v, options);
        emit_string(result_json, rdd_to_json(r).dump());
    });
}

DRCUT_EXPORT drcut_status drcut_rdd_sensitivity(const drcut_pseudo* pseudo_y,
                                                const drcut_pseudo* pseudo_a,
                                                const char* options_json,
                                                const double* h_list, size_t n_h,
                                                char** rows_json) {
    return guarded([&] {
        require(pseudo_y != nullptr && pseudo_a != nullptr && rows_json != nullptr,
                "drcut_rdd_sensitivity: null argument");
        auto options = rdd_options_from_text(options_json);
        auto hs = copy_points(h_list, n_h, "h_list");
        auto rows = drcut::rdd_sensitivity(pseudo_y->v, pseudo_a->v, options, hs);
        json arr = json::array();
        for (const auto& row : rows) {
            json r = row.ok ? rdd_to_json(row.result) : json::object();
            r["h"] = row.h;
            r["ok"] = row.ok;
            r["error"] = row.error;
            arr.push_back(std::move(r));
        }
        emit_string(rows_json, arr.dump());
    });
}

DRCUT_EXPORT drcut_status drcut_binned_means(const drcut_pseudo* pseudo, double lo,
                                             double hi, double width, char** json_out) {
    return guarded([&] {
        require(pseudo != nullptr && json_out != nullptr,
                "drcut_binned_means: null argument");
        auto bins = drcut::binned_means(pseudo->v, lo, hi, width);
        json arr = json::array();
        for (const auto& b : bins)
            arr.push_back({{"center", b.center}, {"mean", b.mean}, {"count", b.count}});
        emit_string(json_out, arr.dump());
    });
}

// ------------------------------------------------------------- experiment --

DRCUT_EXPORT drcut_status drcut_run_experiment(const char* config_path,
                                               const char* out_dir,
                                               int workers_override,
                                               char** summary_json) {
    return guarded([&] {
        require(config_path != nullptr, "drcut_run_experiment: config_path is null");
        auto config = drcut::ExperimentConfig::load(config_path);
        if (workers_override >= 0) config.workers = workers_override;
        std::string dir = out_dir == nullptr ? "" : out_dir;
        auto result = drcut::run_experiment(config, dir);
        if (summary_json != nullptr) {
            json aggs = json::array();
            for (const auto& a : result.aggregates) {
                json cov = json::object();
                for (std::size_t li = 0; li < config.levels.size(); ++li) {
                    char key[32];
                    std::snprintf(key, sizeof key, "%g", config.levels[li]);
                    cov[key] = a.coverage[li];
                }
                aggs.push_back({{"n", a.n},
                                {"estimator", drcut::estimator_name(a.estimator)},
                                {"n_ok", a.n_ok},
                                {"n_failed", a.n_failed},
                                {"l2_mean", a.l2_mean},
                                {"l2_sd", a.l2_sd},
                                {"mean_estimate", a.mean_estimate},
                                {"sd_estimate", a.sd_estimate},
                                {"mean_se", a.mean_se},
                                {"coverage", cov}});
            }
            json doc = {{"grid", result.grid},
                        {"truth", result.truth},
                        {"failures", result.failures},
                        {"aggregates", aggs}};
            emit_string(summary_json, doc.dump());
        }
    });
}

// --------------------------------------------------------------- diagnose --

DRCUT_EXPORT drcut_status drcut_bias_diagnostic(const drcut_scenario* scen, double w,
                                                const drcut_hazard* cens1,
                                                double epsilon,
                                                const drcut_tables* outcome2,
                                                const drcut_tables* truth, size_t n_mc,
                                                uint64_t seed, double quad_step,
                                                int workers, char** json_out) {
    return guarded([&] {
        require(scen != nullptr && cens1 != nullptr && outcome2 != nullptr &&
                    truth != nullptr && json_out != nullptr,
                "drcut_bias_diagnostic: null argument");
        drcut::CensoringModel model(cens1->v, epsilon);
        auto d = drcut::oracle_bias_diagnostic(scen->v, w, model, *outcome2->v,
                                               *truth->v, n_mc, seed, quad_step, workers);
        json doc = {{"mean", d.mean}, {"se", d.se}, {"n", d.n}};
        emit_string(json_out, doc.dump());
    });
}

DRCUT_EXPORT drcut_status drcut_nuisance_norms(const drcut_cohort* cohort,
                                               const drcut_scenario* scen,
                                               const drcut_hazard* cens, double epsilon,
                                               const drcut_tables* outcome,
                                               const drcut_tables* truth, double w0,
                                               double h, size_t paths_per_point,
                                               uint64_t seed, int workers,
                                               char** json_out) {
    return guarded([&] {
        require(cohort != nullptr && scen != nullptr && cens != nullptr &&
                    truth != nullptr && json_out != nullptr,
                "drcut_nuisance_norms: null argument");
        std::vector<double> ws;
        ws.reserve(cohort->v.size());
        for (const auto& s : cohort->v) ws.push_back(s.w);
        auto weights = drcut::smoother_weights(ws, w0, h);
        drcut::FittedNuisances fit;
        fit.cens = std::make_shared<drcut::CensoringModel>(cens->v, epsilon);
        if (outcome != nullptr) fit.outcome = outcome->v;
        auto norms = drcut::nuisance_error_norms(fit, scen->v, *truth->v, ws, weights,
                                                 paths_per_point, seed, workers);
        double sum_abs = 0.0;
        for (double p : weights) sum_abs += std::abs(p);
        json doc = {{"outcome_norm", norms.outcome_norm},
                    {"hazard_norm", norms.hazard_norm},
                    {"weight_sum_abs", sum_abs}};
        emit_string(json_out, doc.dump());
    });
}
