// Command-line front end. Every operation goes through the shared-library C
// interface; no core headers are used here.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "drcut/drcut.h"

namespace {

using nlohmann::json;

const char* status_class(drcut_status s) {
    switch (s) {
        case DRCUT_OK: return "ok";
        case DRCUT_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case DRCUT_ERR_PARSE: return "parse";
        case DRCUT_ERR_NUMERIC: return "numeric";
        case DRCUT_ERR_CONVERGENCE: return "convergence";
        case DRCUT_ERR_IO: return "io";
        case DRCUT_ERR_UNKNOWN: break;
    }
    return "unknown";
}

// Command failure carrying the exit status; caught once in main.
struct CommandError {
    drcut_status status;
    std::string message;
};

void check(drcut_status st, const std::string& context) {
    if (st != DRCUT_OK) throw CommandError{st, context + ": " + drcut_last_error()};
}

// RAII for the opaque handles.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Scenario = Handle<drcut_scenario, drcut_scenario_free>;
using Cohort = Handle<drcut_cohort, drcut_cohort_free>;
using Hazard = Handle<drcut_hazard, drcut_hazard_free>;
using Transitions = Handle<drcut_transitions, drcut_transitions_free>;
using Tables = Handle<drcut_tables, drcut_tables_free>;
using Pseudo = Handle<drcut_pseudo, drcut_pseudo_free>;

struct Str {
    char* ptr = nullptr;
    Str() = default;
    Str(const Str&) = delete;
    Str& operator=(const Str&) = delete;
    ~Str() { drcut_string_free(ptr); }
    char** out() { return &ptr; }
    std::string str() const { return ptr == nullptr ? "" : ptr; }
};

void load_scenario(const std::string& path, Scenario& scen) {
    if (path.empty())
        check(drcut_scenario_default(scen.out()), "building the default scenario");
    else
        check(drcut_scenario_load(path.c_str(), scen.out()), "loading scenario " + path);
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo))
        throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                           "grid: need lo <= hi and step > 0"};
    auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = lo + static_cast<double>(i) * step;
    return grid;
}

// Print to stdout when out_path is empty, else write the file.
void write_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::printf("%s\n", text.c_str());
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw CommandError{DRCUT_ERR_IO, "cannot open " + out_path};
    f << text << "\n";
}

json parse_user_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw CommandError{DRCUT_ERR_PARSE, what + ": " + e.what()};
    }
}

// The "kind" tag of a stored hazard document, as a provenance label for
// pseudo-outcome rows; falls back to "file" when unreadable.
std::string hazard_kind_label(const std::string& path) {
    std::ifstream f(path);
    if (!f) return "file";
    std::stringstream buf;
    buf << f.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_object() && j.contains("kind") && j["kind"].is_string())
        return j["kind"].get<std::string>();
    return "file";
}

// ---------------------------------------------------------------- simulate --

struct SimulateOpts {
    std::string config, out;
    long n = 1000;
    std::uint64_t seed = 1;
    int workers = 0;
};

int cmd_simulate(const SimulateOpts& o) {
    Scenario scen;
    load_scenario(o.config, scen);
    Cohort cohort;
    check(drcut_simulate(scen.get(), o.n, o.seed, o.workers, cohort.out()),
          "simulating the cohort");
    check(drcut_cohort_write_csv(cohort.get(), o.out.c_str()), "writing " + o.out);
    std::printf("wrote %ld subjects to %s\n", drcut_cohort_size(cohort.get()),
                o.out.c_str());
    return 0;
}

// ------------------------------------------------------------ fit-nuisance --

struct FitOpts {
    std::string config, in, cens, outcome, out, tables_out, transitions_out, hal;
    int workers = 0;
};

int cmd_fit_nuisance(const FitOpts& o) {
    Scenario scen;
    load_scenario(o.config, scen);
    double eta = drcut_scenario_eta(scen.get());
    Cohort cohort;
    check(drcut_cohort_read_csv(o.in.c_str(), eta, cohort.out()), "reading " + o.in);

    if (o.cens.empty() && o.outcome.empty())
        throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                           "fit-nuisance: nothing to do (pass --cens and/or --outcome)"};

    if (!o.cens.empty()) {
        if (o.out.empty())
            throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                               "fit-nuisance: --cens needs --out for the hazard file"};
        Hazard hazard;
        if (o.cens == "oracle") {
            check(drcut_oracle_censoring(scen.get(), hazard.out()),
                  "building the oracle censoring hazard");
        } else if (o.cens == "hal") {
            Str info;
            check(drcut_fit_censoring_hal(cohort.get(),
                                          o.hal.empty() ? nullptr : o.hal.c_str(),
                                          hazard.out(), info.out()),
                  "fitting the censoring hazard");
            json j = parse_user_json(info.str(), "fit info");
            std::printf("censoring fit: lambda %.6g, %d nonzero coefficients\n",
                        j["lambda"].get<double>(), j["nonzero"].get<int>());
        } else if (o.cens == "parametric") {
            Str info;
            check(drcut_fit_censoring_parametric(cohort.get(), eta, hazard.out(),
                                                 info.out()),
                  "fitting the parametric censoring hazard");
            json j = parse_user_json(info.str(), "fit info");
            std::printf("censoring fit: b0 %.6g, b1 %.6g, b2 %.6g\n",
                        j["b0"].get<double>(), j["b1"].get<double>(),
                        j["b2"].get<double>());
        } else {
            throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                               "fit-nuisance: --cens must be oracle, hal, or parametric"};
        }
        check(drcut_hazard_save(hazard.get(), o.out.c_str()), "writing " + o.out);
        std::printf("wrote censoring hazard to %s\n", o.out.c_str());
    }

    if (!o.outcome.empty()) {
        if (o.tables_out.empty())
            throw CommandError{
                DRCUT_ERR_INVALID_ARGUMENT,
                "fit-nuisance: --outcome needs --tables-out for the tables file"};
        Tables tables;
        if (o.outcome == "oracle") {
            check(drcut_tables_oracle(scen.get(), nullptr, nullptr, 0, o.workers,
                                      tables.out()),
                  "solving the oracle value tables");
        } else if (o.outcome == "hal") {
            Transitions trans;
            check(drcut_fit_transitions_hal(cohort.get(),
                                            o.hal.empty() ? nullptr : o.hal.c_str(),
                                            o.workers, trans.out()),
                  "fitting the transition hazards");
            if (!o.transitions_out.empty()) {
                check(drcut_transitions_save(trans.get(), o.transitions_out.c_str()),
                      "writing " + o.transitions_out);
                std::printf("wrote transition hazards to %s\n", o.transitions_out.c_str());
            }
            double w_lo = 0.0, w_hi = 0.0;
            check(drcut_scenario_w_range(scen.get(), &w_lo, &w_hi), "scenario range");
            json grid = {{"eta", eta}, {"w_lo", w_lo}, {"w_hi", w_hi}};
            check(drcut_tables_build(trans.get(), grid.dump().c_str(), nullptr, 0,
                                     o.workers, tables.out()),
                  "solving the value tables");
        } else {
            throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                               "fit-nuisance: --outcome must be oracle or hal"};
        }
        check(drcut_tables_save(tables.get(), o.tables_out.c_str()),
              "writing " + o.tables_out);
        std::printf("wrote value tables to %s\n", o.tables_out.c_str());
    }
    return 0;
}

// --------------------------------------------------------------- transform --

struct TransformOpts {
    std::string config, in, out, variant = "dr", cens, outcome;
    double epsilon = 0.01, quad_step = 0.01, propensity = 1.0;
    int arm = 1, workers = 0;
};

int cmd_transform(const TransformOpts& o) {
    Scenario scen;
    load_scenario(o.config, scen);
    double eta = drcut_scenario_eta(scen.get());
    Cohort cohort;
    check(drcut_cohort_read_csv(o.in.c_str(), eta, cohort.out()), "reading " + o.in);
    Hazard cens;
    check(drcut_hazard_load(o.cens.c_str(), cens.out()), "loading " + o.cens);
    Tables tables;
    if (!o.outcome.empty())
        check(drcut_tables_load(o.outcome.c_str(), tables.out()), "loading " + o.outcome);

    json options = {{"variant", o.variant},
                    {"quad_step", o.quad_step},
                    {"censoring_kind", hazard_kind_label(o.cens)},
                    {"outcome_kind", o.outcome.empty() ? "none" : "tables"},
                    {"eta", eta},
                    {"arm", o.arm},
                    {"propensity", o.propensity},
                    {"workers", o.workers}};
    Pseudo pseudo;
    check(drcut_transform(cohort.get(), cens.get(), o.epsilon, tables.get(),
                          options.dump().c_str(), pseudo.out()),
          "transforming the cohort");
    check(drcut_pseudo_write_csv(pseudo.get(), o.out.c_str()), "writing " + o.out);
    std::printf("wrote %ld pseudo-outcomes to %s\n", drcut_pseudo_size(pseudo.get()),
                o.out.c_str());
    return 0;
}

// ----------------------------------------------------------------- regress --

struct RegressOpts {
    std::string in, out, kernel = "epanechnikov";
    double h = 0.0, bandwidth_c = 4.0;
    double grid_lo = -4.0, grid_hi = 4.0, grid_step = 0.2;
    double level = 0.95;
};

int cmd_regress(const RegressOpts& o) {
    Pseudo pseudo;
    check(drcut_pseudo_read_csv(o.in.c_str(), pseudo.out()), "reading " + o.in);
    double h = o.h > 0.0 ? o.h
                         : drcut_bandwidth_rule(
                               static_cast<double>(drcut_pseudo_size(pseudo.get())),
                               o.bandwidth_c);
    auto grid = make_grid(o.grid_lo, o.grid_hi, o.grid_step);
    Str curve;
    check(drcut_regress(pseudo.get(), grid.data(), grid.size(), h, o.kernel.c_str(),
                        curve.out()),
          "regressing the pseudo-outcomes");
    check(drcut_curve_write_csv(curve.ptr, o.level, o.out.c_str()), "writing " + o.out);
    std::printf("wrote curve (%zu points, h %.4g) to %s\n", grid.size(), h,
                o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------- crossfit --

struct CrossfitOpts {
    std::string config, in, out, variant = "dr", cens = "oracle", outcome = "oracle";
    std::string kernel = "epanechnikov", hal;
    int k = 2, workers = 0;
    std::uint64_t fold_seed = 1;
    double w0 = 0.0;
    bool has_w0 = false;
    double epsilon = 0.01, quad_step = 0.01, bandwidth_c = 4.0;
    double grid_lo = -4.0, grid_hi = 4.0, grid_step = 0.2;
    double level = 0.95;
};

int cmd_crossfit(const CrossfitOpts& o) {
    Scenario scen;
    load_scenario(o.config, scen);
    Cohort cohort;
    check(drcut_cohort_read_csv(o.in.c_str(), drcut_scenario_eta(scen.get()),
                                cohort.out()),
          "reading " + o.in);

    json pipeline = {{"variant", o.variant},   {"cens", o.cens},
                     {"outcome", o.outcome},   {"epsilon", o.epsilon},
                     {"quad_step", o.quad_step}, {"bandwidth_c", o.bandwidth_c},
                     {"kernel", o.kernel},     {"workers", o.workers}};
    if (!o.hal.empty()) pipeline["hal"] = parse_user_json(o.hal, "--hal");

    if (o.has_w0) {
        Str result;
        check(drcut_crossfit_point(cohort.get(), scen.get(), pipeline.dump().c_str(),
                                   o.w0, o.k, o.fold_seed, result.out()),
              "cross-fitting");
        write_text(o.out, result.str());
        return 0;
    }
    auto grid = make_grid(o.grid_lo, o.grid_hi, o.grid_step);
    Str curve;
    check(drcut_crossfit_curve(cohort.get(), scen.get(), pipeline.dump().c_str(),
                               grid.data(), grid.size(), o.k, o.fold_seed, curve.out()),
          "cross-fitting");
    if (o.out.empty())
        throw CommandError{DRCUT_ERR_INVALID_ARGUMENT,
                           "crossfit: --out is required for curve output"};
    check(drcut_curve_write_csv(curve.ptr, o.level, o.out.c_str()), "writing " + o.out);
    std::printf("wrote cross-fitted curve (%zu points, k %d) to %s\n", grid.size(), o.k,
                o.out.c_str());
    return 0;
}

// --------------------------------------------------------------------- rdd --

struct RddOpts {
    std::string in_y, in_a, out, kernel = "epanechnikov", bins_out;
    double w0 = 0.0, h = 1.0, denom_floor = 0.05;
    bool boundary_left = false;
    std::vector<double> h_list;
    double bin_lo = -4.0, bin_hi = 4.0, bin_width = 0.2;
};

int cmd_rdd(const RddOpts& o) {
    Pseudo py, pa;
    check(drcut_pseudo_read_csv(o.in_y.c_str(), py.out()), "reading " + o.in_y);
    check(drcut_pseudo_read_csv(o.in_a.c_str(), pa.out()), "reading " + o.in_a);

    json options = {{"w0", o.w0},
                    {"h", o.h},
                    {"kernel", o.kernel},
                    {"denom_floor", o.denom_floor},
                    {"boundary_on_right", !o.boundary_left}};

    if (!o.bins_out.empty()) {
        Str bins;
        check(drcut_binned_means(py.get(), o.bin_lo, o.bin_hi, o.bin_width, bins.out()),
              "binning the outcome pseudo-values");
        std::ofstream f(o.bins_out);
        if (!f) throw CommandError{DRCUT_ERR_IO, "cannot open " + o.bins_out};
        f << "center,mean,count\n";
        for (const auto& b : parse_user_json(bins.str(), "bins"))
            f << b["center"].get<double>() << "," << b["mean"].get<double>() << ","
              << b["count"].get<long>() << "\n";
        std::printf("wrote binned means to %s\n", o.bins_out.c_str());
    }

    if (!o.h_list.empty()) {
        Str rows;
        check(drcut_rdd_sensitivity(py.get(), pa.get(), options.dump().c_str(),
                                    o.h_list.data(), o.h_list.size(), rows.out()),
              "bandwidth sensitivity");
        write_text(o.out, rows.str());
        return 0;
    }
    Str result;
    check(drcut_fuzzy_rdd(py.get(), pa.get(), options.dump().c_str(), result.out()),
          "fuzzy discontinuity fit");
    json j = parse_user_json(result.str(), "rdd result");
    std::printf("tau %.6g (se %.6g) at w0 %.6g, h %.6g\n", j["tau"].get<double>(),
                j["se"].get<double>(), j["w0"].get<double>(), j["h"].get<double>());
    if (!o.out.empty()) write_text(o.out, result.str());
    return 0;
}

// -------------------------------------------------------------- experiment --

struct ExperimentOpts {
    std::string config, out = "experiment_out";
    int workers = -1;
};

int cmd_experiment(const ExperimentOpts& o) {
    Str summary;
    check(drcut_run_experiment(o.config.c_str(), o.out.c_str(), o.workers,
                               summary.out()),
          "running the experiment");
    json j = parse_user_json(summary.str(), "summary");
    for (const auto& agg : j["aggregates"])
        std::printf("n %-6ld %-13s ok %d failed %d  L2 mean %.4f sd %.4f\n",
                    agg["n"].get<long>(), agg["estimator"].get<std::string>().c_str(),
                    agg["n_ok"].get<int>(), agg["n_failed"].get<int>(),
                    agg["l2_mean"].get<double>(), agg["l2_sd"].get<double>());
    std::printf("%d failed replications; outputs under %s\n", j["failures"].get<int>(),
                o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------- diagnose --

struct DiagnoseOpts {
    std::string config, in, cens, outcome, out;
    double w0 = 0.0, epsilon = 0.01, quad_step = 0.01;
    double h = 0.0, bandwidth_c = 4.0;
    long n_mc = 20000, paths = 200;
    std::uint64_t seed = 1;
    int workers = 0;
};

int cmd_diagnose(const DiagnoseOpts& o) {
    Scenario scen;
    load_scenario(o.config, scen);
    Hazard cens;
    check(drcut_hazard_load(o.cens.c_str(), cens.out()), "loading " + o.cens);
    Tables outcome;
    check(drcut_tables_load(o.outcome.c_str(), outcome.out()), "loading " + o.outcome);
    Tables truth;
    double w0 = o.w0;
    check(drcut_tables_oracle(scen.get(), nullptr, &w0, 1, o.workers, truth.out()),
          "solving the truth tables");

    Str bias;
    check(drcut_bias_diagnostic(scen.get(), o.w0, cens.get(), o.epsilon, outcome.get(),
                                truth.get(), static_cast<size_t>(o.n_mc), o.seed,
                                o.quad_step, o.workers, bias.out()),
          "bias diagnostic");
    json doc;
    doc["bias"] = parse_user_json(bias.str(), "bias");
    std::printf("conditional bias at w0 %.4g: %.6g (se %.6g)\n", o.w0,
                doc["bias"]["mean"].get<double>(), doc["bias"]["se"].get<double>());

    if (!o.in.empty()) {
        Cohort cohort;
        check(drcut_cohort_read_csv(o.in.c_str(), drcut_scenario_eta(scen.get()),
                                    cohort.out()),
              "reading " + o.in);
        double h = o.h > 0.0 ? o.h
                             : drcut_bandwidth_rule(
                                   static_cast<double>(drcut_cohort_size(cohort.get())),
                                   o.bandwidth_c);
        Str norms;
        check(drcut_nuisance_norms(cohort.get(), scen.get(), cens.get(), o.epsilon,
                                   outcome.get(), truth.get(), o.w0, h,
                                   static_cast<size_t>(o.paths), o.seed + 1, o.workers,
                                   norms.out()),
              "nuisance error norms");
        doc["norms"] = parse_user_json(norms.str(), "norms");
        std::printf("weighted nuisance errors: outcome %.6g, hazard %.6g\n",
                    doc["norms"]["outcome_norm"].get<double>(),
                    doc["norms"]["hazard_norm"].get<double>());
    }
    if (!o.out.empty()) write_text(o.out, doc.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"doubly robust censoring unbiased transforms"};
    app.require_subcommand(1);
    app.set_version_flag("--version", drcut_version());
    // --h is a real bandwidth option on several subcommands, so help must not
    // claim the -h short form. Subcommands inherit this flag.
    app.set_help_flag("--help", "print help and exit");
    app.footer(
        "Exit codes: 0 ok, 1 invalid argument, 2 parse, 3 numeric, 4 convergence,\n"
        "5 io, 6 unknown.");

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "simulate an observed cohort");
    c_sim->add_option("--config", sim.config, "scenario config file (default scenario if omitted)");
    c_sim->add_option("--n", sim.n, "number of subjects")->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", sim.seed, "master seed");
    c_sim->add_option("--workers", sim.workers, "worker threads (0 = hardware)");
    c_sim->add_option("--out", sim.out, "output cohort CSV")->required();

    FitOpts fit;
    auto* c_fit = app.add_subcommand("fit-nuisance", "fit censoring / outcome nuisances");
    c_fit->add_option("--config", fit.config, "scenario config file");
    c_fit->add_option("--in", fit.in, "cohort CSV")->required();
    c_fit->add_option("--cens", fit.cens, "censoring model: oracle, hal, or parametric");
    c_fit->add_option("--outcome", fit.outcome, "outcome model: oracle or hal");
    c_fit->add_option("--out", fit.out, "output hazard JSON (with --cens)");
    c_fit->add_option("--tables-out", fit.tables_out, "output tables file (with --outcome)");
    c_fit->add_option("--transitions-out", fit.transitions_out,
                      "also save fitted transition hazards as JSON");
    c_fit->add_option("--hal", fit.hal, "JSON overrides for the penalized fit");
    c_fit->add_option("--workers", fit.workers, "worker threads");

    TransformOpts tr;
    auto* c_tr = app.add_subcommand("transform", "pseudo-outcome transform of a cohort");
    c_tr->add_option("--config", tr.config, "scenario config file");
    c_tr->add_option("--in", tr.in, "cohort CSV")->required();
    c_tr->add_option("--variant", tr.variant, "ipcw, dr, oracle-dr, or causal");
    c_tr->add_option("--cens", tr.cens, "censoring hazard JSON file")->required();
    c_tr->add_option("--outcome", tr.outcome, "value tables file (omit for ipcw)");
    c_tr->add_option("--epsilon", tr.epsilon, "positivity floor");
    c_tr->add_option("--quad-step", tr.quad_step, "compensator quadrature step");
    c_tr->add_option("--arm", tr.arm, "treatment arm (causal variant)");
    c_tr->add_option("--propensity", tr.propensity, "arm probability (causal variant)");
    c_tr->add_option("--workers", tr.workers, "worker threads");
    c_tr->add_option("--out", tr.out, "output pseudo-outcome CSV")->required();

    RegressOpts reg;
    auto* c_reg = app.add_subcommand("regress", "local-linear curve from pseudo-outcomes");
    c_reg->add_option("--in", reg.in, "pseudo-outcome CSV")->required();
    c_reg->add_option("--h", reg.h, "bandwidth (overrides --bandwidth-c)");
    c_reg->add_option("--bandwidth-c", reg.bandwidth_c, "constant for h = c n^(-1/4.5)");
    c_reg->add_option("--kernel", reg.kernel, "epanechnikov or triangular");
    c_reg->add_option("--grid-lo", reg.grid_lo, "evaluation grid start");
    c_reg->add_option("--grid-hi", reg.grid_hi, "evaluation grid end");
    c_reg->add_option("--grid-step", reg.grid_step, "evaluation grid step");
    c_reg->add_option("--level", reg.level, "confidence band level");
    c_reg->add_option("--out", reg.out, "output curve CSV")->required();

    CrossfitOpts cf;
    auto* c_cf = app.add_subcommand("crossfit", "cross-fitted estimate (point or curve)");
    c_cf->add_option("--config", cf.config, "scenario config file");
    c_cf->add_option("--in", cf.in, "cohort CSV")->required();
    c_cf->add_option("--variant", cf.variant, "ipcw, dr, oracle-dr, or causal");
    c_cf->add_option("--cens", cf.cens, "censoring estimator: oracle, hal, parametric, zero");
    c_cf->add_option("--outcome", cf.outcome, "outcome estimator: oracle, hal, constant, zero");
    c_cf->add_option("--k", cf.k, "number of folds (1 = fit and regress on full data)");
    c_cf->add_option("--fold-seed", cf.fold_seed, "fold assignment seed");
    auto* w0_opt = c_cf->add_option("--w0", cf.w0, "single evaluation point (JSON output)");
    c_cf->add_option("--epsilon", cf.epsilon, "positivity floor");
    c_cf->add_option("--quad-step", cf.quad_step, "compensator quadrature step");
    c_cf->add_option("--bandwidth-c", cf.bandwidth_c, "constant for h = c n^(-1/4.5)");
    c_cf->add_option("--kernel", cf.kernel, "epanechnikov or triangular");
    c_cf->add_option("--hal", cf.hal, "JSON overrides for the penalized fits");
    c_cf->add_option("--grid-lo", cf.grid_lo, "evaluation grid start");
    c_cf->add_option("--grid-hi", cf.grid_hi, "evaluation grid end");
    c_cf->add_option("--grid-step", cf.grid_step, "evaluation grid step");
    c_cf->add_option("--level", cf.level, "confidence band level");
    c_cf->add_option("--workers", cf.workers, "worker threads");
    c_cf->add_option("--out", cf.out, "output file (CSV curve or JSON point)");

    RddOpts rdd;
    auto* c_rdd = app.add_subcommand("rdd", "fuzzy discontinuity estimate");
    c_rdd->add_option("--in-y", rdd.in_y, "outcome pseudo-value CSV")->required();
    c_rdd->add_option("--in-a", rdd.in_a, "treatment pseudo-value CSV")->required();
    c_rdd->add_option("--w0", rdd.w0, "threshold");
    c_rdd->add_option("--h", rdd.h, "bandwidth");
    c_rdd->add_option("--h-list", rdd.h_list, "bandwidth sensitivity sweep");
    c_rdd->add_option("--kernel", rdd.kernel, "epanechnikov or triangular");
    c_rdd->add_option("--denom-floor", rdd.denom_floor, "minimum treatment jump");
    c_rdd->add_flag("--boundary-left", rdd.boundary_left,
                    "points at w0 belong to the left side");
    c_rdd->add_option("--bins-out", rdd.bins_out, "also write binned means CSV");
    c_rdd->add_option("--bin-lo", rdd.bin_lo, "binning range start");
    c_rdd->add_option("--bin-hi", rdd.bin_hi, "binning range end");
    c_rdd->add_option("--bin-width", rdd.bin_width, "bin width");
    c_rdd->add_option("--out", rdd.out, "output JSON");

    ExperimentOpts exp;
    auto* c_exp = app.add_subcommand("experiment", "replication study from a config file");
    c_exp->add_option("--config", exp.config, "experiment config file")->required();
    c_exp->add_option("--out", exp.out, "output directory");
    c_exp->add_option("--workers", exp.workers, "worker threads (-1 = from config)");

    DiagnoseOpts diag;
    auto* c_diag = app.add_subcommand("diagnose", "bias diagnostic and nuisance error norms");
    c_diag->add_option("--config", diag.config, "scenario config file");
    c_diag->add_option("--w0", diag.w0, "evaluation point");
    c_diag->add_option("--cens", diag.cens, "censoring hazard JSON file")->required();
    c_diag->add_option("--outcome", diag.outcome, "value tables file")->required();
    c_diag->add_option("--in", diag.in, "cohort CSV (enables the error norms)");
    c_diag->add_option("--n-mc", diag.n_mc, "Monte Carlo paths for the bias estimate");
    c_diag->add_option("--paths", diag.paths, "conditional paths per norm point");
    c_diag->add_option("--seed", diag.seed, "Monte Carlo seed");
    c_diag->add_option("--h", diag.h, "norm weighting bandwidth");
    c_diag->add_option("--bandwidth-c", diag.bandwidth_c, "constant for h = c n^(-1/4.5)");
    c_diag->add_option("--epsilon", diag.epsilon, "positivity floor");
    c_diag->add_option("--quad-step", diag.quad_step, "quadrature step");
    c_diag->add_option("--workers", diag.workers, "worker threads");
    c_diag->add_option("--out", diag.out, "output JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(DRCUT_ERR_PARSE);
    }
    cf.has_w0 = w0_opt->count() > 0;

    try {
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_fit->parsed()) return cmd_fit_nuisance(fit);
        if (c_tr->parsed()) return cmd_transform(tr);
        if (c_reg->parsed()) return cmd_regress(reg);
        if (c_cf->parsed()) return cmd_crossfit(cf);
        if (c_rdd->parsed()) return cmd_rdd(rdd);
        if (c_exp->parsed()) return cmd_experiment(exp);
        if (c_diag->parsed()) return cmd_diagnose(diag);
    } catch (const CommandError& e) {
        std::fprintf(stderr, "drcut: error (%s): %s\n", status_class(e.status),
                     e.message.c_str());
        return static_cast<int>(e.status);
    }
    return 0;
}
