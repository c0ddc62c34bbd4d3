#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/hazard.hpp"
#include "core/parallel.hpp"
#include "core/simulate.hpp"

namespace drcut {

namespace {

constexpr EstimatorKind kAllEstimators[] = {
    EstimatorKind::kPluginLite, EstimatorKind::kIpcwOracle,  EstimatorKind::kIpcwHal,
    EstimatorKind::kIpcwMisspec, EstimatorKind::kDrOracle,   EstimatorKind::kDrHal,
    EstimatorKind::kDrMisspec,
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

const char* estimator_name(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::kPluginLite: return "plugin-lite";
        case EstimatorKind::kIpcwOracle: return "ipcw-oracle";
        case EstimatorKind::kIpcwHal: return "ipcw-hal";
        case EstimatorKind::kIpcwMisspec: return "ipcw-misspec";
        case EstimatorKind::kDrOracle: return "dr-oracle";
        case EstimatorKind::kDrHal: return "dr-hal";
        case EstimatorKind::kDrMisspec: return "dr-misspec";
    }
    throw InvalidArgument("unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
    for (EstimatorKind e : kAllEstimators)
        if (name == estimator_name(e)) return e;
    throw InvalidArgument("unknown estimator name: " + name);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix64(splitmix64(splitmix64(a) + b) + c);
}

double l2_error(const std::vector<double>& grid, const std::vector<double>& est,
                const std::vector<double>& truth) {
    if (grid.size() < 2 || est.size() != grid.size() || truth.size() != grid.size())
        throw InvalidArgument("l2 error: curve grids do not match");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double d0 = est[i] - truth[i];
        double d1 = est[i + 1] - truth[i + 1];
        acc += (grid[i + 1] - grid[i]) * 0.5 * (d0 * d0 + d1 * d1);
    }
    return std::sqrt(acc);
}

std::vector<double> ExperimentConfig::grid() const {
    double span = grid_hi - grid_lo;
    auto npts = static_cast<std::size_t>(std::lround(span / grid_step)) + 1;
    std::vector<double> pts(npts);
    for (std::size_t i = 0; i < npts; ++i) pts[i] = grid_lo + static_cast<double>(i) * grid_step;
    pts.back() = grid_hi;
    return pts;
}

void ExperimentConfig::validate() const {
    scenario.validate();
    if (n_list.empty()) throw InvalidArgument("experiment: empty n list");
    for (long n : n_list)
        if (n < 4) throw InvalidArgument("experiment: sample size must be at least 4");
    if (replications < 1) throw InvalidArgument("experiment: replication count must be >= 1");
    if (estimators.empty()) throw InvalidArgument("experiment: empty estimator menu");
    if (!(bandwidth_c > 0.0)) throw InvalidArgument("experiment: bandwidth constant must be > 0");
    if (k_folds < 1) throw InvalidArgument("experiment: fold count must be >= 1");
    if (!(grid_step > 0.0) || !(grid_hi > grid_lo))
        throw InvalidArgument("experiment: bad evaluation grid");
    double m = (grid_hi - grid_lo) / grid_step;
    if (std::abs(m - std::round(m)) > 1e-9)
        throw InvalidArgument("experiment: grid step must divide the grid span");
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw InvalidArgument("experiment: epsilon must lie in (0, 1)");
    if (!(quad_step > 0.0)) throw InvalidArgument("experiment: quadrature step must be > 0");
    if (levels.empty()) throw InvalidArgument("experiment: empty confidence level list");
    for (double l : levels)
        if (!(l > 0.0) || !(l < 1.0))
            throw InvalidArgument("experiment: confidence levels must lie in (0, 1)");
}

ExperimentConfig ExperimentConfig::from_config(const ConfigMap& cfg) {
    static const std::set<std::string> allowed = {
        "scenario_file",    "n_list",
        "replications",     "estimators",
        "bandwidth_c",      "k_folds",
        "grid.lo",          "grid.hi",
        "grid.step",        "master_seed",
        "epsilon",          "quad_step",
        "kernel",           "levels",
        "workers",          "hal.knots_per_margin",
        "hal.max_order",    "hal.n_lambda",
        "hal.lambda_min_ratio", "hal.cv_folds",
        "hal.tol",          "hal.max_sweeps",
        "table.t_step",     "table.s_step",
        "table.store_stride", "table.w_step",
    };
    cfg.require_known_keys(allowed);

    ExperimentConfig out;
    if (cfg.has("scenario_file")) {
        std::filesystem::path p = cfg.get_string("scenario_file");
        if (p.is_relative() && !cfg.origin().empty() && cfg.origin().front() != '<') {
            auto parent = std::filesystem::path(cfg.origin()).parent_path();
            if (!parent.empty()) p = parent / p;
        }
        out.scenario = ScenarioConfig::load(p.string());
    }
    if (cfg.has("n_list")) {
        out.n_list.clear();
        for (double v : cfg.get_doubles("n_list")) out.n_list.push_back(std::lround(v));
    }
    out.replications = static_cast<int>(cfg.get_long("replications", out.replications));
    if (cfg.has("estimators")) {
        out.estimators.clear();
        for (const auto& name : cfg.get_strings("estimators"))
            out.estimators.push_back(estimator_from_name(name));
    }
    out.bandwidth_c = cfg.get_double("bandwidth_c", out.bandwidth_c);
    out.k_folds = static_cast<int>(cfg.get_long("k_folds", out.k_folds));
    out.grid_lo = cfg.get_double("grid.lo", out.grid_lo);
    out.grid_hi = cfg.get_double("grid.hi", out.grid_hi);
    out.grid_step = cfg.get_double("grid.step", out.grid_step);
    out.master_seed = static_cast<std::uint64_t>(cfg.get_long("master_seed",
                                                              static_cast<long>(out.master_seed)));
    out.epsilon = cfg.get_double("epsilon", out.epsilon);
    out.quad_step = cfg.get_double("quad_step", out.quad_step);
    if (cfg.has("kernel")) out.kernel = kernel_from_name(cfg.get_string("kernel"));
    if (cfg.has("levels")) out.levels = cfg.get_doubles("levels");
    out.workers = static_cast<int>(cfg.get_long("workers", out.workers));
    out.hal.knots_per_margin =
        static_cast<int>(cfg.get_long("hal.knots_per_margin", out.hal.knots_per_margin));
    out.hal.max_order = static_cast<int>(cfg.get_long("hal.max_order", out.hal.max_order));
    out.hal.n_lambda = static_cast<int>(cfg.get_long("hal.n_lambda", out.hal.n_lambda));
    out.hal.lambda_min_ratio = cfg.get_double("hal.lambda_min_ratio", out.hal.lambda_min_ratio);
    out.hal.cv_folds = static_cast<int>(cfg.get_long("hal.cv_folds", out.hal.cv_folds));
    out.hal.tol = cfg.get_double("hal.tol", out.hal.tol);
    out.hal.max_sweeps = static_cast<int>(cfg.get_long("hal.max_sweeps", out.hal.max_sweeps));
    out.table_grid.t_step = cfg.get_double("table.t_step", out.table_grid.t_step);
    out.table_grid.s_step = cfg.get_double("table.s_step", out.table_grid.s_step);
    out.table_grid.store_stride =
        static_cast<int>(cfg.get_long("table.store_stride", out.table_grid.store_stride));
    out.table_grid.w_step = cfg.get_double("table.w_step", out.table_grid.w_step);
    out.validate();
    return out;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_config(ConfigMap::parse_file(path));
}

namespace {

struct EstimatorPlan {
    bool plugin = false;
    PseudoVariant variant = PseudoVariant::kDr;
    CensEstimator cens = CensEstimator::kOracle;
    OutcomeEstimator outcome = OutcomeEstimator::kOracle;
    int k = 1;
};

EstimatorPlan plan_for(EstimatorKind kind, int k_folds) {
    EstimatorPlan p;
    switch (kind) {
        case EstimatorKind::kPluginLite:
            p.plugin = true;
            return p;
        case EstimatorKind::kIpcwOracle:
            p.variant = PseudoVariant::kIpcw;
            p.cens = CensEstimator::kOracle;
            return p;
        case EstimatorKind::kIpcwHal:
            p.variant = PseudoVariant::kIpcw;
            p.cens = CensEstimator::kHal;
            p.k = k_folds;
            return p;
        case EstimatorKind::kIpcwMisspec:
            p.variant = PseudoVariant::kIpcw;
            p.cens = CensEstimator::kParametric;
            p.k = k_folds;
            return p;
        case EstimatorKind::kDrOracle:
            p.variant = PseudoVariant::kDr;
            p.cens = CensEstimator::kOracle;
            p.outcome = OutcomeEstimator::kOracle;
            return p;
        case EstimatorKind::kDrHal:
            p.variant = PseudoVariant::kDr;
            p.cens = CensEstimator::kHal;
            p.outcome = OutcomeEstimator::kHal;
            p.k = k_folds;
            return p;
        case EstimatorKind::kDrMisspec:
            p.variant = PseudoVariant::kDr;
            p.cens = CensEstimator::kParametric;
            p.outcome = OutcomeEstimator::kHal;
            p.k = k_folds;
            return p;
    }
    throw InvalidArgument("unknown estimator kind");
}

std::vector<CurvePoint> plugin_curve(const std::vector<ObservedSubject>& data,
                                     const ScenarioConfig& scen, const ExperimentConfig& cfg,
                                     const std::vector<double>& grid) {
    HalConfig hal = cfg.hal;
    hal.workers = 1;
    auto trans = fit_hal_transitions(data, hal, 1);
    ValueGridSpec g = cfg.table_grid;
    g.eta = scen.eta;
    g.w_lo = scen.w_lo;
    g.w_hi = scen.w_hi;
    auto tables = ValueTables::build(trans, g, grid, 1);
    std::vector<CurvePoint> curve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) curve[i] = {grid[i], tables->v1(0.0, grid[i]), 0.0};
    return curve;
}

std::vector<CurvePoint> estimator_curve(EstimatorKind kind,
                                        const std::vector<ObservedSubject>& data,
                                        const ScenarioConfig& scen, const ExperimentConfig& cfg,
                                        const ValueTablesPtr& oracle_tables,
                                        const std::vector<double>& grid, std::uint64_t fold_seed) {
    auto plan = plan_for(kind, cfg.k_folds);
    if (plan.plugin) return plugin_curve(data, scen, cfg, grid);
    PipelineConfig pc;
    pc.variant = plan.variant;
    pc.cens = plan.cens;
    pc.outcome = plan.outcome;
    pc.epsilon = cfg.epsilon;
    pc.quad_step = cfg.quad_step;
    pc.bandwidth_c = cfg.bandwidth_c;
    pc.kernel = cfg.kernel;
    pc.hal = cfg.hal;
    pc.hal.workers = 1;
    pc.table_grid = cfg.table_grid;
    pc.oracle_tables = oracle_tables;
    pc.workers = 1;
    return crossfit_curve(data, scen, pc, grid, plan.k, fold_seed);
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res,
                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    fs::path dir(out_dir);

    {
        auto out = open_out(dir / "curves.csv");
        out << "n,estimator,rep,w,estimate,se\n";
        for (const auto& r : res.records) {
            if (!r.ok) continue;
            for (const auto& p : r.curve)
                out << r.n << ',' << estimator_name(r.estimator) << ',' << r.rep << ',' << p.w
                    << ',' << p.estimate << ',' << p.se << '\n';
        }
    }
    {
        auto out = open_out(dir / "l2.csv");
        out << "n,estimator,rep,ok,l2,error\n";
        for (const auto& r : res.records)
            out << r.n << ',' << estimator_name(r.estimator) << ',' << r.rep << ','
                << (r.ok ? 1 : 0) << ',' << (r.ok ? std::to_string(r.l2) : "") << ','
                << csv_quote(r.error) << '\n';
    }
    {
        auto out = open_out(dir / "coverage.csv");
        out << "n,estimator,level,w,coverage,n_ok\n";
        for (const auto& a : res.aggregates)
            for (std::size_t li = 0; li < cfg.levels.size(); ++li)
                for (std::size_t g = 0; g < res.grid.size(); ++g)
                    out << a.n << ',' << estimator_name(a.estimator) << ',' << cfg.levels[li]
                        << ',' << res.grid[g] << ',' << a.coverage[li][g] << ',' << a.n_ok << '\n';
    }

    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : res.records) {
        nlohmann::json rec{{"n", r.n},
                           {"rep", r.rep},
                           {"estimator", estimator_name(r.estimator)},
                           {"seed", std::to_string(r.seed)},
                           {"ok", r.ok}};
        if (r.ok) {
            rec["l2"] = r.l2;
            std::vector<double> w, est, se;
            for (const auto& p : r.curve) {
                w.push_back(p.w);
                est.push_back(p.estimate);
                se.push_back(p.se);
            }
            rec["w"] = w;
            rec["estimate"] = est;
            rec["se"] = se;
        } else {
            rec["error"] = r.error;
        }
        reps.push_back(std::move(rec));
    }
    open_out(dir / "replications.json") << reps.dump(1) << '\n';

    nlohmann::json agg = nlohmann::json::array();
    for (const auto& a : res.aggregates) {
        nlohmann::json cov;
        for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
            std::ostringstream key;
            key << cfg.levels[li];
            cov[key.str()] = a.coverage[li];
        }
        agg.push_back({{"n", a.n},
                       {"estimator", estimator_name(a.estimator)},
                       {"n_ok", a.n_ok},
                       {"n_failed", a.n_failed},
                       {"l2_mean", a.l2_mean},
                       {"l2_sd", a.l2_sd},
                       {"mean_estimate", a.mean_estimate},
                       {"sd_estimate", a.sd_estimate},
                       {"mean_se", a.mean_se},
                       {"coverage", cov}});
    }
    std::vector<std::string> est_names;
    for (EstimatorKind e : cfg.estimators) est_names.emplace_back(estimator_name(e));
    nlohmann::json summary{{"n_list", cfg.n_list},
                           {"replications", cfg.replications},
                           {"estimators", est_names},
                           {"bandwidth_c", cfg.bandwidth_c},
                           {"k_folds", cfg.k_folds},
                           {"master_seed", std::to_string(cfg.master_seed)},
                           {"epsilon", cfg.epsilon},
                           {"quad_step", cfg.quad_step},
                           {"kernel", kernel_name(cfg.kernel)},
                           {"levels", cfg.levels},
                           {"grid", res.grid},
                           {"truth", res.truth},
                           {"failures", res.failures},
                           {"scenario", cfg.scenario.to_config_text()},
                           {"aggregates", agg}};
    open_out(dir / "summary.json") << summary.dump(1) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    const auto& scen = config.scenario;

    ExperimentResult res;
    res.grid = config.grid();

    ValueGridSpec tg = config.table_grid;
    tg.eta = scen.eta;
    tg.w_lo = scen.w_lo;
    tg.w_hi = scen.w_hi;
    auto truth_tables = ValueTables::build(oracle_transitions(scen), tg, res.grid, config.workers);
    res.truth.reserve(res.grid.size());
    for (double w : res.grid) res.truth.push_back(truth_tables->v1(0.0, w));

    // Oracle-outcome pipelines share one table solve, built exactly as a
    // standalone pipeline would build it (no extra knots at the evaluation
    // grid), so chaining the individual commands reproduces the experiment
    // records bit for bit. The truth above keeps the grid knots: it is the
    // reference the curves are scored against, not an estimator input.
    auto pipeline_tables = ValueTables::build(oracle_transitions(scen), tg, {}, config.workers);

    std::size_t n_est = config.estimators.size();
    std::size_t reps = static_cast<std::size_t>(config.replications);
    std::size_t jobs = config.n_list.size() * reps;
    res.records.resize(jobs * n_est);

    parallel_for(
        jobs,
        [&](std::size_t j) {
            std::size_t n_idx = j / reps;
            int rep = static_cast<int>(j % reps);
            long n = config.n_list[n_idx];
            std::uint64_t sim_seed =
                mix_seed(config.master_seed, static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(rep));
            std::vector<ObservedSubject> data;
            std::string sim_error;
            try {
                data = observe_cohort(simulate_cohort(scen, n, sim_seed, 1), scen.eta);
            } catch (const std::exception& e) {
                sim_error = std::string("simulation: ") + e.what();
            }
            for (std::size_t ei = 0; ei < n_est; ++ei) {
                RepRecord& rec = res.records[j * n_est + ei];
                rec.n = n;
                rec.rep = rep;
                rec.estimator = config.estimators[ei];
                rec.seed = sim_seed;
                if (!sim_error.empty()) {
                    rec.error = sim_error;
                    continue;
                }
                try {
                    rec.curve = estimator_curve(rec.estimator, data, scen, config, pipeline_tables,
                                                res.grid, mix_seed(sim_seed, 0xf01d, ei));
                    std::vector<double> est(res.grid.size());
                    for (std::size_t g = 0; g < res.grid.size(); ++g)
                        est[g] = rec.curve[g].estimate;
                    rec.l2 = l2_error(res.grid, est, res.truth);
                    rec.ok = true;
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
            }
        },
        config.workers);

    for (std::size_t n_idx = 0; n_idx < config.n_list.size(); ++n_idx) {
        for (std::size_t ei = 0; ei < n_est; ++ei) {
            EstimatorAggregate a;
            a.n = config.n_list[n_idx];
            a.estimator = config.estimators[ei];
            a.mean_estimate.assign(res.grid.size(), 0.0);
            a.sd_estimate.assign(res.grid.size(), 0.0);
            a.mean_se.assign(res.grid.size(), 0.0);
            a.coverage.assign(config.levels.size(), std::vector<double>(res.grid.size(), 0.0));
            std::vector<double> zs;
            for (double l : config.levels) zs.push_back(normal_quantile(0.5 + l / 2.0));

            double l2_sum = 0.0, l2_sq = 0.0;
            for (std::size_t rep = 0; rep < reps; ++rep) {
                const RepRecord& rec = res.records[(n_idx * reps + rep) * n_est + ei];
                if (!rec.ok) {
                    ++a.n_failed;
                    continue;
                }
                ++a.n_ok;
                l2_sum += rec.l2;
                l2_sq += rec.l2 * rec.l2;
                for (std::size_t g = 0; g < res.grid.size(); ++g) {
                    double est = rec.curve[g].estimate, se = rec.curve[g].se;
                    a.mean_estimate[g] += est;
                    a.sd_estimate[g] += est * est;
                    a.mean_se[g] += se;
                    for (std::size_t li = 0; li < zs.size(); ++li)
                        if (std::abs(est - res.truth[g]) <= zs[li] * se) a.coverage[li][g] += 1.0;
                }
            }
            if (a.n_ok > 0) {
                double nn = a.n_ok;
                a.l2_mean = l2_sum / nn;
                a.l2_sd = a.n_ok > 1
                              ? std::sqrt(std::max(0.0, (l2_sq - nn * a.l2_mean * a.l2_mean) /
                                                            (nn - 1.0)))
                              : 0.0;
                for (std::size_t g = 0; g < res.grid.size(); ++g) {
                    double mean = a.mean_estimate[g] / nn;
                    double var = a.n_ok > 1 ? std::max(0.0, (a.sd_estimate[g] - nn * mean * mean) /
                                                                (nn - 1.0))
                                            : 0.0;
                    a.mean_estimate[g] = mean;
                    a.sd_estimate[g] = std::sqrt(var);
                    a.mean_se[g] /= nn;
                    for (auto& cov : a.coverage) cov[g] /= nn;
                }
            }
            res.failures += a.n_failed;
            res.aggregates.push_back(std::move(a));
        }
    }

    if (!out_dir.empty()) write_outputs(config, res, out_dir);
    return res;
}

}  // namespace drcut
