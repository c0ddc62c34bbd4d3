#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/crossfit.hpp"
#include "core/scenario.hpp"

namespace drcut {

// Estimator menu for the replication study. Each entry names a full pipeline
// from observed data to a regression curve on the evaluation grid:
//   plugin-lite   value tables built from hazards fit on the full data,
//                 read off directly (no pseudo-outcomes, no SEs)
//   ipcw-oracle   IPCW weights from the true censoring hazard
//   ipcw-hal      IPCW weights from the fitted spline censoring hazard
//   ipcw-misspec  IPCW weights from the covariate-free parametric fit
//   dr-oracle     doubly robust transform at the true nuisances
//   dr-hal        doubly robust, both nuisances fit by the spline models
//   dr-misspec    doubly robust, misspecified censoring + spline outcome
// Oracle pipelines regress on the full data; estimated ones cross-fit.
enum class EstimatorKind {
    kPluginLite,
    kIpcwOracle,
    kIpcwHal,
    kIpcwMisspec,
    kDrOracle,
    kDrHal,
    kDrMisspec,
};

const char* estimator_name(EstimatorKind e);
EstimatorKind estimator_from_name(const std::string& name);

// Deterministic seed derivation so replication (n, rep) gets the same stream
// no matter how work is scheduled or which subset of reps is run.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// sqrt of the trapezoid-rule integral of (est - truth)^2 over the grid.
double l2_error(const std::vector<double>& grid, const std::vector<double>& est,
                const std::vector<double>& truth);

struct ExperimentConfig {
    ScenarioConfig scenario;
    std::vector<long> n_list = {1000, 5000};
    int replications = 200;
    std::vector<EstimatorKind> estimators = {EstimatorKind::kDrOracle, EstimatorKind::kDrHal,
                                             EstimatorKind::kIpcwMisspec};
    double bandwidth_c = 4.0;
    int k_folds = 2;
    double grid_lo = -4.0;
    double grid_hi = 4.0;
    double grid_step = 0.2;
    std::uint64_t master_seed = 20260819;
    double epsilon = 0.01;
    double quad_step = 0.01;
    Kernel kernel = Kernel::kEpanechnikov;
    std::vector<double> levels = {0.90, 0.95, 0.99};
    HalConfig hal;
    ValueGridSpec table_grid;
    int workers = 0;

    std::vector<double> grid() const;
    void validate() const;
    static ExperimentConfig from_config(const ConfigMap& cfg);
    static ExperimentConfig load(const std::string& path);
};

// One (n, replication, estimator) outcome. Failed replications carry the
// error text and NaN metrics; the run keeps going.
struct RepRecord {
    long n = 0;
    int rep = 0;
    EstimatorKind estimator = EstimatorKind::kDrOracle;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<CurvePoint> curve;
    double l2 = 0.0;
};

struct EstimatorAggregate {
    long n = 0;
    EstimatorKind estimator = EstimatorKind::kDrOracle;
    int n_ok = 0;
    int n_failed = 0;
    double l2_mean = 0.0;
    double l2_sd = 0.0;
    std::vector<double> mean_estimate;          // per grid point, over ok reps
    std::vector<double> sd_estimate;            // replication SD per grid point
    std::vector<double> mean_se;                // mean reported SE per grid point
    std::vector<std::vector<double>> coverage;  // [level][grid point]
};

struct ExperimentResult {
    std::vector<double> grid;
    std::vector<double> truth;  // marginal m(w) from the oracle value tables
    std::vector<RepRecord> records;
    std::vector<EstimatorAggregate> aggregates;
    int failures = 0;
};

// Run the full replication study. Writes curves.csv, l2.csv, coverage.csv,
// replications.json and summary.json under out_dir (created if missing);
// pass an empty out_dir to skip the files. Replications run in parallel with
// per-replication seeds, so results are independent of scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace drcut
