#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/censoring.hpp"
#include "core/hal_lite.hpp"
#include "core/pseudo.hpp"
#include "core/scenario.hpp"
#include "core/smoother.hpp"
#include "core/value_tables.hpp"

namespace drcut {

enum class CensEstimator { kOracle, kHal, kParametric, kZero };
enum class OutcomeEstimator { kOracle, kHal, kConstant, kZero };

const char* cens_estimator_name(CensEstimator e);
CensEstimator cens_estimator_from_name(const std::string& name);
const char* outcome_estimator_name(OutcomeEstimator e);
OutcomeEstimator outcome_estimator_from_name(const std::string& name);

// Everything a nuisance-fitting + transform + regression pipeline needs.
// `oracle_tables` (truth solved once) is reused wherever the oracle outcome
// model appears; leaving it null makes each fit solve its own copy.
struct PipelineConfig {
    PseudoVariant variant = PseudoVariant::kDr;
    CensEstimator cens = CensEstimator::kOracle;
    OutcomeEstimator outcome = OutcomeEstimator::kOracle;
    double epsilon = 0.01;
    double quad_step = 0.01;
    double bandwidth_c = 1.0;
    Kernel kernel = Kernel::kEpanechnikov;
    HalConfig hal;
    ValueGridSpec table_grid;
    std::shared_ptr<const ValueTables> oracle_tables;
    int workers = 0;
};

struct FittedNuisances {
    std::shared_ptr<const CensoringModel> cens;
    std::shared_ptr<const ValueTables> outcome;  // null for ipcw pipelines
    std::string cens_kind;
    std::string outcome_kind;
};

// Fit the configured censoring and outcome models on `train`.
FittedNuisances fit_pipeline_nuisances(const std::vector<ObservedSubject>& train,
                                       const ScenarioConfig& scen,
                                       const PipelineConfig& config);

std::vector<PseudoOutcome> pipeline_transform(const std::vector<ObservedSubject>& data,
                                              const FittedNuisances& fit,
                                              const ScenarioConfig& scen,
                                              const PipelineConfig& config);

// Deterministic fold assignment: a seeded shuffle of 0..n-1 dealt round-robin
// into k folds, so sizes differ by at most one.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

struct SplitEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n_fit = 0;   // nuisance half
    std::size_t n_reg = 0;   // regression half
};

// Algorithm: nuisances on one half, pseudo-outcome regression at w0 on the
// other, bandwidth from the regression half's size.
SplitEstimate sample_split_estimate(const std::vector<ObservedSubject>& data,
                                    const ScenarioConfig& scen, const PipelineConfig& config,
                                    double w0, std::uint64_t split_seed);

struct FoldEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct CrossFitResult {
    double w0 = 0.0;
    int k = 0;
    std::vector<FoldEstimate> folds;
    std::vector<int> assignment;
    double cf_estimate = 0.0;  // mean of fold estimates
    double cf_se = 0.0;        // mean of fold SEs times k^(-1/2)
};

// K-fold cross-fit at a single point: per fold, nuisances on the complement
// and regression on the fold, with the bandwidth rule applied at n/K.
CrossFitResult crossfit_estimate(const std::vector<ObservedSubject>& data,
                                 const ScenarioConfig& scen, const PipelineConfig& config,
                                 double w0, int k, std::uint64_t fold_seed);

struct CurvePoint {
    double w = 0.0;
    double estimate = 0.0;
    double se = 0.0;
};

// Plain regression of given pseudo-outcomes on an evaluation grid.
std::vector<CurvePoint> regress_curve(const std::vector<PseudoOutcome>& pseudo,
                                      const std::vector<double>& grid, double h,
                                      Kernel kernel = Kernel::kEpanechnikov);

// K-fold cross-fitted curve: fold curves averaged pointwise, fold SEs
// averaged and scaled by k^(-1/2). k = 1 means fit nuisances and regress on
// the full data (for oracle pipelines, where nothing is estimated).
std::vector<CurvePoint> crossfit_curve(const std::vector<ObservedSubject>& data,
                                       const ScenarioConfig& scen,
                                       const PipelineConfig& config,
                                       const std::vector<double>& grid, int k,
                                       std::uint64_t fold_seed);

struct NuisanceNorms {
    double outcome_norm = 0.0;
    double hazard_norm = 0.0;
};

// Weighted-empirical L2 error norms of fitted nuisances against the truth:
// for covariate points ws[i] carrying |weights[i]| mass, conditional Monte
// Carlo over uncensored paths at that covariate, and Simpson quadrature over
// u in [0, eta) of the squared nuisance errors along each path. `outcome`
// in `fit` may be null (ipcw pipelines), which reports outcome_norm 0.
NuisanceNorms nuisance_error_norms(const FittedNuisances& fit, const ScenarioConfig& scen,
                                   const ValueTables& truth, const std::vector<double>& ws,
                                   const std::vector<double>& weights,
                                   std::size_t paths_per_point, std::uint64_t seed,
                                   int workers = 0);

}  // namespace drcut
