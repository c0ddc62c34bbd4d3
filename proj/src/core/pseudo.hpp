#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/censoring.hpp"
#include "core/scenario.hpp"
#include "core/trajectory.hpp"
#include "core/value_tables.hpp"

namespace drcut {

enum class PseudoVariant { kIpcw, kDr, kOracleDr, kCausal };

const char* variant_name(PseudoVariant v);
PseudoVariant variant_from_name(const std::string& name);

struct PseudoOutcome {
    std::int64_t id = 0;
    double w = 0.0;
    PseudoVariant variant = PseudoVariant::kDr;
    double value = 0.0;
    std::string censoring_kind;  // provenance of the censoring nuisance
    std::string outcome_kind;    // provenance of the outcome nuisance
};

// Inverse-probability-of-censoring-weighted value: 0 for censored subjects,
// Y / S(eta | path) otherwise, with the survival clamped at the model floor.
double ipcw_value(const ObservedSubject& subject, const CensoringModel& cens, double eta);

// Doubly robust transform. Three terms: the IPCW term, a jump term
// E2[Y | X^C] / S(C | X) when the subject is censored before eta (the
// conditional mean reads the left-limit path at C), and the compensator
//   - int_0^{C ^ eta} E2[Y | X^u] gamma1(u | X) / S(u | X) du,
// integrated by composite Simpson panels no wider than quad_step, split at
// hazard breakpoints. Stretches where the censoring hazard's activity state
// does not match the path contribute exactly zero and are skipped.
double dr_value(const ObservedSubject& subject, const CensoringModel& cens,
                const ValueTables& outcome, double quad_step = 0.01);

// Treatment-augmented transform for arm `a` under a known or estimated
// baseline propensity pi = P(A = a | W):
//   1(A=a)/pi * dr_value  -  (1(A=a) - pi)/pi * E2[Y | W, A=a],
// where the last factor is the outcome model's baseline mean. The nuisances
// passed in must be the arm-a models. pi = 1 with A = a reduces exactly to
// dr_value; a subject on the other arm gets +E2[Y | W, A=a].
double causal_value(const ObservedSubject& subject, int arm, double propensity,
                    const CensoringModel& cens, const ValueTables& outcome,
                    double quad_step = 0.01);

struct TransformOptions {
    PseudoVariant variant = PseudoVariant::kDr;
    double quad_step = 0.01;
    std::string censoring_kind = "oracle";
    std::string outcome_kind = "oracle";
    double eta = 5.0;      // used only when no outcome tables are supplied (ipcw)
    int arm = 1;           // causal variant
    double propensity = 1.0;
    int workers = 0;
};

// Batch transform; parallel over subjects. `outcome` may be null for the
// ipcw variant only.
std::vector<PseudoOutcome> transform_cohort(const std::vector<ObservedSubject>& data,
                                            const CensoringModel& cens,
                                            std::shared_ptr<const ValueTables> outcome,
                                            const TransformOptions& options = {});

struct BiasDiagnostic {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

// Monte Carlo estimate of the conditional bias of the transform built from
// (cens1, outcome2) at W = w:
//   E[ int (E[Y|X^u] - E2[Y|X^u]) (gamma1_hat - gamma)(u|X)
//          P(C >= u | X) / P1_hat(C > u | X) du | W = w ],
// by simulating uncensored trajectories at w and integrating over u. Zero
// (within MC error) whenever either nuisance is the oracle.
BiasDiagnostic oracle_bias_diagnostic(const ScenarioConfig& scen, double w,
                                      const CensoringModel& cens1,
                                      const ValueTables& outcome2,
                                      const ValueTables& truth, std::size_t n_mc,
                                      std::uint64_t seed, double quad_step = 0.01,
                                      int workers = 0);

}  // namespace drcut
