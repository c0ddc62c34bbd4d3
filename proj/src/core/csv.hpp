#pragma once

#include <string>
#include <vector>

#include "core/crossfit.hpp"
#include "core/pseudo.hpp"
#include "core/trajectory.hpp"

namespace drcut {

// Long-format cohort file, one row per path event:
//   id,w,time,event,state[,treatment]
// with events `entry` (time 0, state 1), `jump` (state entered), and a
// terminal `censor` or `end` row at c carrying the state just before it. The
// treatment column appears iff any subject carries a treatment arm. Rows of
// one subject are contiguous and time-ordered.
void write_cohort_csv(const std::string& path, const std::vector<ObservedSubject>& data);
std::vector<ObservedSubject> read_cohort_csv(const std::string& path, double eta);

// Pseudo-outcome file: id,w,variant,value,censoring_kind,outcome_kind.
void write_pseudo_csv(const std::string& path, const std::vector<PseudoOutcome>& pseudo);
std::vector<PseudoOutcome> read_pseudo_csv(const std::string& path);

// Fitted curve with symmetric normal confidence bands at `level`:
//   w,estimate,se,ci_lo,ci_hi
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     double level = 0.95);

}  // namespace drcut
