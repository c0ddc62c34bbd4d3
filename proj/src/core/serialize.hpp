#pragma once

#include <string>

#include "core/hazard.hpp"

namespace drcut {

// JSON round-trip for every concrete hazard model, keyed by "kind":
// zero, constant, oracle-gamma, oracle-mu12, oracle-mu13, oracle-mu23,
// parametric-censoring, piecewise. Unknown kinds or malformed documents
// raise ParseError naming the problem.
std::string hazard_to_json(const HazardModel& hazard);
HazardPtr hazard_from_json(const std::string& text);
void save_hazard(const std::string& path, const HazardModel& hazard);
HazardPtr load_hazard(const std::string& path);

// Transition bundle {m12, m13, m23} as one document.
std::string transitions_to_json(const TransitionModels& transitions);
TransitionModels transitions_from_json(const std::string& text);
void save_transitions(const std::string& path, const TransitionModels& transitions);
TransitionModels load_transitions(const std::string& path);

}  // namespace drcut
