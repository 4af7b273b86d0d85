#pragma once

#include <json.hpp>

#include "nvmux/crosstalk.hpp"

namespace nvmux::crosstalk {

// {"label": s, "transitions": [{"ground": int, "excited": s, "frequency_ghz": f,
//   "rabi_mhz": f, "branching_mhz": {"-1": f, "0": f, "1": f}}]}
// Rates in the document are angular MHz (rad/us). Throws ParseError on schema
// violations and DomainError on invariant violations.
EmitterOpticalModel emitter_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const EmitterOpticalModel& model);

}  // namespace nvmux::crosstalk
