#pragma once

#include "rankone/measure.hpp"

#include <json.hpp>

#include <string>

namespace rankone {

// {"atoms": [[pos, mass], ...],
//  "ac": [{"interval": [a, b], "weight": {"kind": ..., "params": {...}}}, ...]}
nlohmann::json to_json(const Measure& mu);
nlohmann::json to_json(const WeightDescriptor& w);
nlohmann::json to_json(const DiscreteMeasure& mu);

// Strict parse: unknown keys are rejected. `where` prefixes error messages
// with the location of the measure inside a larger document.
// Finite values as numbers; inf / -inf / nan as strings.
nlohmann::json json_number(double v);
double number_from_json(const nlohmann::json& j);

Measure measure_from_json(const nlohmann::json& j, const std::string& where = "measure");
WeightDescriptor weight_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace rankone
