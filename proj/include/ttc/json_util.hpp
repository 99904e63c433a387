#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

// Tolerant extraction of a JSON object from model output.  Models wrap JSON
// in markdown fences or chat filler often enough that every JSON-consuming
// call site shares this one repair path: strip code fences, then take the
// first balanced top-level {...} span and parse it.

namespace ttc {

// Remove ```lang ... ``` fencing when the whole payload is fenced.
std::string strip_code_fences(const std::string& text);

// First balanced top-level JSON object span, brace-matching with awareness
// of string literals and escapes.  Returns nullopt when none exists.
std::optional<std::string> first_balanced_object(const std::string& text);

// strip_code_fences + first_balanced_object + parse.  Nullopt when no valid
// object can be recovered.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

} // namespace ttc
