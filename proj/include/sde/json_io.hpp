#pragma once

// JSON mapping of the scene schema. Keys are emitted in alphabetical order
// (nlohmann::json objects are std::map backed); absent optionals are omitted.
// Readers are lenient: lowercase hex and unsorted modifiers are accepted and
// canonicalized later, missing required keys raise InvalidScene with a
// "missing-field" violation, and type mismatches raise ParseError.

#include <string>
#include <string_view>

#include "json.hpp"
#include "sde/scene_model.hpp"

namespace sde {

using json = nlohmann::json;

/// Serializes with sorted keys, no whitespace, and floating point numbers
/// rounded to 6 decimals with trailing zeros trimmed.
std::string canonical_dump(const json& value);

/// Wraps json::parse, mapping syntax errors to ParseError.
json parse_json(std::string_view text, std::string_view what = "document");

void to_json(json& j, const BBox& b);
void from_json(const json& j, BBox& b);
void to_json(json& j, const Canvas& c);
void from_json(const json& j, Canvas& c);
void to_json(json& j, const Region& r);
void from_json(const json& j, Region& r);
void to_json(json& j, const CompositionTemplate& t);
void from_json(const json& j, CompositionTemplate& t);
void to_json(json& j, const ColorSpec& c);
void from_json(const json& j, ColorSpec& c);
void to_json(json& j, const StyleSpec& s);
void from_json(const json& j, StyleSpec& s);
void to_json(json& j, const LightingSpec& l);
void from_json(const json& j, LightingSpec& l);
void to_json(json& j, const ThemeConcept& c);
void from_json(const json& j, ThemeConcept& c);
void to_json(json& j, const SceneElement& e);
void from_json(const json& j, SceneElement& e);
void to_json(json& j, const SceneGraph& s);
void from_json(const json& j, SceneGraph& s);
void to_json(json& j, const DetailRecord& r);
void from_json(const json& j, DetailRecord& r);
void to_json(json& j, const Violation& v);

}  // namespace sde
