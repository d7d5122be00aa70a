#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sde/scene_model.hpp"

namespace sde {

/// The bundled library: thirds, radial, diagonal, golden, split.
const std::vector<CompositionTemplate>& builtin_templates();

/// Parses a JSON array of templates (a single object is accepted too) and
/// validates each one. Throws ParseError or ValidationError(InvalidTemplate).
std::vector<CompositionTemplate> load_templates(std::string_view source);

std::string templates_to_json(const std::vector<CompositionTemplate>& templates);

/// Same ids in `extra` replace builtin entries; the rest are appended.
std::vector<CompositionTemplate> merge_libraries(std::vector<CompositionTemplate> base,
                                                 const std::vector<CompositionTemplate>& extra);

const CompositionTemplate& find_template(const std::vector<CompositionTemplate>& library,
                                         std::string_view id);

inline constexpr double kMajorConceptWeight = 0.15;

/// Picks the template whose focal-region count is closest to the number of
/// concepts weighing at least `major_weight`; ties go to the smallest id.
const CompositionTemplate& select_composition(const std::vector<ThemeConcept>& concepts,
                                              const std::vector<CompositionTemplate>& library,
                                              double major_weight = kMajorConceptWeight);

/// Concept label -> region id. Heaviest concepts fill focal regions by
/// descending salience; the rest go round-robin over support regions
/// (background, then focal, when a template has no support regions).
std::map<std::string, std::string> assign_regions(const std::vector<ThemeConcept>& concepts,
                                                  const CompositionTemplate& tmpl);

}  // namespace sde
