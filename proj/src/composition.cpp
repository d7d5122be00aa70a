#include "sde/composition.hpp"

#include <algorithm>
#include <cstdlib>

#include "embedded_data.hpp"
#include "sde/json_io.hpp"

namespace sde {

namespace {

std::vector<const Region*> regions_by_salience(const CompositionTemplate& tmpl, RegionRole role) {
  std::vector<const Region*> out;
  for (const auto& r : tmpl.regions) {
    if (r.role == role) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Region* a, const Region* b) { return a->salience > b->salience; });
  return out;
}

}  // namespace

const std::vector<CompositionTemplate>& builtin_templates() {
  static const std::vector<CompositionTemplate> library = load_templates(detail::embedded_templates());
  return library;
}

std::vector<CompositionTemplate> load_templates(std::string_view source) {
  auto doc = parse_json(source, "template file");
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) throw Error(ErrorCode::ParseError, "template file must hold a JSON array");

  std::vector<CompositionTemplate> out;
  for (const auto& item : doc) {
    CompositionTemplate tmpl;
    try {
      tmpl = canonicalize(item.get<CompositionTemplate>());
    } catch (const ValidationError& e) {
      throw ValidationError(ErrorCode::InvalidTemplate, e.violations());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("template: ") + e.what());
    }
    auto violations = validate_template(tmpl);
    if (!violations.empty()) throw ValidationError(ErrorCode::InvalidTemplate, violations);
    if (std::any_of(out.begin(), out.end(), [&](const auto& t) { return t.id == tmpl.id; })) {
      throw ValidationError(ErrorCode::InvalidTemplate, {{tmpl.id, "duplicate-template", ""}});
    }
    out.push_back(std::move(tmpl));
  }
  return out;
}

std::string templates_to_json(const std::vector<CompositionTemplate>& templates) {
  return canonical_dump(json(templates));
}

std::vector<CompositionTemplate> merge_libraries(std::vector<CompositionTemplate> base,
                                                 const std::vector<CompositionTemplate>& extra) {
  for (const auto& t : extra) {
    auto it = std::find_if(base.begin(), base.end(), [&](const auto& b) { return b.id == t.id; });
    if (it != base.end()) {
      *it = t;
    } else {
      base.push_back(t);
    }
  }
  return base;
}

const CompositionTemplate& find_template(const std::vector<CompositionTemplate>& library,
                                         std::string_view id) {
  for (const auto& t : library) {
    if (t.id == id) return t;
  }
  throw ValidationError(ErrorCode::InvalidTemplate,
                        {{std::string(id), "unknown-template", "no template with this id"}});
}

const CompositionTemplate& select_composition(const std::vector<ThemeConcept>& concepts,
                                              const std::vector<CompositionTemplate>& library,
                                              double major_weight) {
  if (library.empty()) throw Error(ErrorCode::EmptyLibrary, "composition library is empty");
  auto major = static_cast<long>(std::count_if(
      concepts.begin(), concepts.end(),
      [&](const ThemeConcept& c) { return c.weight >= major_weight; }));

  const CompositionTemplate* best = nullptr;
  long best_score = 0;
  for (const auto& t : library) {
    long score = -std::labs(static_cast<long>(t.focal_count()) - major);
    if (!best || score > best_score || (score == best_score && t.id < best->id)) {
      best = &t;
      best_score = score;
    }
  }
  return *best;
}

std::map<std::string, std::string> assign_regions(const std::vector<ThemeConcept>& concepts,
                                                  const CompositionTemplate& tmpl) {
  std::vector<const ThemeConcept*> ordered;
  for (const auto& c : concepts) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const ThemeConcept* a, const ThemeConcept* b) {
    return a->weight != b->weight ? a->weight > b->weight : a->label < b->label;
  });

  auto focal = regions_by_salience(tmpl, RegionRole::focal);
  auto overflow = regions_by_salience(tmpl, RegionRole::support);
  if (overflow.empty()) overflow = regions_by_salience(tmpl, RegionRole::background);
  if (overflow.empty()) overflow = focal;

  std::map<std::string, std::string> out;
  if (focal.empty() && overflow.empty()) return out;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const Region* region = i < focal.size() ? focal[i] : overflow[(i - focal.size()) % overflow.size()];
    out.emplace(ordered[i]->label, region->id);
  }
  return out;
}

}  // namespace sde
