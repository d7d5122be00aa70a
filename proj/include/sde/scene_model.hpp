#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sde/error.hpp"

namespace sde {

inline constexpr std::size_t kDefaultElementBudget = 64;

/// Normalized rectangle, origin top-left, every coordinate in [0,1].
struct BBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  bool operator==(const BBox&) const = default;
};

bool is_well_formed(const BBox& box);
// Containment with 1e-9 slack on every edge.
bool contains(const BBox& outer, const BBox& inner);
// Shrinks each side by `fraction` of the box's extent on that axis.
BBox inset(const BBox& box, double fraction);

struct Canvas {
  int width_px = 1024;
  int height_px = 1024;
  std::string aspect_label = "1:1";  // empty means absent

  bool operator==(const Canvas&) const = default;
};

enum class RegionRole { focal, support, background };

std::string_view to_string(RegionRole role);
std::optional<RegionRole> region_role_from_string(std::string_view text);

struct Region {
  std::string id;
  BBox bbox;
  RegionRole role = RegionRole::support;
  double salience = 0.5;

  bool operator==(const Region&) const = default;
};

struct CompositionTemplate {
  std::string id;
  std::string name;
  std::vector<Region> regions;
  std::string description;

  const Region* find_region(std::string_view region_id) const;
  std::size_t focal_count() const;

  bool operator==(const CompositionTemplate&) const = default;
};

struct ColorSpec {
  std::string primary_hex = "#808080";
  std::vector<std::string> palette;
  double contrast = 0.5;

  bool operator==(const ColorSpec&) const = default;
};

struct StyleSpec {
  std::string style_name;
  std::vector<std::string> modifiers;
  int abstraction_level = 5;

  bool operator==(const StyleSpec&) const = default;
};

enum class LightDirection { top_left, top, top_right, left, right, frontal, backlit };

std::string_view to_string(LightDirection direction);
std::optional<LightDirection> light_direction_from_string(std::string_view text);

struct LightingSpec {
  LightDirection light_direction = LightDirection::top_left;
  std::string mood = "balanced";
  double shadow_strength = 0.4;
  bool reflection = false;

  bool operator==(const LightingSpec&) const = default;
};

struct ThemeConcept {
  std::string label;
  std::vector<std::string> keywords;
  double weight = 1.0;

  bool operator==(const ThemeConcept&) const = default;
};

struct SceneElement {
  std::string id;
  std::string path;
  std::optional<std::string> region_id;
  BBox bbox;
  std::string content;
  std::optional<StyleSpec> style;
  std::optional<ColorSpec> color;
  int z_order = 0;
  std::vector<SceneElement> children;

  bool operator==(const SceneElement&) const = default;
};

struct SceneGraph {
  Canvas canvas;
  std::string theme;
  std::vector<ThemeConcept> theme_concepts;
  std::string template_id;
  StyleSpec style;
  LightingSpec lighting;
  std::vector<SceneElement> elements;
  std::uint64_t iteration_index = 0;
  std::uint64_t seed = 0;

  bool operator==(const SceneGraph&) const = default;
};

/// Attribute record for one element. Every field is optional so that
/// history fusion can tell "not defined here" apart from a value.
struct DetailRecord {
  std::optional<std::string> content;
  std::optional<BBox> bbox;
  std::optional<StyleSpec> style;
  std::optional<ColorSpec> color;
  std::optional<int> z_order;
  std::optional<std::string> region_id;

  bool operator==(const DetailRecord&) const = default;
};

/// Flat view of a scene keyed by element path.
struct DetailSet {
  std::map<std::string, DetailRecord> entries;

  bool operator==(const DetailSet&) const = default;
};

// ---------------------------------------------------------------------------
// Paths

bool is_valid_element_id(std::string_view id);
bool is_valid_path(std::string_view path);
std::string join_path(std::string_view parent, std::string_view id);
// "" for root paths.
std::string parent_path(std::string_view path);
std::string leaf_id(std::string_view path);
std::size_t path_depth(std::string_view path);  // roots have depth 0

// ---------------------------------------------------------------------------
// Canonical form

bool is_canonical_hex(std::string_view hex);
// Accepts "#rgb"/"#rrggbb" in either case; returns "#RRGGBB".
std::optional<std::string> normalize_hex(std::string_view hex);
// Rounds to the 1e-6 grid used by canonical serialization.
double round6(double value);

StyleSpec canonicalize(StyleSpec style);
ColorSpec canonicalize(ColorSpec color);
/// Sorted modifiers, uppercase hex, rounded numbers, sibling order by
/// (z_order, id), paths recomputed from ids.
SceneGraph canonicalize(SceneGraph scene);
CompositionTemplate canonicalize(CompositionTemplate tmpl);

// ---------------------------------------------------------------------------
// Traversal helpers

std::size_t count_elements(const SceneGraph& scene);
std::size_t count_elements(const std::vector<SceneElement>& elements);
// Pre-order, siblings in stored order.
std::vector<const SceneElement*> preorder(const SceneGraph& scene);
const SceneElement* find_element(const SceneGraph& scene, std::string_view path);

/// Effective style/color after inheritance (element, then ancestors, then the
/// scene; color falls back to neutral gray since the scene has no color).
StyleSpec effective_style(const SceneGraph& scene, std::string_view path);
ColorSpec effective_color(const SceneGraph& scene, std::string_view path);
// Region of the element or of its nearest ancestor that names one.
std::optional<std::string> effective_region(const SceneGraph& scene, std::string_view path);

// ---------------------------------------------------------------------------
// Validation and conversion

std::vector<Violation> validate_template(const CompositionTemplate& tmpl);
// Fraction of the canvas covered by the union of region boxes (100x100 sample grid).
double template_coverage(const CompositionTemplate& tmpl);

/// Structural checks that need no template (region references skipped).
std::vector<Violation> validate_scene(const SceneGraph& scene,
                                      std::size_t element_budget = kDefaultElementBudget);
std::vector<Violation> validate_scene(const SceneGraph& scene, const CompositionTemplate& tmpl,
                                      std::size_t element_budget = kDefaultElementBudget);

// Throws ValidationError(InvalidScene) when the list is non-empty.
void require_valid(const std::vector<Violation>& violations);

DetailSet scene_to_detailset(const SceneGraph& scene);
/// Rebuilds the element tree from `details`; canvas, theme, style, lighting,
/// seed and iteration index come from `base`. The result is canonical.
SceneGraph detailset_to_scene(const DetailSet& details, const SceneGraph& base);

}  // namespace sde
