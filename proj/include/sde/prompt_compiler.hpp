#pragma once

#include <array>
#include <string>
#include <string_view>

#include "sde/scene_model.hpp"

namespace sde {

/// Canonical JSON text of a scene: alphabetical keys, numbers rounded to six
/// decimals with trailing zeros trimmed, siblings ordered by (z_order, id), no
/// insignificant whitespace. Throws InvalidScene for structurally invalid scenes.
std::string serialize_scene(const SceneGraph& scene);

/// Parses, canonicalizes and validates (structure only, no template).
SceneGraph deserialize_scene(std::string_view text);

/// SHA-256 of serialize_scene, lowercase hex.
std::string scene_hash(const SceneGraph& scene);

bool canonically_equal(const SceneGraph& a, const SceneGraph& b);

struct PaletteColor {
  std::string_view name;
  std::string_view hex;
};

/// Fixed 12-color palette used for deterministic color assignment and naming.
const std::array<PaletteColor, 12>& named_palette();

// Nearest palette entry by RGB distance; ties go to the earlier entry.
std::string_view nearest_color_name(std::string_view hex);

/// 3x3 grid phrase for a point: "upper left", "center", "lower right", ...
std::string_view position_phrase(double x, double y);

struct PromptOptions {
  std::string suffix;  // appended verbatim as a final line when non-empty
};

/// Natural-language prompt with fixed section order: theme, style,
/// composition, one sentence per element grouped by template region, lighting.
/// Element ids and paths never appear.
std::string compile_prompt(const SceneGraph& scene, const CompositionTemplate& tmpl,
                           const PromptOptions& options = {});

/// SVG 1.1 at canvas pixel size with dashed region outlines and one filled,
/// labelled rectangle per element.
std::string render_debug_svg(const SceneGraph& scene, const CompositionTemplate& tmpl);

}  // namespace sde
