#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sde/scene_model.hpp"

namespace sde {

class TextClient;

/// Bounds for recursive sub-element generation.
struct ExpansionConfig {
  std::size_t max_depth = 2;
  std::size_t max_children = 4;
  std::size_t element_budget = kDefaultElementBudget;

  bool operator==(const ExpansionConfig&) const = default;
};

std::vector<Violation> validate_expansion_config(const ExpansionConfig& config);

struct SceneDefaults {
  Canvas canvas;
  LightingSpec lighting;
  std::size_t element_budget = kDefaultElementBudget;
};

/// Color assigned to a concept label: palette[stable_hash(seed, label) % 12].
std::string palette_color_for(std::uint64_t seed, std::string_view label);

/// One root element per concept inside its assigned region (region bbox inset
/// by 10%). Content comes from the backend, or "a depiction of <label>" when
/// `backend` is null.
SceneGraph populate_scene(const std::string& theme, const std::vector<ThemeConcept>& concepts,
                          const CompositionTemplate& tmpl, const StyleSpec& style,
                          TextClient* backend, std::uint64_t seed,
                          const SceneDefaults& defaults = {});

/// Grows sub-element trees under `target_path` (every root when absent).
///
/// Leaves above max_depth ask the backend for up to max_children parts, laid
/// out row-major on a ceil(sqrt(n))-column grid inside the parent. Nodes that
/// already have children are descended into rather than re-expanded, so a
/// second call with the same config is a no-op. Nodes are added in pre-order
/// and adding stops as soon as the scene holds element_budget elements.
SceneGraph expand_recursive(const SceneGraph& scene, const std::optional<std::string>& target_path,
                            const ExpansionConfig& config, TextClient& backend);

/// Union of all key sets. Per key, fields defined by `current` win; missing
/// fields come from the most recent history entry defining them. With a
/// backend, a current content that differs from the most recent historical
/// content is rewritten into a merged description.
DetailSet fuse_history(const std::vector<DetailSet>& history, const DetailSet& current,
                       TextClient* backend = nullptr, std::uint64_t seed = 0);

/// Replaces the lighting and raises each explicit color's contrast by
/// 0.3 * shadow_strength, clamped to [0, 1].
SceneGraph apply_lighting(const SceneGraph& scene, const LightingSpec& lighting);

}  // namespace sde
