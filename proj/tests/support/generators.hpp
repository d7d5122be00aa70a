#pragma once

// Random valid scenes, DetailSets and sessions for property tests. Every
// coordinate sits on a 1e-3 grid so canonical rounding never moves it.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sde/composition.hpp"
#include "sde/pipeline.hpp"
#include "sde/prompt_compiler.hpp"
#include "sde/scene_model.hpp"

namespace sde::testing {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(items.size()) - 1))];
}

// Sub-box of `outer` on the 1e-3 grid; `outer` spans at least 2 grid steps per axis.
inline BBox random_box_in(Rng& rng, const BBox& outer) {
  auto axis = [&](double lo, double hi, double& a, double& b) {
    int ilo = static_cast<int>(std::lround(lo * 1000));
    int ihi = static_cast<int>(std::lround(hi * 1000));
    int x = uniform(rng, ilo, ihi - 1);
    int y = uniform(rng, x + 1, ihi);
    a = x / 1000.0;
    b = y / 1000.0;
  };
  BBox b;
  axis(outer.x0, outer.x1, b.x0, b.x1);
  axis(outer.y0, outer.y1, b.y0, b.y1);
  return b;
}

inline std::string random_hex(Rng& rng) {
  static const char* digits = "0123456789ABCDEF";
  std::string s = "#";
  for (int i = 0; i < 6; ++i) s += digits[uniform(rng, 0, 15)];
  return s;
}

inline StyleSpec random_style(Rng& rng) {
  static const std::vector<std::string> names = {"flat-infographic", "watercolor", "line-art", "custom"};
  static const std::vector<std::string> mods = {"bold", "calm", "grainy", "neon", "soft-edges", "tiny"};
  StyleSpec s;
  s.style_name = pick(rng, names);
  for (const auto& m : mods) {
    if (coin(rng, 0.3)) s.modifiers.push_back(m);
  }
  s.abstraction_level = uniform(rng, 0, 10);
  return s;
}

inline ColorSpec random_color(Rng& rng) {
  ColorSpec c;
  c.primary_hex = random_hex(rng);
  int n = uniform(rng, 0, 3);
  for (int i = 0; i < n; ++i) c.palette.push_back(random_hex(rng));
  c.contrast = uniform(rng, 0, 1000) / 1000.0;
  return c;
}

inline LightingSpec random_lighting(Rng& rng) {
  static const std::vector<LightDirection> dirs = {
      LightDirection::top_left, LightDirection::top,     LightDirection::top_right,
      LightDirection::left,     LightDirection::right,   LightDirection::frontal,
      LightDirection::backlit};
  static const std::vector<std::string> moods = {"", "balanced", "dramatic", "serene"};
  return {pick(rng, dirs), pick(rng, moods), uniform(rng, 0, 1000) / 1000.0, coin(rng)};
}

inline std::vector<ThemeConcept> random_concepts(Rng& rng) {
  int n = uniform(rng, 1, 4);
  std::vector<int> shares(static_cast<std::size_t>(n));
  for (auto& s : shares) s = uniform(rng, 1, 10);
  int total = std::accumulate(shares.begin(), shares.end(), 0);
  std::vector<ThemeConcept> out;
  long assigned = 0;
  for (int i = 0; i < n; ++i) {
    long units = i + 1 == n ? 1000000 - assigned : 1000000L * shares[static_cast<std::size_t>(i)] / total;
    assigned += units;
    out.push_back({"concept" + std::to_string(i), {"kw" + std::to_string(i), "shared"},
                   static_cast<double>(units) / 1e6});
  }
  return out;
}

struct SceneShape {
  int max_roots = 4;
  int max_children = 3;
  int max_depth = 3;
  std::size_t budget = 40;
};

inline void grow(Rng& rng, SceneElement& parent, int depth, const SceneShape& shape,
                 std::size_t& count, const CompositionTemplate& tmpl) {
  if (depth >= shape.max_depth) return;
  if (parent.bbox.width() < 0.01 || parent.bbox.height() < 0.01) return;
  int n = uniform(rng, 0, shape.max_children);
  std::set<std::string> used;
  for (int i = 0; i < n && count < shape.budget; ++i) {
    SceneElement child;
    do {
      child.id = (coin(rng, 0.1) ? "é" : "n") + std::to_string(uniform(rng, 0, 99));
    } while (used.count(child.id));
    used.insert(child.id);
    child.path = join_path(parent.path, child.id);
    child.bbox = random_box_in(rng, parent.bbox);
    child.content = "detail " + std::to_string(uniform(rng, 0, 999)) + " of " + parent.id;
    if (coin(rng, 0.3)) child.style = random_style(rng);
    if (coin(rng, 0.4)) child.color = random_color(rng);
    if (coin(rng, 0.2)) child.region_id = pick(rng, tmpl.regions).id;
    child.z_order = uniform(rng, -2, 3);
    ++count;
    grow(rng, child, depth + 1, shape, count, tmpl);
    parent.children.push_back(std::move(child));
  }
}

/// Canonical scene that passes validate_scene against its template.
inline SceneGraph random_scene(Rng& rng, const SceneShape& shape = {}) {
  const auto& tmpl = pick(rng, builtin_templates());
  SceneGraph s;
  static const std::vector<std::pair<int, int>> sizes = {{1024, 1024}, {1792, 1024}, {768, 1024}, {640, 480}};
  auto [w, h] = pick(rng, sizes);
  s.canvas.width_px = w;
  s.canvas.height_px = h;
  int g = std::gcd(w, h);
  s.canvas.aspect_label = coin(rng) ? std::to_string(w / g) + ":" + std::to_string(h / g) : "";
  s.theme = "theme " + std::to_string(uniform(rng, 0, 9999));
  s.theme_concepts = random_concepts(rng);
  s.template_id = tmpl.id;
  s.style = canonicalize(random_style(rng));
  s.lighting = random_lighting(rng);
  s.iteration_index = static_cast<std::uint64_t>(uniform(rng, 0, 5));
  s.seed = rng();

  std::size_t count = 0;
  int roots = uniform(rng, 0, shape.max_roots);
  std::set<std::string> used;
  for (int i = 0; i < roots && count < shape.budget; ++i) {
    SceneElement e;
    do {
      e.id = "e" + std::to_string(uniform(rng, 0, 99));
    } while (used.count(e.id));
    used.insert(e.id);
    e.path = e.id;
    e.region_id = pick(rng, tmpl.regions).id;
    e.bbox = random_box_in(rng, {0, 0, 1, 1});
    e.content = "element " + std::to_string(uniform(rng, 0, 999));
    if (coin(rng, 0.5)) e.style = random_style(rng);
    if (coin(rng, 0.7)) e.color = random_color(rng);
    e.z_order = uniform(rng, 0, 4);
    ++count;
    grow(rng, e, 1, shape, count, tmpl);
    s.elements.push_back(std::move(e));
  }
  return canonicalize(std::move(s));
}

/// Arbitrary records over a small path pool; fields present at random.
inline DetailSet random_detailset(Rng& rng, double field_p = 0.6) {
  static const std::vector<std::string> pool = {"a", "b", "c", "a/x", "a/y", "b/z", "a/x/q"};
  DetailSet d;
  for (const auto& path : pool) {
    if (!coin(rng, 0.5)) continue;
    DetailRecord r;
    if (coin(rng, field_p)) r.content = "text " + std::to_string(uniform(rng, 0, 50));
    if (coin(rng, field_p)) r.bbox = random_box_in(rng, {0, 0, 1, 1});
    if (coin(rng, field_p)) r.style = random_style(rng);
    if (coin(rng, field_p)) r.color = random_color(rng);
    if (coin(rng, field_p)) r.z_order = uniform(rng, -3, 3);
    if (coin(rng, field_p)) r.region_id = "r" + std::to_string(uniform(rng, 0, 3));
    d.entries.emplace(path, std::move(r));
  }
  return d;
}

inline Edit random_edit(Rng& rng) {
  Edit e;
  switch (uniform(rng, 0, 2)) {
    case 0:
      e.op = Edit::Op::set;
      e.path = "e" + std::to_string(uniform(rng, 0, 9));
      e.field = "color";
      e.value = random_hex(rng);
      break;
    case 1:
      e.op = Edit::Op::del;
      e.path = "e" + std::to_string(uniform(rng, 0, 9)) + "/n1";
      break;
    default:
      e.op = Edit::Op::add;
      e.path = "e1/new" + std::to_string(uniform(rng, 0, 9));
      e.value = {{"bbox", {0.125, 0.25, 0.5, 0.75}}, {"content", "added element"}};
  }
  return e;
}

/// Session at a random stage with every field that stage requires.
inline SessionState random_session(Rng& rng) {
  SessionState s;
  s.id = "session-" + std::to_string(rng() % 1000000);
  s.input_text = "input text " + std::to_string(uniform(rng, 0, 999)) + " with unicode é";
  s.seed = rng();
  s.created_at = "2026-01-0" + std::to_string(uniform(rng, 1, 9)) + "T00:00:00.000Z";
  s.updated_at = s.created_at;
  s.stage = static_cast<Stage>(uniform(rng, 0, 5));
  auto at_least = [&](Stage st) { return static_cast<int>(s.stage) >= static_cast<int>(st); };
  if (at_least(Stage::Creativity) || coin(rng, 0.3)) s.style = canonicalize(random_style(rng));
  if (at_least(Stage::Theme)) {
    s.theme = "theme";
    s.concepts = random_concepts(rng);
  }
  if (at_least(Stage::Composition)) s.template_id = pick(rng, builtin_templates()).id;
  if (at_least(Stage::Detailing)) s.current_scene = random_scene(rng);
  if (s.stage == Stage::Generate) {
    int n = uniform(rng, 1, 3);
    for (int i = 0; i < n; ++i) {
      IterationRecord r;
      r.index = static_cast<std::size_t>(i);
      r.scene_snapshot = random_scene(rng);
      r.scene_hash = scene_hash(r.scene_snapshot);
      r.compiled_prompt = "prompt " + std::to_string(i) + "\nline two\n";
      r.image_ref = "runs/x/iter-" + std::to_string(i) + "/image.svg";
      r.timestamp = s.created_at;
      int edits = i == 0 ? 0 : uniform(rng, 0, 3);
      for (int k = 0; k < edits; ++k) r.user_edits.push_back(random_edit(rng));
      s.iterations.push_back(std::move(r));
    }
  }
  return s;
}

}  // namespace sde::testing
