#include "sde/scene_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace sde {

namespace {

constexpr double kContainmentSlack = 1e-9;
constexpr double kAspectTolerance = 0.01;

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n\f\v");
  return std::string(text.substr(first, last - first + 1));
}

std::optional<double> parse_aspect(std::string_view label) {
  auto colon = label.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  double w = 0, h = 0;
  auto lhs = label.substr(0, colon);
  auto rhs = label.substr(colon + 1);
  auto [p1, e1] = std::from_chars(lhs.data(), lhs.data() + lhs.size(), w);
  auto [p2, e2] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), h);
  if (e1 != std::errc{} || e2 != std::errc{} || p1 != lhs.data() + lhs.size() ||
      p2 != rhs.data() + rhs.size() || w <= 0 || h <= 0) {
    return std::nullopt;
  }
  return w / h;
}

bool element_less(const SceneElement& a, const SceneElement& b) {
  if (a.z_order != b.z_order) return a.z_order < b.z_order;
  return a.id < b.id;
}

BBox round_box(const BBox& b) { return {round6(b.x0), round6(b.y0), round6(b.x1), round6(b.y1)}; }

void canonicalize_elements(std::vector<SceneElement>& elements, const std::string& parent) {
  for (auto& e : elements) {
    e.path = join_path(parent, e.id);
    e.bbox = round_box(e.bbox);
    if (e.style) e.style = canonicalize(*e.style);
    if (e.color) e.color = canonicalize(*e.color);
    canonicalize_elements(e.children, e.path);
  }
  std::sort(elements.begin(), elements.end(), element_less);
}

template <typename Fn>
void walk(const std::vector<SceneElement>& elements, Fn&& fn) {
  for (const auto& e : elements) {
    fn(e);
    walk(e.children, fn);
  }
}

// Chain of elements from the root down to `path` (inclusive); empty if absent.
std::vector<const SceneElement*> lineage(const SceneGraph& scene, std::string_view path) {
  std::vector<const SceneElement*> chain;
  const std::vector<SceneElement>* level = &scene.elements;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto slash = path.find('/', start);
    auto id = path.substr(start, slash == std::string_view::npos ? std::string_view::npos
                                                                 : slash - start);
    auto it = std::find_if(level->begin(), level->end(),
                           [&](const SceneElement& e) { return e.id == id; });
    if (it == level->end()) return {};
    chain.push_back(&*it);
    if (slash == std::string_view::npos) break;
    level = &it->children;
    start = slash + 1;
  }
  return chain;
}

void check_color(const ColorSpec& c, const std::string& where, std::vector<Violation>& out) {
  if (!is_canonical_hex(c.primary_hex)) {
    out.push_back({where, "bad-hex", "primary color '" + c.primary_hex + "'"});
  }
  if (c.palette.size() > 6) out.push_back({where, "palette-too-large", ""});
  for (const auto& h : c.palette) {
    if (!is_canonical_hex(h)) out.push_back({where, "bad-hex", "palette color '" + h + "'"});
  }
  if (!(c.contrast >= 0.0 && c.contrast <= 1.0)) {
    out.push_back({where, "contrast-out-of-range", ""});
  }
}

void check_style(const StyleSpec& s, const std::string& where, std::vector<Violation>& out) {
  if (s.abstraction_level < 0 || s.abstraction_level > 10) {
    out.push_back({where, "abstraction-out-of-range", ""});
  }
  for (std::size_t i = 1; i < s.modifiers.size(); ++i) {
    if (!(s.modifiers[i - 1] < s.modifiers[i])) {
      out.push_back({where, "modifiers-not-canonical", "modifiers must be sorted and unique"});
      break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

bool is_well_formed(const BBox& b) {
  return in_unit(b.x0) && in_unit(b.y0) && in_unit(b.x1) && in_unit(b.y1) && b.x0 < b.x1 &&
         b.y0 < b.y1;
}

bool contains(const BBox& outer, const BBox& inner) {
  return inner.x0 >= outer.x0 - kContainmentSlack && inner.y0 >= outer.y0 - kContainmentSlack &&
         inner.x1 <= outer.x1 + kContainmentSlack && inner.y1 <= outer.y1 + kContainmentSlack;
}

BBox inset(const BBox& b, double fraction) {
  double dx = b.width() * fraction;
  double dy = b.height() * fraction;
  return {b.x0 + dx, b.y0 + dy, b.x1 - dx, b.y1 - dy};
}

std::string_view to_string(RegionRole role) {
  switch (role) {
    case RegionRole::focal: return "focal";
    case RegionRole::support: return "support";
    case RegionRole::background: return "background";
  }
  return "support";
}

std::optional<RegionRole> region_role_from_string(std::string_view text) {
  if (text == "focal") return RegionRole::focal;
  if (text == "support") return RegionRole::support;
  if (text == "background") return RegionRole::background;
  return std::nullopt;
}

std::string_view to_string(LightDirection d) {
  switch (d) {
    case LightDirection::top_left: return "top-left";
    case LightDirection::top: return "top";
    case LightDirection::top_right: return "top-right";
    case LightDirection::left: return "left";
    case LightDirection::right: return "right";
    case LightDirection::frontal: return "frontal";
    case LightDirection::backlit: return "backlit";
  }
  return "frontal";
}

std::optional<LightDirection> light_direction_from_string(std::string_view text) {
  static constexpr LightDirection all[] = {
      LightDirection::top_left, LightDirection::top,     LightDirection::top_right,
      LightDirection::left,     LightDirection::right,   LightDirection::frontal,
      LightDirection::backlit};
  for (auto d : all) {
    if (to_string(d) == text) return d;
  }
  return std::nullopt;
}

const Region* CompositionTemplate::find_region(std::string_view region_id) const {
  for (const auto& r : regions) {
    if (r.id == region_id) return &r;
  }
  return nullptr;
}

std::size_t CompositionTemplate::focal_count() const {
  return static_cast<std::size_t>(std::count_if(
      regions.begin(), regions.end(), [](const Region& r) { return r.role == RegionRole::focal; }));
}

// ---------------------------------------------------------------------------

bool is_valid_element_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == '/' || std::isspace(static_cast<unsigned char>(c));
  });
}

bool is_valid_path(std::string_view path) {
  if (path.empty()) return false;
  std::size_t start = 0;
  while (true) {
    auto slash = path.find('/', start);
    auto id = path.substr(start, slash == std::string_view::npos ? std::string_view::npos
                                                                 : slash - start);
    if (!is_valid_element_id(id)) return false;
    if (slash == std::string_view::npos) return true;
    start = slash + 1;
  }
}

std::string join_path(std::string_view parent, std::string_view id) {
  if (parent.empty()) return std::string(id);
  std::string out(parent);
  out += '/';
  out += id;
  return out;
}

std::string parent_path(std::string_view path) {
  auto slash = path.rfind('/');
  return slash == std::string_view::npos ? std::string{} : std::string(path.substr(0, slash));
}

std::string leaf_id(std::string_view path) {
  auto slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::size_t path_depth(std::string_view path) {
  return static_cast<std::size_t>(std::count(path.begin(), path.end(), '/'));
}

// ---------------------------------------------------------------------------

bool is_canonical_hex(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') return false;
  return std::all_of(hex.begin() + 1, hex.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); });
}

std::optional<std::string> normalize_hex(std::string_view hex) {
  if (hex.empty() || hex[0] != '#') return std::nullopt;
  std::string digits;
  for (char c : hex.substr(1)) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
    digits += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (digits.size() == 3) {
    digits = {digits[0], digits[0], digits[1], digits[1], digits[2], digits[2]};
  }
  if (digits.size() != 6) return std::nullopt;
  return "#" + digits;
}

double round6(double value) {
  if (!std::isfinite(value)) return value;
  double r = std::round(value * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // drop negative zero
}

StyleSpec canonicalize(StyleSpec style) {
  std::sort(style.modifiers.begin(), style.modifiers.end());
  style.modifiers.erase(std::unique(style.modifiers.begin(), style.modifiers.end()),
                        style.modifiers.end());
  return style;
}

ColorSpec canonicalize(ColorSpec color) {
  if (auto h = normalize_hex(color.primary_hex)) color.primary_hex = *h;
  for (auto& p : color.palette) {
    if (auto h = normalize_hex(p)) p = *h;
  }
  color.contrast = round6(color.contrast);
  return color;
}

SceneGraph canonicalize(SceneGraph scene) {
  scene.style = canonicalize(std::move(scene.style));
  scene.lighting.shadow_strength = round6(scene.lighting.shadow_strength);
  for (auto& c : scene.theme_concepts) {
    std::sort(c.keywords.begin(), c.keywords.end());
    c.keywords.erase(std::unique(c.keywords.begin(), c.keywords.end()), c.keywords.end());
    c.weight = round6(c.weight);
  }
  canonicalize_elements(scene.elements, "");
  return scene;
}

CompositionTemplate canonicalize(CompositionTemplate tmpl) {
  for (auto& r : tmpl.regions) {
    r.bbox = round_box(r.bbox);
    r.salience = round6(r.salience);
  }
  return tmpl;
}

// ---------------------------------------------------------------------------

std::size_t count_elements(const std::vector<SceneElement>& elements) {
  std::size_t n = 0;
  walk(elements, [&](const SceneElement&) { ++n; });
  return n;
}

std::size_t count_elements(const SceneGraph& scene) { return count_elements(scene.elements); }

std::vector<const SceneElement*> preorder(const SceneGraph& scene) {
  std::vector<const SceneElement*> out;
  walk(scene.elements, [&](const SceneElement& e) { out.push_back(&e); });
  return out;
}

const SceneElement* find_element(const SceneGraph& scene, std::string_view path) {
  auto chain = lineage(scene, path);
  return chain.empty() ? nullptr : chain.back();
}

StyleSpec effective_style(const SceneGraph& scene, std::string_view path) {
  auto chain = lineage(scene, path);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->style) return *(*it)->style;
  }
  return scene.style;
}

ColorSpec effective_color(const SceneGraph& scene, std::string_view path) {
  auto chain = lineage(scene, path);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->color) return *(*it)->color;
  }
  return ColorSpec{};
}

std::optional<std::string> effective_region(const SceneGraph& scene, std::string_view path) {
  auto chain = lineage(scene, path);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->region_id) return (*it)->region_id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

double template_coverage(const CompositionTemplate& tmpl) {
  constexpr int kGrid = 100;
  int covered = 0;
  for (int iy = 0; iy < kGrid; ++iy) {
    double y = (iy + 0.5) / kGrid;
    for (int ix = 0; ix < kGrid; ++ix) {
      double x = (ix + 0.5) / kGrid;
      bool hit = std::any_of(tmpl.regions.begin(), tmpl.regions.end(), [&](const Region& r) {
        return x >= r.bbox.x0 && x <= r.bbox.x1 && y >= r.bbox.y0 && y <= r.bbox.y1;
      });
      if (hit) ++covered;
    }
  }
  return static_cast<double>(covered) / (kGrid * kGrid);
}

std::vector<Violation> validate_template(const CompositionTemplate& tmpl) {
  std::vector<Violation> out;
  if (tmpl.id.empty()) out.push_back({"", "empty-id", "template id is empty"});
  std::set<std::string> ids;
  for (const auto& r : tmpl.regions) {
    if (r.id.empty()) out.push_back({"", "empty-id", "region id is empty"});
    if (!ids.insert(r.id).second) out.push_back({r.id, "duplicate-region", ""});
    if (!is_well_formed(r.bbox)) out.push_back({r.id, "bbox-out-of-range", ""});
    if (!(r.salience >= 0.0 && r.salience <= 1.0)) {
      out.push_back({r.id, "salience-out-of-range", ""});
    }
  }
  if (tmpl.focal_count() == 0) out.push_back({"", "needs-focal", "no region has role focal"});
  double coverage = template_coverage(tmpl);
  if (coverage < 0.9) {
    out.push_back({"", "insufficient-coverage",
                   "regions cover " + std::to_string(coverage * 100.0) + "% of the canvas"});
  }
  return out;
}

namespace {

void validate_scene_impl(const SceneGraph& scene, const CompositionTemplate* tmpl,
                         std::size_t budget, std::vector<Violation>& out) {
  const auto& cv = scene.canvas;
  if (cv.width_px < 64 || cv.height_px < 64) {
    out.push_back({"", "canvas-too-small", "canvas must be at least 64x64"});
  }
  if (!cv.aspect_label.empty()) {
    auto ratio = parse_aspect(cv.aspect_label);
    if (!ratio) {
      out.push_back({"", "aspect-mismatch", "unparsable aspect label '" + cv.aspect_label + "'"});
    } else if (cv.height_px > 0) {
      double actual = static_cast<double>(cv.width_px) / cv.height_px;
      if (std::abs(actual - *ratio) > kAspectTolerance * *ratio) {
        out.push_back({"", "aspect-mismatch", cv.aspect_label + " vs actual size"});
      }
    }
  }
  check_style(scene.style, "", out);
  if (!(scene.lighting.shadow_strength >= 0.0 && scene.lighting.shadow_strength <= 1.0)) {
    out.push_back({"", "shadow-out-of-range", ""});
  }
  if (!scene.theme_concepts.empty()) {
    double total = 0.0;
    for (const auto& c : scene.theme_concepts) {
      if (c.keywords.empty()) out.push_back({"", "concept-empty-keywords", c.label});
      if (!(c.weight > 0.0 && c.weight <= 1.0)) out.push_back({"", "concept-weight-range", c.label});
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      out.push_back({"", "concept-weights", "weights sum to " + std::to_string(total)});
    }
  }

  std::set<std::string> seen;
  std::size_t count = 0;
  std::function<void(const std::vector<SceneElement>&, const SceneElement*)> visit =
      [&](const std::vector<SceneElement>& level, const SceneElement* parent) {
        for (const auto& e : level) {
          ++count;
          std::string expected = join_path(parent ? parent->path : "", e.id);
          const std::string& where = e.path.empty() ? expected : e.path;
          if (!is_valid_element_id(e.id)) out.push_back({where, "invalid-id", "'" + e.id + "'"});
          if (e.path != expected) {
            out.push_back({where, "path-mismatch", "expected '" + expected + "'"});
          }
          if (!seen.insert(e.path).second) out.push_back({where, "duplicate-path", ""});
          if (trim(e.content).empty()) out.push_back({where, "empty-content", ""});
          if (!is_well_formed(e.bbox)) {
            out.push_back({where, "bbox-out-of-range", ""});
          } else if (parent && !contains(parent->bbox, e.bbox)) {
            out.push_back({where, "bbox-not-contained", "child escapes parent bbox"});
          }
          if (e.style) check_style(*e.style, where, out);
          if (e.color) check_color(*e.color, where, out);
          if (e.region_id && tmpl && !tmpl->find_region(*e.region_id)) {
            out.push_back({where, "unknown-region",
                           "'" + *e.region_id + "' not in template '" + tmpl->id + "'"});
          }
          visit(e.children, &e);
        }
      };
  visit(scene.elements, nullptr);

  if (count > budget) {
    out.push_back({"", "budget-exceeded",
                   std::to_string(count) + " elements, budget " + std::to_string(budget)});
  }
}

}  // namespace

std::vector<Violation> validate_scene(const SceneGraph& scene, std::size_t element_budget) {
  std::vector<Violation> out;
  validate_scene_impl(scene, nullptr, element_budget, out);
  return out;
}

std::vector<Violation> validate_scene(const SceneGraph& scene, const CompositionTemplate& tmpl,
                                      std::size_t element_budget) {
  std::vector<Violation> out;
  if (!scene.template_id.empty() && scene.template_id != tmpl.id) {
    out.push_back({"", "template-mismatch",
                   "scene references '" + scene.template_id + "', got '" + tmpl.id + "'"});
  }
  validate_scene_impl(scene, &tmpl, element_budget, out);
  return out;
}

void require_valid(const std::vector<Violation>& violations) {
  if (!violations.empty()) throw ValidationError(ErrorCode::InvalidScene, violations);
}

// ---------------------------------------------------------------------------

DetailSet scene_to_detailset(const SceneGraph& scene) {
  require_valid(validate_scene(scene, std::numeric_limits<std::size_t>::max()));
  DetailSet out;
  walk(scene.elements, [&](const SceneElement& e) {
    DetailRecord r;
    r.content = e.content;
    r.bbox = e.bbox;
    r.style = e.style;
    r.color = e.color;
    r.z_order = e.z_order;
    r.region_id = e.region_id;
    out.entries.emplace(e.path, std::move(r));
  });
  return out;
}

SceneGraph detailset_to_scene(const DetailSet& details, const SceneGraph& base) {
  std::vector<Violation> bad;
  for (const auto& [path, rec] : details.entries) {
    if (!is_valid_path(path)) {
      throw Error(ErrorCode::InvalidPath, "invalid element path '" + path + "'");
    }
    auto parent = parent_path(path);
    if (!parent.empty() && !details.entries.count(parent)) {
      throw Error(ErrorCode::OrphanPath, "path '" + path + "' has no parent entry '" + parent + "'");
    }
    if (!rec.content || !rec.bbox) {
      bad.push_back({path, "incomplete-record", "content and bbox are required"});
    }
  }
  if (!bad.empty()) throw ValidationError(ErrorCode::InvalidScene, std::move(bad));

  // std::map iterates parents before their descendants ("a" < "a/b").
  std::map<std::string, SceneElement> nodes;
  for (const auto& [path, rec] : details.entries) {
    SceneElement e;
    e.id = leaf_id(path);
    e.path = path;
    e.content = *rec.content;
    e.bbox = *rec.bbox;
    e.style = rec.style;
    e.color = rec.color;
    e.z_order = rec.z_order.value_or(0);
    e.region_id = rec.region_id;
    nodes.emplace(path, std::move(e));
  }
  // Attach deepest paths first so each subtree is complete when moved.
  std::vector<std::string> order;
  order.reserve(nodes.size());
  for (const auto& [path, node] : nodes) order.push_back(path);
  std::stable_sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
    return path_depth(a) > path_depth(b);
  });

  SceneGraph scene = base;
  scene.elements.clear();
  for (const auto& path : order) {
    auto parent = parent_path(path);
    auto node = std::move(nodes.at(path));
    if (parent.empty()) {
      scene.elements.push_back(std::move(node));
    } else {
      nodes.at(parent).children.push_back(std::move(node));
    }
  }
  scene = canonicalize(std::move(scene));
  require_valid(validate_scene(scene, std::numeric_limits<std::size_t>::max()));
  return scene;
}

}  // namespace sde
