#include "sde/json_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace sde {

namespace {

void dump_number(double value, std::string& out) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidScene, "non-finite number in scene");
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), round6(value),
                                 std::chars_format::fixed, 6);
  std::string text(buf.data(), end);
  text.erase(text.find_last_not_of('0') + 1);
  if (text.back() == '.') text.pop_back();
  if (text == "-0") text = "0";
  out += text;
}

void dump(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace);
        out += ':';
        dump(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ',';
        dump(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      dump_number(j.get<double>(), out);
      break;
    default:
      out += j.dump(-1, ' ', false, json::error_handler_t::replace);
  }
}

[[noreturn]] void missing(std::string_view field, std::string_view where) {
  throw ValidationError(ErrorCode::InvalidScene,
                        {{std::string(where), "missing-field", std::string(field)}});
}

const json& need(const json& j, const char* key, std::string_view where = "") {
  if (!j.is_object()) {
    throw Error(ErrorCode::ParseError, "expected a JSON object for " +
                                           std::string(where.empty() ? "scene" : where));
  }
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) missing(key, where);
  return *it;
}

template <typename T>
T get_as(const json& j, const char* key, std::string_view where = "") {
  try {
    return need(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  dump(value, out);
  return out;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "malformed " + std::string(what) + ": " + e.what());
  }
}

void to_json(json& j, const BBox& b) { j = json::array({b.x0, b.y0, b.x1, b.y1}); }

void from_json(const json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4 ||
      !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
    throw Error(ErrorCode::ParseError, "bbox must be an array of 4 numbers");
  }
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const Canvas& c) {
  j = json{{"height_px", c.height_px}, {"width_px", c.width_px}};
  if (!c.aspect_label.empty()) j["aspect_label"] = c.aspect_label;
}

void from_json(const json& j, Canvas& c) {
  c.width_px = get_as<int>(j, "width_px", "canvas");
  c.height_px = get_as<int>(j, "height_px", "canvas");
  c.aspect_label = get_opt<std::string>(j, "aspect_label").value_or("");
}

void to_json(json& j, const Region& r) {
  j = json{{"bbox", r.bbox}, {"id", r.id}, {"role", to_string(r.role)}, {"salience", r.salience}};
}

void from_json(const json& j, Region& r) {
  r.id = get_as<std::string>(j, "id", "region");
  r.bbox = get_as<BBox>(j, "bbox", r.id);
  auto role = region_role_from_string(get_as<std::string>(j, "role", r.id));
  if (!role) throw Error(ErrorCode::ParseError, "region '" + r.id + "': unknown role");
  r.role = *role;
  r.salience = get_as<double>(j, "salience", r.id);
}

void to_json(json& j, const CompositionTemplate& t) {
  j = json{{"description", t.description}, {"id", t.id}, {"name", t.name}, {"regions", t.regions}};
}

void from_json(const json& j, CompositionTemplate& t) {
  t.id = get_as<std::string>(j, "id", "template");
  t.name = get_opt<std::string>(j, "name").value_or(t.id);
  t.description = get_opt<std::string>(j, "description").value_or("");
  t.regions = get_as<std::vector<Region>>(j, "regions", t.id);
}

void to_json(json& j, const ColorSpec& c) {
  j = json{{"contrast", c.contrast}, {"palette", c.palette}, {"primary_hex", c.primary_hex}};
}

void from_json(const json& j, ColorSpec& c) {
  if (j.is_string()) {  // shorthand "#RRGGBB"
    c = ColorSpec{};
    c.primary_hex = j.get<std::string>();
    return;
  }
  c.primary_hex = get_as<std::string>(j, "primary_hex", "color");
  c.palette = get_opt<std::vector<std::string>>(j, "palette").value_or(std::vector<std::string>{});
  c.contrast = get_opt<double>(j, "contrast").value_or(0.5);
}

void to_json(json& j, const StyleSpec& s) {
  j = json{{"abstraction_level", s.abstraction_level},
           {"modifiers", s.modifiers},
           {"style_name", s.style_name}};
}

void from_json(const json& j, StyleSpec& s) {
  s.style_name = get_as<std::string>(j, "style_name", "style");
  s.modifiers = get_opt<std::vector<std::string>>(j, "modifiers").value_or(std::vector<std::string>{});
  s.abstraction_level = get_opt<int>(j, "abstraction_level").value_or(5);
}

void to_json(json& j, const LightingSpec& l) {
  j = json{{"light_direction", to_string(l.light_direction)},
           {"mood", l.mood},
           {"reflection", l.reflection},
           {"shadow_strength", l.shadow_strength}};
}

void from_json(const json& j, LightingSpec& l) {
  auto dir = light_direction_from_string(get_as<std::string>(j, "light_direction", "lighting"));
  if (!dir) throw Error(ErrorCode::ParseError, "lighting: unknown light_direction");
  l.light_direction = *dir;
  l.mood = get_opt<std::string>(j, "mood").value_or("");
  l.shadow_strength = get_as<double>(j, "shadow_strength", "lighting");
  l.reflection = get_opt<bool>(j, "reflection").value_or(false);
}

void to_json(json& j, const ThemeConcept& c) {
  j = json{{"keywords", c.keywords}, {"label", c.label}, {"weight", c.weight}};
}

void from_json(const json& j, ThemeConcept& c) {
  c.label = get_as<std::string>(j, "label", "theme_concepts");
  c.keywords = get_as<std::vector<std::string>>(j, "keywords", c.label);
  c.weight = get_as<double>(j, "weight", c.label);
}

void to_json(json& j, const SceneElement& e) {
  j = json{{"bbox", e.bbox},         {"children", e.children}, {"content", e.content},
           {"id", e.id},             {"path", e.path},         {"z_order", e.z_order}};
  if (e.region_id) j["region_id"] = *e.region_id;
  if (e.style) j["style"] = *e.style;
  if (e.color) j["color"] = *e.color;
}

void from_json(const json& j, SceneElement& e) {
  e.id = get_as<std::string>(j, "id", "element");
  e.path = get_opt<std::string>(j, "path").value_or("");
  e.region_id = get_opt<std::string>(j, "region_id");
  e.bbox = get_as<BBox>(j, "bbox", e.id);
  e.content = get_as<std::string>(j, "content", e.id);
  e.style = get_opt<StyleSpec>(j, "style");
  e.color = get_opt<ColorSpec>(j, "color");
  e.z_order = get_opt<int>(j, "z_order").value_or(0);
  e.children = get_opt<std::vector<SceneElement>>(j, "children").value_or(std::vector<SceneElement>{});
}

void to_json(json& j, const SceneGraph& s) {
  j = json{{"canvas", s.canvas},
           {"elements", s.elements},
           {"iteration_index", s.iteration_index},
           {"lighting", s.lighting},
           {"seed", s.seed},
           {"style", s.style},
           {"template_id", s.template_id},
           {"theme", s.theme},
           {"theme_concepts", s.theme_concepts}};
}

void from_json(const json& j, SceneGraph& s) {
  s.canvas = get_as<Canvas>(j, "canvas");
  s.theme = get_as<std::string>(j, "theme");
  s.theme_concepts =
      get_opt<std::vector<ThemeConcept>>(j, "theme_concepts").value_or(std::vector<ThemeConcept>{});
  s.template_id = get_as<std::string>(j, "template_id");
  s.style = get_as<StyleSpec>(j, "style");
  s.lighting = get_as<LightingSpec>(j, "lighting");
  s.elements = get_as<std::vector<SceneElement>>(j, "elements");
  s.iteration_index = get_opt<std::uint64_t>(j, "iteration_index").value_or(0);
  s.seed = get_opt<std::uint64_t>(j, "seed").value_or(0);
}

void to_json(json& j, const DetailRecord& r) {
  j = json::object();
  if (r.content) j["content"] = *r.content;
  if (r.bbox) j["bbox"] = *r.bbox;
  if (r.style) j["style"] = *r.style;
  if (r.color) j["color"] = *r.color;
  if (r.z_order) j["z_order"] = *r.z_order;
  if (r.region_id) j["region_id"] = *r.region_id;
}

void from_json(const json& j, DetailRecord& r) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "element record must be an object");
  r.content = get_opt<std::string>(j, "content");
  r.bbox = get_opt<BBox>(j, "bbox");
  r.style = get_opt<StyleSpec>(j, "style");
  r.color = get_opt<ColorSpec>(j, "color");
  r.z_order = get_opt<int>(j, "z_order");
  r.region_id = get_opt<std::string>(j, "region_id");
}

void to_json(json& j, const Violation& v) {
  j = json{{"message", v.message}, {"path", v.path}, {"rule", v.rule}};
}

}  // namespace sde
