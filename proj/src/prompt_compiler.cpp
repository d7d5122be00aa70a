#include "sde/prompt_compiler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "sde/hashing.hpp"
#include "sde/json_io.hpp"

namespace sde {

namespace {

constexpr std::array<PaletteColor, 12> kPalette{{
    {"crimson", "#E63946"},
    {"orange", "#F4A261"},
    {"saffron", "#E9C46A"},
    {"teal", "#2A9D8F"},
    {"slate", "#264653"},
    {"steel blue", "#457B9D"},
    {"navy", "#1D3557"},
    {"sage green", "#8AB17D"},
    {"purple", "#6A4C93"},
    {"pink", "#FF70A6"},
    {"brown", "#8D6E63"},
    {"ivory", "#F1FAEE"},
}};

std::array<int, 3> rgb(std::string_view hex) {
  auto canon = normalize_hex(hex).value_or("#808080");
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) {
    std::from_chars(canon.data() + 1 + 2 * i, canon.data() + 3 + 2 * i, out[i], 16);
  }
  return out;
}

// Fixed-point text with at most `digits` decimals, trailing zeros trimmed.
std::string format_number(double value, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
  std::string text(buf, end);
  if (text.find('.') != std::string::npos) {
    text.erase(text.find_last_not_of('0') + 1);
    if (text.back() == '.') text.pop_back();
  }
  if (text == "-0") text = "0";
  return text;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string_view light_phrase(LightDirection d) {
  switch (d) {
    case LightDirection::top_left: return "light from the upper left";
    case LightDirection::top: return "light from above";
    case LightDirection::top_right: return "light from the upper right";
    case LightDirection::left: return "light from the left";
    case LightDirection::right: return "light from the right";
    case LightDirection::frontal: return "frontal light";
    case LightDirection::backlit: return "backlighting";
  }
  return "frontal light";
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string element_sentence(const SceneGraph& scene, const SceneElement& e) {
  auto color = effective_color(scene, e.path);
  auto style = effective_style(scene, e.path);
  std::string s = "Depict ";
  s += e.content;
  s += " at the ";
  s += position_phrase(e.bbox.center_x(), e.bbox.center_y());
  s += " in ";
  s += nearest_color_name(color.primary_hex);
  std::vector<std::string> notable;
  if (style.style_name != scene.style.style_name && !style.style_name.empty()) {
    notable.push_back(style.style_name + " style");
  }
  for (const auto& m : style.modifiers) {
    if (!std::binary_search(scene.style.modifiers.begin(), scene.style.modifiers.end(), m)) {
      notable.push_back(m);
    }
  }
  if (!notable.empty()) s += ", " + join(notable, ", ");
  s += '.';
  return s;
}

}  // namespace

std::string serialize_scene(const SceneGraph& scene) {
  auto canon = canonicalize(scene);
  require_valid(validate_scene(canon, std::numeric_limits<std::size_t>::max()));
  return canonical_dump(json(canon));
}

SceneGraph deserialize_scene(std::string_view text) {
  auto doc = parse_json(text, "scene");
  SceneGraph scene;
  try {
    scene = doc.get<SceneGraph>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scene: ") + e.what());
  }
  // Paths are recomputed from ids; a stated path that disagrees is an error.
  std::vector<Violation> stated;
  std::vector<std::pair<const std::vector<SceneElement>*, std::string>> stack{{&scene.elements, ""}};
  while (!stack.empty()) {
    auto [level, parent] = stack.back();
    stack.pop_back();
    for (const auto& e : *level) {
      auto expected = join_path(parent, e.id);
      if (!e.path.empty() && e.path != expected) {
        stated.push_back({e.path, "path-mismatch", "expected '" + expected + "'"});
      }
      stack.emplace_back(&e.children, expected);
    }
  }
  if (!stated.empty()) throw ValidationError(ErrorCode::InvalidScene, std::move(stated));

  scene = canonicalize(std::move(scene));
  require_valid(validate_scene(scene, std::numeric_limits<std::size_t>::max()));
  return scene;
}

std::string scene_hash(const SceneGraph& scene) { return sha256_hex(serialize_scene(scene)); }

bool canonically_equal(const SceneGraph& a, const SceneGraph& b) {
  return serialize_scene(a) == serialize_scene(b);
}

const std::array<PaletteColor, 12>& named_palette() { return kPalette; }

std::string_view nearest_color_name(std::string_view hex) {
  auto target = rgb(hex);
  std::string_view best;
  long best_d = std::numeric_limits<long>::max();
  for (const auto& entry : kPalette) {
    auto c = rgb(entry.hex);
    long d = 0;
    for (int i = 0; i < 3; ++i) d += static_cast<long>(c[i] - target[i]) * (c[i] - target[i]);
    if (d < best_d) {
      best_d = d;
      best = entry.name;
    }
  }
  return best;
}

std::string_view position_phrase(double x, double y) {
  static constexpr std::string_view kPhrases[3][3] = {
      {"upper left", "upper center", "upper right"},
      {"middle left", "center", "middle right"},
      {"lower left", "lower center", "lower right"},
  };
  auto cell = [](double v) { return v < 1.0 / 3.0 ? 0 : (v < 2.0 / 3.0 ? 1 : 2); };
  return kPhrases[cell(y)][cell(x)];
}

std::string compile_prompt(const SceneGraph& input, const CompositionTemplate& tmpl,
                           const PromptOptions& options) {
  auto scene = canonicalize(input);
  require_valid(validate_scene(scene, tmpl, std::numeric_limits<std::size_t>::max()));

  std::vector<std::string> lines;
  lines.push_back(scene.theme.empty() ? "An illustration." : "An illustration of " + scene.theme + ".");

  std::string style = "Style: " + (scene.style.style_name.empty() ? std::string("unspecified")
                                                                  : scene.style.style_name);
  style += ", abstraction level " + std::to_string(scene.style.abstraction_level) + " of 10";
  if (!scene.style.modifiers.empty()) style += ", " + join(scene.style.modifiers, ", ");
  lines.push_back(style + ".");

  auto elements = preorder(scene);
  if (!elements.empty()) {
    lines.push_back("Composition: " + tmpl.name + " layout.");
    std::set<std::string> placed;
    auto emit_group = [&](const std::optional<std::string>& region) {
      std::vector<std::string> sentences;
      for (const auto* e : elements) {
        if (placed.count(e->path)) continue;
        auto r = effective_region(scene, e->path);
        bool match = region ? (r == region) : true;
        if (!match) continue;
        placed.insert(e->path);
        sentences.push_back(element_sentence(scene, *e));
      }
      if (!sentences.empty()) lines.push_back(join(sentences, " "));
    };
    for (const auto& r : tmpl.regions) emit_group(r.id);
    emit_group(std::nullopt);  // elements without a region
  }

  const auto& l = scene.lighting;
  std::string lighting = "Lighting: ";
  lighting += light_phrase(l.light_direction);
  if (!l.mood.empty()) lighting += ", " + l.mood + " mood";
  lighting += ", shadow strength " + format_number(l.shadow_strength, 6);
  lighting += l.reflection ? ", with reflections." : ", no reflections.";
  lines.push_back(lighting);
  if (!options.suffix.empty()) lines.push_back(options.suffix);

  return join(lines, "\n") + "\n";
}

std::string render_debug_svg(const SceneGraph& input, const CompositionTemplate& tmpl) {
  auto scene = canonicalize(input);
  require_valid(validate_scene(scene, tmpl, std::numeric_limits<std::size_t>::max()));

  const double w = scene.canvas.width_px;
  const double h = scene.canvas.height_px;
  auto px = [](double v) { return format_number(v, 2); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + px(w) +
         "\" height=\"" + px(h) + "\" viewBox=\"0 0 " + px(w) + " " + px(h) + "\">\n";
  out += "<title>" + xml_escape(scene.theme) + "</title>\n";
  for (const auto& r : tmpl.regions) {
    out += "<rect class=\"region\" data-region=\"" + xml_escape(r.id) + "\" data-role=\"" +
           std::string(to_string(r.role)) + "\" x=\"" + px(r.bbox.x0 * w) + "\" y=\"" +
           px(r.bbox.y0 * h) + "\" width=\"" + px(r.bbox.width() * w) + "\" height=\"" +
           px(r.bbox.height() * h) +
           "\" fill=\"none\" stroke=\"#9E9E9E\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (const auto* e : preorder(scene)) {
    auto color = effective_color(scene, e->path);
    double opacity = std::max(0.3, 0.9 - 0.2 * static_cast<double>(path_depth(e->path)));
    double x = e->bbox.x0 * w;
    double y = e->bbox.y0 * h;
    out += "<rect class=\"element\" data-path=\"" + xml_escape(e->path) + "\" x=\"" + px(x) +
           "\" y=\"" + px(y) + "\" width=\"" + px(e->bbox.width() * w) + "\" height=\"" +
           px(e->bbox.height() * h) + "\" fill=\"" + color.primary_hex + "\" fill-opacity=\"" +
           format_number(opacity, 2) + "\"/>\n";
    out += "<text class=\"label\" x=\"" + px(x + 4) + "\" y=\"" + px(y + 14) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(e->id) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sde
