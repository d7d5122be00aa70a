#include "sde/detailing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sde/backends.hpp"
#include "sde/composition.hpp"
#include "sde/hashing.hpp"
#include "sde/prompt_compiler.hpp"

namespace sde {

namespace {

constexpr double kRegionMargin = 0.10;
constexpr double kCellMargin = 0.05;

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::string slug(std::string_view name) {
  std::string out;
  for (char c : trim(name)) {
    auto u = static_cast<unsigned char>(c);
    if (c == '/' || std::isspace(u)) {
      if (!out.empty() && out.back() != '-') out += '-';
    } else {
      out += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "element" : out;
}

std::string unique_id(std::string base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 2;; ++i) {
    auto candidate = base + "-" + std::to_string(i);
    if (!taken.count(candidate)) return candidate;
  }
}

// Reply text that must not be blank; one reprompt before giving up.
std::string complete_nonempty(TextClient& backend, TextRequest req) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto text = trim(text_complete(backend, req).text);
    if (!text.empty()) return text;
    req.user += "\n(Your previous reply was empty. Reply with one sentence.)";
  }
  throw Error(ErrorCode::MalformedOutput, std::string(to_string(req.task)) + " reply was empty twice");
}

SceneElement* find_mutable(std::vector<SceneElement>& level, std::string_view path) {
  auto slash = path.find('/');
  auto id = path.substr(0, slash);
  for (auto& e : level) {
    if (e.id != id) continue;
    if (slash == std::string_view::npos) return &e;
    return find_mutable(e.children, path.substr(slash + 1));
  }
  return nullptr;
}

struct Proposal {
  std::string name;
  std::string description;
};

std::optional<std::string> check_expansion_reply(const json& reply) {
  if (!reply.is_object() || !reply.contains("children") || !reply["children"].is_array()) {
    return "expected an object with a \"children\" array";
  }
  for (const auto& c : reply["children"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
        trim(c["name"].get<std::string>()).empty()) {
      return "every child needs a non-empty string \"name\"";
    }
    if (!c.contains("description") || !c["description"].is_string() ||
        trim(c["description"].get<std::string>()).empty()) {
      return "every child needs a non-empty string \"description\"";
    }
  }
  return std::nullopt;
}

class Expander {
 public:
  Expander(const SceneGraph& scene, const ExpansionConfig& config, TextClient& backend)
      : scene_(scene), config_(config), backend_(backend), count_(count_elements(scene)) {}

  void expand(SceneElement& node, std::size_t depth) {
    if (depth >= config_.max_depth) return;
    if (!node.children.empty()) {
      for (auto& child : node.children) expand(child, depth + 1);
      return;
    }
    if (count_ >= config_.element_budget) return;

    auto proposals = propose(node);
    const std::size_t n = proposals.size();
    if (n == 0) return;
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t rows = (n + cols - 1) / cols;
    const double cw = node.bbox.width() / static_cast<double>(cols);
    const double ch = node.bbox.height() / static_cast<double>(rows);

    std::set<std::string> taken;
    for (std::size_t i = 0; i < n; ++i) {
      if (count_ >= config_.element_budget) break;
      const auto r = i / cols;
      const auto c = i % cols;
      SceneElement child;
      child.id = unique_id(slug(proposals[i].name), taken);
      taken.insert(child.id);
      child.path = join_path(node.path, child.id);
      child.content = proposals[i].description;
      child.bbox = inset({node.bbox.x0 + static_cast<double>(c) * cw,
                          node.bbox.y0 + static_cast<double>(r) * ch,
                          node.bbox.x0 + static_cast<double>(c + 1) * cw,
                          node.bbox.y0 + static_cast<double>(r + 1) * ch},
                         kCellMargin);
      child.z_order = static_cast<int>(i);
      node.children.push_back(std::move(child));
      ++count_;
      expand(node.children.back(), depth + 1);
    }
  }

 private:
  std::vector<Proposal> propose(const SceneElement& node) {
    TextRequest req;
    req.task = TextTask::expand;
    req.seed = scene_.seed;
    req.system =
        "You break a picture element into its visual sub-elements. Reply with JSON only: "
        "{\"children\": [{\"name\": str, \"position\": str, \"description\": str}]}.";
    req.user = "Illustration theme: " + scene_.theme + "\nElement: " + node.content +
               "\nPropose at most " + std::to_string(config_.max_children) +
               " sub-elements with a short name, a relative position inside the element, and a "
               "one-sentence visual description.";
    req.context = {{"content", node.content},
                   {"id", node.id},
                   {"max_children", config_.max_children},
                   {"theme", scene_.theme}};
    auto reply = complete_structured(backend_, req, check_expansion_reply);
    std::vector<Proposal> out;
    for (const auto& c : reply["children"]) {
      if (out.size() >= config_.max_children) break;
      out.push_back({c["name"].get<std::string>(), trim(c["description"].get<std::string>())});
    }
    return out;
  }

  const SceneGraph& scene_;
  const ExpansionConfig& config_;
  TextClient& backend_;
  std::size_t count_;
};

}  // namespace

std::vector<Violation> validate_expansion_config(const ExpansionConfig& config) {
  std::vector<Violation> out;
  if (config.max_children < 1) out.push_back({"", "max-children", "must be at least 1"});
  if (config.element_budget < 1) out.push_back({"", "element-budget", "must be at least 1"});
  return out;
}

std::string palette_color_for(std::uint64_t seed, std::string_view label) {
  const auto& palette = named_palette();
  return std::string(palette[stable_hash(seed, label) % palette.size()].hex);
}

SceneGraph populate_scene(const std::string& theme, const std::vector<ThemeConcept>& concepts,
                          const CompositionTemplate& tmpl, const StyleSpec& style,
                          TextClient* backend, std::uint64_t seed, const SceneDefaults& defaults) {
  auto template_issues = validate_template(tmpl);
  if (!template_issues.empty()) throw ValidationError(ErrorCode::InvalidTemplate, template_issues);

  SceneGraph scene;
  scene.canvas = defaults.canvas;
  scene.theme = theme;
  scene.theme_concepts = concepts;
  scene.template_id = tmpl.id;
  scene.style = canonicalize(style);
  scene.lighting = defaults.lighting;
  scene.seed = seed;

  auto regions = assign_regions(concepts, tmpl);
  std::vector<const ThemeConcept*> ordered;
  for (const auto& c : concepts) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const ThemeConcept* a, const ThemeConcept* b) {
    return a->weight != b->weight ? a->weight > b->weight : a->label < b->label;
  });

  std::set<std::string> taken;
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    const auto& concept_ref = *ordered[rank];
    const Region* region = tmpl.find_region(regions.at(concept_ref.label));

    SceneElement e;
    e.id = unique_id(slug(concept_ref.label), taken);
    taken.insert(e.id);
    e.path = e.id;
    e.region_id = region->id;
    e.bbox = inset(region->bbox, kRegionMargin);
    e.z_order = static_cast<int>(rank);
    e.color = ColorSpec{palette_color_for(seed, concept_ref.label), {}, 0.5};
    if (backend) {
      TextRequest req;
      req.task = TextTask::describe;
      req.seed = seed;
      req.system = "You describe one visual element of an illustration in a single sentence.";
      req.user = "Illustration theme: " + theme + "\nConcept: " + concept_ref.label +
                 "\nRelated keywords: ";
      for (std::size_t i = 0; i < concept_ref.keywords.size(); ++i) {
        req.user += (i ? ", " : "") + concept_ref.keywords[i];
      }
      req.user += "\nDescribe how this concept should be depicted.";
      req.context = {{"keywords", concept_ref.keywords}, {"label", concept_ref.label}, {"theme", theme}};
      e.content = complete_nonempty(*backend, req);
    } else {
      e.content = "a depiction of " + concept_ref.label;
    }
    scene.elements.push_back(std::move(e));
  }

  scene = canonicalize(std::move(scene));
  require_valid(validate_scene(scene, tmpl, defaults.element_budget));
  return scene;
}

SceneGraph expand_recursive(const SceneGraph& input, const std::optional<std::string>& target_path,
                            const ExpansionConfig& config, TextClient& backend) {
  auto config_issues = validate_expansion_config(config);
  if (!config_issues.empty()) throw ValidationError(ErrorCode::BadArgument, config_issues);
  SceneGraph scene = canonicalize(input);
  require_valid(validate_scene(scene, config.element_budget));

  Expander expander(scene, config, backend);
  if (target_path) {
    auto* target = find_mutable(scene.elements, *target_path);
    if (!target) throw Error(ErrorCode::PathNotFound, "no element at '" + *target_path + "'");
    expander.expand(*target, 0);
  } else {
    for (auto& root : scene.elements) expander.expand(root, 0);
  }

  scene = canonicalize(std::move(scene));
  require_valid(validate_scene(scene, config.element_budget));
  return scene;
}

DetailSet fuse_history(const std::vector<DetailSet>& history, const DetailSet& current,
                       TextClient* backend, std::uint64_t seed) {
  DetailSet out = current;
  for (const auto& past : history) {
    for (const auto& [path, rec] : past.entries) out.entries.try_emplace(path);
  }

  auto fill = [&](auto member, const std::string& path, auto& slot) {
    if (slot) return;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      auto found = it->entries.find(path);
      if (found != it->entries.end() && found->second.*member) {
        slot = found->second.*member;
        return;
      }
    }
  };

  for (auto& [path, rec] : out.entries) {
    std::optional<std::string> historical_content;
    fill(&DetailRecord::content, path, historical_content);
    fill(&DetailRecord::content, path, rec.content);
    fill(&DetailRecord::bbox, path, rec.bbox);
    fill(&DetailRecord::style, path, rec.style);
    fill(&DetailRecord::color, path, rec.color);
    fill(&DetailRecord::z_order, path, rec.z_order);
    fill(&DetailRecord::region_id, path, rec.region_id);

    if (backend && historical_content && rec.content && *rec.content != *historical_content) {
      TextRequest req;
      req.task = TextTask::fuse;
      req.seed = seed;
      req.system =
          "You merge two descriptions of the same picture element into one sentence. The newer "
          "description takes precedence; keep compatible details from the older one.";
      req.user = "Older description: " + *historical_content +
                 "\nNewer description: " + *rec.content + "\nMerged description:";
      req.context = {{"current", *rec.content}, {"previous", *historical_content}};
      rec.content = complete_nonempty(*backend, req);
    }
  }
  return out;
}

SceneGraph apply_lighting(const SceneGraph& input, const LightingSpec& lighting) {
  SceneGraph scene = input;
  scene.lighting = lighting;
  const double boost = 0.3 * lighting.shadow_strength;
  std::vector<std::vector<SceneElement>*> stack{&scene.elements};
  while (!stack.empty()) {
    auto* level = stack.back();
    stack.pop_back();
    for (auto& e : *level) {
      if (e.color) e.color->contrast = std::clamp(e.color->contrast + boost, 0.0, 1.0);
      stack.push_back(&e.children);
    }
  }
  return canonicalize(std::move(scene));
}

}  // namespace sde
