#include "sde/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "sde/composition.hpp"
#include "sde/hashing.hpp"

namespace sde {

namespace {

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::string lower(std::string text) {
  for (auto& c : text) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return text;
}

bool is_at_or_below(std::string_view path, std::string_view ancestor) {
  return path == ancestor ||
         (path.size() > ancestor.size() && path.substr(0, ancestor.size()) == ancestor &&
          path[ancestor.size()] == '/');
}

int stage_index(Stage s) { return static_cast<int>(s); }

[[noreturn]] void invalid_edit(std::size_t i, const std::string& why) {
  throw Error(ErrorCode::InvalidEdit, "edit " + std::to_string(i) + ": " + why);
}

std::string suggest_style(TextClient& backend, const std::string& text, std::uint64_t seed) {
  std::vector<std::string> names;
  for (const auto& s : style_catalog()) names.push_back(s.style_name);
  std::string options;
  for (std::size_t i = 0; i < names.size(); ++i) options += (i ? ", " : "") + names[i];

  TextRequest req;
  req.task = TextTask::style;
  req.seed = seed;
  req.system = "You choose the visual style for an illustration of a text.";
  req.user = "Text:\n" + text + "\n\nChoose exactly one style from: " + options +
             ".\nReply with the style name only.";
  req.context = {{"styles", names}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = lower(trim(text_complete(backend, req).text));
    while (!reply.empty() && (reply.back() == '.' || reply.back() == '"')) reply.pop_back();
    while (!reply.empty() && reply.front() == '"') reply.erase(reply.begin());
    if (find_style(reply)) return reply;
    req.user += "\n(Your previous reply \"" + reply + "\" is not one of the listed names.)";
  }
  throw Error(ErrorCode::MalformedOutput, "style reply did not name a listed style twice");
}

SessionState run_creativity(SessionState s, const AdvanceParams& params, const StageContext& ctx) {
  if (params.style) {
    s.style = canonicalize(*params.style);
  } else if (params.style_name) {
    const auto* style = find_style(*params.style_name);
    if (!style) throw Error(ErrorCode::BadArgument, "unknown style '" + *params.style_name + "'");
    s.style = *style;
  } else if (!s.style) {
    s.style = ctx.backends.text ? *find_style(suggest_style(*ctx.backends.text, s.input_text, s.seed))
                                : style_catalog().front();
  }
  return s;
}

SessionState run_theme(SessionState s, const AdvanceParams& params, const StageContext& ctx) {
  auto keywords = extract_keywords(s.input_text, ctx.config.extraction);
  auto k = params.k.value_or(default_cluster_count(keywords.size()));
  auto clustering = cluster(keywords, params.linkage.value_or(ctx.config.linkage), k);
  std::vector<std::vector<KeywordVector>> groups;
  for (const auto& members : clustering.clusters) {
    auto& g = groups.emplace_back();
    for (auto i : members) g.push_back(keywords[i]);
  }
  auto theme = derive_theme(groups, s.input_text, ctx.backends.text.get(), s.seed);
  s.theme = theme.theme;
  s.concepts = theme.concepts;
  return s;
}

SessionState run_composition(SessionState s, const AdvanceParams& params, const StageContext& ctx) {
  const auto& tmpl = params.template_id
                         ? find_template(ctx.library, *params.template_id)
                         : select_composition(s.concepts, ctx.library, ctx.config.major_weight);
  s.template_id = tmpl.id;
  return s;
}

SessionState run_detailing(SessionState s, const AdvanceParams& params, const StageContext& ctx) {
  const auto& tmpl = find_template(ctx.library, *s.template_id);
  auto expansion = params.expansion.value_or(ctx.config.expansion);
  auto issues = validate_expansion_config(expansion);
  if (!issues.empty()) throw ValidationError(ErrorCode::BadArgument, issues);

  SceneDefaults defaults;
  defaults.canvas = ctx.config.canvas;
  defaults.lighting = ctx.config.lighting;
  defaults.element_budget = expansion.element_budget;
  auto* text = ctx.backends.text.get();
  auto scene = populate_scene(*s.theme, s.concepts, tmpl, *s.style, text, s.seed, defaults);
  if (text && expansion.max_depth > 0) scene = expand_recursive(scene, std::nullopt, expansion, *text);
  scene = apply_lighting(scene, params.lighting.value_or(ctx.config.lighting));
  require_valid(validate_scene(scene, tmpl, expansion.element_budget));
  s.current_scene = std::move(scene);
  return s;
}

SessionState run_generate(SessionState s, const StageContext& ctx, std::vector<Edit> edits = {}) {
  const auto& tmpl = find_template(ctx.library, *s.template_id);
  const auto& scene = *s.current_scene;
  IterationRecord record;
  record.index = s.iterations.size();
  record.scene_snapshot = scene;
  record.compiled_prompt = compile_prompt(scene, tmpl, ctx.config.prompt);
  record.scene_hash = scene_hash(scene);
  record.user_edits = std::move(edits);

  auto run_dir = ctx.config.runs_dir / s.id / ("iter-" + std::to_string(record.index));
  if (!ctx.backends.image) throw Error(ErrorCode::BackendError, "no image backend configured");
  auto client = ctx.backends.image(scene, tmpl, run_dir);
  ImageRequest req{record.compiled_prompt, scene.canvas.width_px, scene.canvas.height_px, s.seed};
  record.image_ref = image_generate(*client, req).image_ref;
  record.timestamp = utc_now_iso8601();
  s.iterations.push_back(std::move(record));
  return s;
}

// Canonical JSON round trip so recorded edits compare equal after reload.
Edit normalized(const Edit& e) {
  return parse_json(canonical_dump(json(e))).get<Edit>();
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::shared_ptr<std::mutex>>& lock_registry() {
  static std::map<std::string, std::shared_ptr<std::mutex>> locks;
  return locks;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Input: return "Input";
    case Stage::Creativity: return "Creativity";
    case Stage::Theme: return "Theme";
    case Stage::Composition: return "Composition";
    case Stage::Detailing: return "Detailing";
    case Stage::Generate: return "Generate";
  }
  return "Input";
}

std::optional<Stage> stage_from_string(std::string_view text) {
  for (auto s : kAllStages) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

Stage next_stage(Stage stage) {
  return stage == Stage::Generate ? Stage::Generate : static_cast<Stage>(stage_index(stage) + 1);
}

const std::vector<StyleSpec>& style_catalog() {
  static const std::vector<StyleSpec> styles = {
      {"flat-infographic", {"clean-lines", "flat-shading"}, 6},
      {"watercolor", {"paper-texture", "soft-edges"}, 5},
      {"isometric-3d", {"isometric", "soft-shadows"}, 4},
      {"line-art", {"monochrome", "thin-strokes"}, 7},
      {"photorealistic", {"high-detail", "natural-light"}, 1},
      {"oil-painting", {"impasto", "rich-texture"}, 3},
      {"minimalist-vector", {"geometric", "limited-palette"}, 8},
      {"scientific-diagram", {"annotated", "schematic"}, 7},
  };
  return styles;
}

const StyleSpec* find_style(std::string_view name) {
  for (const auto& s : style_catalog()) {
    if (s.style_name == name) return &s;
  }
  return nullptr;
}

std::string_view to_string(Edit::Op op) {
  switch (op) {
    case Edit::Op::set: return "set";
    case Edit::Op::del: return "delete";
    case Edit::Op::add: return "add";
  }
  return "set";
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Edit& e) {
  j = json{{"op", to_string(e.op)}, {"path", e.path}};
  if (e.field) j["field"] = *e.field;
  if (!e.value.is_null()) j["value"] = e.value;
}

void from_json(const json& j, Edit& e) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidEdit, "edit must be an object");
  auto op = j.value("op", std::string());
  if (op == "set") {
    e.op = Edit::Op::set;
  } else if (op == "delete") {
    e.op = Edit::Op::del;
  } else if (op == "add") {
    e.op = Edit::Op::add;
  } else {
    throw Error(ErrorCode::InvalidEdit, "edit op must be set, delete or add");
  }
  if (!j.contains("path") || !j["path"].is_string()) {
    throw Error(ErrorCode::InvalidEdit, "edit path must be a string");
  }
  e.path = j["path"].get<std::string>();
  e.field.reset();
  if (j.contains("field") && !j["field"].is_null()) {
    if (!j["field"].is_string()) throw Error(ErrorCode::InvalidEdit, "edit field must be a string");
    e.field = j["field"].get<std::string>();
  }
  e.value = j.contains("value") ? j["value"] : json();
}

void to_json(json& j, const IterationRecord& r) {
  j = json{{"compiled_prompt", r.compiled_prompt}, {"image_ref", r.image_ref},
           {"index", r.index},  {"scene_hash", r.scene_hash},
           {"scene_snapshot", r.scene_snapshot}, {"timestamp", r.timestamp},
           {"user_edits", r.user_edits}};
}

void from_json(const json& j, IterationRecord& r) {
  r.index = j.at("index").get<std::size_t>();
  r.scene_snapshot = canonicalize(j.at("scene_snapshot").get<SceneGraph>());
  r.compiled_prompt = j.at("compiled_prompt").get<std::string>();
  r.scene_hash = j.at("scene_hash").get<std::string>();
  r.image_ref = j.at("image_ref").get<std::string>();
  r.user_edits = j.at("user_edits").get<std::vector<Edit>>();
  r.timestamp = j.at("timestamp").get<std::string>();
}

void to_json(json& j, const SessionState& s) {
  j = json{{"concepts", s.concepts},   {"created_at", s.created_at},
           {"id", s.id},               {"input_text", s.input_text},
           {"iterations", s.iterations}, {"seed", s.seed},
           {"stage", to_string(s.stage)}, {"updated_at", s.updated_at}};
  if (s.style) j["style"] = *s.style;
  if (s.theme) j["theme"] = *s.theme;
  if (s.template_id) j["template_id"] = *s.template_id;
  if (s.current_scene) j["current_scene"] = *s.current_scene;
}

void from_json(const json& j, SessionState& s) {
  s.id = j.at("id").get<std::string>();
  s.input_text = j.at("input_text").get<std::string>();
  auto stage = stage_from_string(j.at("stage").get<std::string>());
  if (!stage) throw Error(ErrorCode::ParseError, "unknown stage");
  s.stage = *stage;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.created_at = j.at("created_at").get<std::string>();
  s.updated_at = j.at("updated_at").get<std::string>();
  s.concepts = j.at("concepts").get<std::vector<ThemeConcept>>();
  s.iterations = j.at("iterations").get<std::vector<IterationRecord>>();
  s.style.reset();
  s.theme.reset();
  s.template_id.reset();
  s.current_scene.reset();
  if (j.contains("style")) s.style = canonicalize(j["style"].get<StyleSpec>());
  if (j.contains("theme")) s.theme = j["theme"].get<std::string>();
  if (j.contains("template_id")) s.template_id = j["template_id"].get<std::string>();
  if (j.contains("current_scene")) s.current_scene = canonicalize(j["current_scene"].get<SceneGraph>());
}

std::string serialize_session(const SessionState& state) { return canonical_dump(json(state)) + "\n"; }

SessionState deserialize_session(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  SessionState s;
  try {
    s = json::parse(text).get<SessionState>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
  auto issues = validate_session(s);
  if (!issues.empty()) {
    throw Error(ErrorCode::ParseError,
                where + ": " + issues.front().rule + " " + issues.front().message);
  }
  return s;
}

std::vector<Violation> validate_session(const SessionState& s) {
  std::vector<Violation> out;
  auto need = [&](bool ok, const char* rule, const std::string& msg) {
    if (!ok) out.push_back({"", rule, msg});
  };
  const int at = stage_index(s.stage);
  need(!s.id.empty(), "missing-id", "session id is empty");
  need(!trim(s.input_text).empty(), "empty-input", "input text is empty");
  need(at < stage_index(Stage::Creativity) || s.style.has_value(), "missing-style",
       "stage requires a style");
  need(at < stage_index(Stage::Theme) || (s.theme && !s.concepts.empty()), "missing-theme",
       "stage requires a theme and concepts");
  need(at < stage_index(Stage::Composition) || s.template_id.has_value(), "missing-template",
       "stage requires a template id");
  need(at < stage_index(Stage::Detailing) || s.current_scene.has_value(), "missing-scene",
       "stage requires a scene");
  need((s.stage == Stage::Generate) == !s.iterations.empty(), "iterations-stage",
       "iterations exist exactly at the Generate stage");
  for (std::size_t i = 0; i < s.iterations.size(); ++i) {
    const auto& it = s.iterations[i];
    need(it.index == i, "iteration-index", "iteration indices must be contiguous from 0");
    try {
      need(scene_hash(it.scene_snapshot) == it.scene_hash, "hash-mismatch",
           "iteration " + std::to_string(i) + " hash does not match its snapshot");
    } catch (const ValidationError& e) {
      need(false, "invalid-snapshot", e.what());
    }
  }
  if (s.current_scene) {
    for (auto& v : validate_scene(*s.current_scene, std::numeric_limits<std::size_t>::max())) {
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path SessionStore::path_for(std::string_view id) const {
  bool ok = !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  if (!ok) throw Error(ErrorCode::NotFound, "no session '" + std::string(id) + "'");
  return dir_ / (std::string(id) + ".json");
}

bool SessionStore::exists(std::string_view id) const {
  try {
    return std::filesystem::exists(path_for(id));
  } catch (const Error&) {
    return false;
  }
}

void SessionStore::save(const SessionState& state) const {
  auto target = path_for(state.id);
  std::filesystem::create_directories(dir_);
  auto tmp = dir_ / ("." + state.id + ".json.tmp-" + new_uuid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << serialize_session(state);
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::BadArgument, "cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

SessionState SessionStore::load(std::string_view id) const {
  auto path = path_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "no session '" + std::string(id) + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto state = deserialize_session(buf.str(), path.string());
  if (state.id != id) {
    throw Error(ErrorCode::ParseError, path.string() + ": file holds session '" + state.id + "'");
  }
  return state;
}

SessionStore::Lock::Lock(std::shared_ptr<std::mutex> mutex, int fd)
    : mutex_(std::move(mutex)), fd_(fd) {}

SessionStore::Lock::Lock(Lock&& other) noexcept
    : mutex_(std::move(other.mutex_)), fd_(std::exchange(other.fd_, -1)) {}

SessionStore::Lock::~Lock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  if (mutex_) mutex_->unlock();
}

SessionStore::Lock SessionStore::lock(std::string_view id) const {
  auto file = path_for(id);
  std::shared_ptr<std::mutex> mutex;
  {
    std::lock_guard guard(registry_mutex());
    auto& slot = lock_registry()[std::filesystem::absolute(file).lexically_normal().string()];
    if (!slot) slot = std::make_shared<std::mutex>();
    mutex = slot;
  }
  mutex->lock();
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  auto lock_path = dir_ / ("." + std::string(id) + ".lock");
  int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd >= 0) ::flock(fd, LOCK_EX);
  return Lock(std::move(mutex), fd);
}

// ---------------------------------------------------------------------------

SessionState new_session_state(std::string_view input_text, std::uint64_t seed,
                               std::optional<StyleSpec> style) {
  if (trim(input_text).empty()) throw Error(ErrorCode::EmptyInput, "input text is empty");
  SessionState s;
  s.id = new_uuid();
  s.input_text = std::string(input_text);
  if (style) s.style = canonicalize(*style);
  s.seed = seed;
  s.created_at = utc_now_iso8601();
  s.updated_at = s.created_at;
  return s;
}

SessionState run_stage(SessionState state, Stage stage, const AdvanceParams& params,
                       const StageContext& ctx) {
  if (stage != next_stage(state.stage) || stage == Stage::Input) {
    throw Error(ErrorCode::StageOrderViolation, "cannot run " + std::string(to_string(stage)) +
                                                    " from " + std::string(to_string(state.stage)));
  }
  switch (stage) {
    case Stage::Creativity: state = run_creativity(std::move(state), params, ctx); break;
    case Stage::Theme: state = run_theme(std::move(state), params, ctx); break;
    case Stage::Composition: state = run_composition(std::move(state), params, ctx); break;
    case Stage::Detailing: state = run_detailing(std::move(state), params, ctx); break;
    case Stage::Generate: state = run_generate(std::move(state), ctx); break;
    case Stage::Input: break;
  }
  state.stage = stage;
  state.updated_at = utc_now_iso8601();
  return state;
}

DetailSet apply_edits(DetailSet details, const std::vector<Edit>& edits) {
  auto& entries = details.entries;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const auto& e = edits[i];
    if (!is_valid_path(e.path)) invalid_edit(i, "invalid path '" + e.path + "'");
    auto found = entries.find(e.path);
    try {
      switch (e.op) {
        case Edit::Op::set: {
          if (found == entries.end()) {
            throw Error(ErrorCode::PathNotFound, "no element at '" + e.path + "'");
          }
          if (!e.field) invalid_edit(i, "set needs a field");
          auto& rec = found->second;
          const auto& f = *e.field;
          const auto& v = e.value;
          if (f == "content") {
            if (!v.is_string() || trim(v.get<std::string>()).empty()) {
              invalid_edit(i, "content must be a non-empty string");
            }
            rec.content = v.get<std::string>();
          } else if (f == "bbox") {
            auto box = v.get<BBox>();
            if (!is_well_formed(box)) invalid_edit(i, "bbox out of range");
            rec.bbox = box;
          } else if (f == "color") {
            rec.color = v.is_null() ? std::nullopt : std::optional(v.get<ColorSpec>());
          } else if (f == "style") {
            rec.style = v.is_null() ? std::nullopt : std::optional(v.get<StyleSpec>());
          } else if (f == "z_order") {
            if (!v.is_number_integer()) invalid_edit(i, "z_order must be an integer");
            rec.z_order = v.get<int>();
          } else if (f == "region_id") {
            rec.region_id = v.is_null() ? std::nullopt : std::optional(v.get<std::string>());
          } else {
            invalid_edit(i, "unknown field '" + f + "'");
          }
          break;
        }
        case Edit::Op::del: {
          if (found == entries.end()) {
            throw Error(ErrorCode::PathNotFound, "no element at '" + e.path + "'");
          }
          std::erase_if(entries, [&](const auto& kv) { return is_at_or_below(kv.first, e.path); });
          break;
        }
        case Edit::Op::add: {
          if (found != entries.end()) invalid_edit(i, "an element already exists at '" + e.path + "'");
          auto parent = parent_path(e.path);
          if (!parent.empty() && !entries.count(parent)) {
            throw Error(ErrorCode::PathNotFound, "no parent element at '" + parent + "'");
          }
          auto rec = e.value.get<DetailRecord>();
          if (!rec.content || trim(*rec.content).empty() || !rec.bbox) {
            invalid_edit(i, "added elements need content and bbox");
          }
          entries.emplace(e.path, std::move(rec));
          break;
        }
      }
    } catch (const json::exception& ex) {
      invalid_edit(i, ex.what());
    } catch (const Error& ex) {
      if (ex.code() == ErrorCode::PathNotFound || ex.code() == ErrorCode::InvalidEdit) throw;
      invalid_edit(i, ex.what());
    }
  }
  return details;
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(PipelineConfig config, Backends backends)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      library_(config_.library.empty() ? builtin_templates() : config_.library),
      store_(config_.sessions_dir) {}

void Pipeline::commit(const SessionState& state, Stage stage) {
  if (config_.before_commit) config_.before_commit(stage);
  store_.save(state);
}

SessionState Pipeline::create_session(std::string_view input_text, std::optional<StyleSpec> style,
                                      std::uint64_t seed) {
  auto state = new_session_state(input_text, seed, std::move(style));
  auto guard = store_.lock(state.id);
  commit(state, Stage::Input);
  return state;
}

SessionState Pipeline::advance(std::string_view id, const AdvanceParams& params) {
  auto guard = store_.lock(id);
  auto state = store_.load(id);
  auto next = next_stage(state.stage);
  state = run_stage(std::move(state), next, params, context());
  commit(state, next);
  return state;
}

SessionState Pipeline::iterate(std::string_view id, const std::vector<Edit>& edits,
                               const std::optional<ExpansionConfig>& expand) {
  auto guard = store_.lock(id);
  auto state = store_.load(id);
  if (state.stage != Stage::Generate || state.iterations.empty()) {
    throw Error(ErrorCode::StageOrderViolation, "iterate needs a session with a generated image");
  }
  const auto& tmpl = find_template(library_, *state.template_id);
  const auto& base = *state.current_scene;

  auto edited = apply_edits(scene_to_detailset(base), edits);

  std::vector<DetailSet> history;
  for (const auto& it : state.iterations) history.push_back(scene_to_detailset(it.scene_snapshot));
  auto* text = config_.fuse_with_backend ? backends_.text.get() : nullptr;
  auto fused = fuse_history(history, edited, text, state.seed);

  // Deleted subtrees stay deleted even though fusion unions in their
  // historical keys; a later add at the same path revives it.
  std::set<std::string> tombstones;
  auto replay = [&](const std::vector<Edit>& list) {
    for (const auto& e : list) {
      if (e.op == Edit::Op::del) tombstones.insert(e.path);
      if (e.op == Edit::Op::add) tombstones.erase(e.path);
    }
  };
  for (const auto& it : state.iterations) replay(it.user_edits);
  replay(edits);
  std::erase_if(fused.entries, [&](const auto& kv) {
    if (edited.entries.count(kv.first)) return false;
    return std::any_of(tombstones.begin(), tombstones.end(),
                       [&](const std::string& t) { return is_at_or_below(kv.first, t); });
  });

  auto scene = detailset_to_scene(fused, base);
  auto budget = config_.expansion.element_budget;
  if (expand) {
    if (!backends_.text) throw Error(ErrorCode::BadArgument, "expansion needs a text backend");
    scene = expand_recursive(scene, std::nullopt, *expand, *backends_.text);
    budget = expand->element_budget;
  }
  require_valid(validate_scene(scene, tmpl, budget));
  if (scene.elements == base.elements) {
    scene = base;
  } else {
    scene.iteration_index = base.iteration_index + 1;
  }

  std::vector<Edit> recorded;
  for (const auto& e : edits) recorded.push_back(normalized(e));
  state.current_scene = std::move(scene);
  state = run_generate(std::move(state), context(), std::move(recorded));
  state.updated_at = utc_now_iso8601();
  commit(state, Stage::Generate);
  return state;
}

CreationResult Pipeline::art_image_creation(std::string_view abstract,
                                            const std::optional<std::string>& template_id,
                                            std::uint64_t seed, std::optional<StyleSpec> style) {
  if (template_id) find_template(library_, *template_id);
  auto state = new_session_state(abstract, seed, std::move(style));
  auto ctx = context();
  for (auto stage : {Stage::Creativity, Stage::Theme, Stage::Composition, Stage::Detailing,
                     Stage::Generate}) {
    AdvanceParams params;
    if (stage == Stage::Composition) params.template_id = template_id;
    state = run_stage(std::move(state), stage, params, ctx);
  }
  const auto& last = state.iterations.back();
  return {*state.current_scene, last.compiled_prompt, last.image_ref};
}

}  // namespace sde
