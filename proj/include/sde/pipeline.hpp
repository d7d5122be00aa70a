#pragma once

// Six-stage session state machine, iteration loop and on-disk persistence.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sde/backends.hpp"
#include "sde/detailing.hpp"
#include "sde/json_io.hpp"
#include "sde/prompt_compiler.hpp"
#include "sde/scene_model.hpp"
#include "sde/theme_extraction.hpp"

namespace sde {

enum class Stage { Input, Creativity, Theme, Composition, Detailing, Generate };

inline constexpr Stage kAllStages[] = {Stage::Input,       Stage::Creativity, Stage::Theme,
                                       Stage::Composition, Stage::Detailing,  Stage::Generate};

std::string_view to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view text);
// Generate loops onto itself.
Stage next_stage(Stage stage);

/// The named creative styles offered at the Creativity stage.
const std::vector<StyleSpec>& style_catalog();
const StyleSpec* find_style(std::string_view name);

/// One scene edit: set a field, delete a subtree, or add a new element.
struct Edit {
  enum class Op { set, del, add };

  Op op = Op::set;
  std::string path;
  std::optional<std::string> field;  // set only: content|bbox|color|style|z_order|region_id
  json value;                        // set: field value; add: element record

  bool operator==(const Edit&) const = default;
};

std::string_view to_string(Edit::Op op);

struct IterationRecord {
  std::size_t index = 0;
  SceneGraph scene_snapshot;
  std::string compiled_prompt;
  std::string scene_hash;
  std::string image_ref;
  std::vector<Edit> user_edits;
  std::string timestamp;

  bool operator==(const IterationRecord&) const = default;
};

struct SessionState {
  std::string id;
  std::string input_text;
  std::optional<StyleSpec> style;
  Stage stage = Stage::Input;
  std::optional<std::string> theme;
  std::vector<ThemeConcept> concepts;
  std::optional<std::string> template_id;
  std::optional<SceneGraph> current_scene;
  std::vector<IterationRecord> iterations;
  std::uint64_t seed = 0;
  std::string created_at;
  std::string updated_at;

  bool operator==(const SessionState&) const = default;
};

/// Stage-specific options; each stage reads only the fields it needs.
struct AdvanceParams {
  std::optional<StyleSpec> style;         // Creativity: explicit style
  std::optional<std::string> style_name;  // Creativity: catalog entry
  std::optional<std::size_t> k;           // Theme: cluster count
  std::optional<Linkage> linkage;         // Theme
  std::optional<std::string> template_id; // Composition
  std::optional<LightingSpec> lighting;   // Detailing
  std::optional<ExpansionConfig> expansion;  // Detailing
};

struct PipelineConfig {
  std::filesystem::path sessions_dir = "sessions";
  std::filesystem::path runs_dir = "runs";
  std::vector<CompositionTemplate> library;  // empty: builtin templates
  Canvas canvas;
  LightingSpec lighting;
  ExpansionConfig expansion;
  Linkage linkage = Linkage::average;
  ExtractionConfig extraction;
  double major_weight = 0.15;
  PromptOptions prompt;
  // Rewrite changed contents through the text backend during iterate.
  bool fuse_with_backend = true;
  // Called after a stage has computed its result and before it is persisted;
  // a throwing hook aborts the stage. Used to inject faults.
  std::function<void(Stage)> before_commit;
};

// ---------------------------------------------------------------------------
// Session JSON

void to_json(json& j, const Edit& e);
void from_json(const json& j, Edit& e);
void to_json(json& j, const IterationRecord& r);
void from_json(const json& j, IterationRecord& r);
void to_json(json& j, const SessionState& s);
void from_json(const json& j, SessionState& s);

std::string serialize_session(const SessionState& state);
/// Parses and checks stage invariants; throws ParseError naming `origin`.
SessionState deserialize_session(std::string_view text, std::string_view origin = "session");

// Stage-required fields present, iterations contiguous, hashes consistent.
std::vector<Violation> validate_session(const SessionState& state);

// ---------------------------------------------------------------------------
// Persistence

/// One JSON file per session, written via temp file + rename.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(std::string_view id) const;
  bool exists(std::string_view id) const;

  void save(const SessionState& state) const;
  // NotFound for unknown ids, ParseError (with the file path) for bad files.
  SessionState load(std::string_view id) const;

  /// Exclusive writer lock for one session: in-process mutex plus flock on
  /// a sidecar file so separate processes sharing the directory also serialize.
  class Lock {
   public:
    Lock(std::shared_ptr<std::mutex> mutex, int fd);
    Lock(Lock&&) noexcept;
    Lock& operator=(Lock&&) = delete;
    ~Lock();

   private:
    std::shared_ptr<std::mutex> mutex_;
    int fd_ = -1;
  };
  Lock lock(std::string_view id) const;

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Stage functions. Pure over the session value; nothing is persisted here.

struct StageContext {
  const PipelineConfig& config;
  const Backends& backends;
  const std::vector<CompositionTemplate>& library;
};

SessionState new_session_state(std::string_view input_text, std::uint64_t seed,
                               std::optional<StyleSpec> style = std::nullopt);
SessionState run_stage(SessionState state, Stage stage, const AdvanceParams& params,
                       const StageContext& ctx);

// Applies edits to a DetailSet, all-or-nothing.
DetailSet apply_edits(DetailSet details, const std::vector<Edit>& edits);

// ---------------------------------------------------------------------------

struct CreationResult {
  SceneGraph scene;
  std::string prompt;
  std::string image_ref;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, Backends backends);

  const PipelineConfig& config() const { return config_; }
  const std::vector<CompositionTemplate>& library() const { return library_; }
  const SessionStore& store() const { return store_; }

  SessionState create_session(std::string_view input_text,
                              std::optional<StyleSpec> style = std::nullopt,
                              std::uint64_t seed = 0);
  SessionState advance(std::string_view id, const AdvanceParams& params = {});
  SessionState iterate(std::string_view id, const std::vector<Edit>& edits,
                       const std::optional<ExpansionConfig>& expand = std::nullopt);
  SessionState load(std::string_view id) const { return store_.load(id); }

  /// All six stages in one call without a persisted session. Stage results are
  /// the same as create_session followed by five advances with `template_id`
  /// given at Composition (automatic selection when absent).
  CreationResult art_image_creation(std::string_view abstract,
                                    const std::optional<std::string>& template_id,
                                    std::uint64_t seed = 0,
                                    std::optional<StyleSpec> style = std::nullopt);

 private:
  StageContext context() const { return {config_, backends_, library_}; }
  void commit(const SessionState& state, Stage stage);

  PipelineConfig config_;
  Backends backends_;
  std::vector<CompositionTemplate> library_;
  SessionStore store_;
};

}  // namespace sde
