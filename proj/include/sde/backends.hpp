#pragma once

// Client contracts for the external text and image models.
//
// Live clients speak the OpenAI-compatible JSON-over-HTTP shapes
// (chat/completions and images/generations). Stub clients are pure functions
// of their construction parameters and are what every deterministic test and
// the `--backend stub` CLI mode run on.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sde/json_io.hpp"
#include "sde/scene_model.hpp"

namespace sde {

/// What a text request is for. Stubs use it to synthesize replies; live
/// clients ignore it.
enum class TextTask { generic, theme, style, describe, expand, fuse, judge };

std::string_view to_string(TextTask task);

struct TextRequest {
  std::string system;
  std::string user;
  std::uint64_t seed = 0;
  TextTask task = TextTask::generic;
  json context = json::object();  // structured inputs the prompt was built from
};

struct TextResponse {
  std::string text;
  std::int64_t latency_ms = 0;
};

struct ImageRequest {
  std::string prompt;
  int width_px = 1024;
  int height_px = 1024;
  std::uint64_t seed = 0;
};

struct ImageResult {
  std::string image_ref;  // file path or URL
  int width_px = 0;
  int height_px = 0;
  std::int64_t latency_ms = 0;
};

class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual TextResponse complete(const TextRequest& request) = 0;
};

class ImageClient {
 public:
  virtual ~ImageClient() = default;
  virtual ImageResult generate(const ImageRequest& request) = 0;
};

// ---------------------------------------------------------------------------

TextResponse text_complete(TextClient& client, const TextRequest& request);

/// Returns nullopt when the parsed reply is acceptable, else the reason.
using JsonShapeCheck = std::function<std::optional<std::string>(const json&)>;

/// Sends a request that must be answered with JSON. A reply that is not JSON
/// or fails `check` is reprompted once with the reason appended; a second bad
/// reply raises MalformedOutput.
json complete_structured(TextClient& client, TextRequest request, const JsonShapeCheck& check);

/// Pulls the first JSON value out of a reply that may wrap it in prose or code fences.
std::optional<json> extract_json(std::string_view reply);

/// Throws EmptyPrompt on an empty prompt.
ImageResult image_generate(ImageClient& client, const ImageRequest& request);

// ---------------------------------------------------------------------------

struct BackendConfig {
  std::string endpoint_url;
  std::string api_key_ref;  // name of the environment variable holding the key
  std::string model_name;
  double timeout_s = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
};

std::vector<std::string> check_config(const BackendConfig& config);

/// Reads SDE_<KIND>_API_URL, SDE_<KIND>_MODEL; the key stays referenced by
/// name (SDE_<KIND>_API_KEY). `kind` is "TEXT" or "IMAGE".
BackendConfig backend_config_from_env(std::string_view kind);

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Outcome of one HTTP attempt.
struct HttpOutcome {
  int status = 0;  // 0: no response (connect failure, timeout)
  std::string body;
  std::string error;
};

// Timeouts, transport failures, 429 and 5xx.
bool is_transient(const HttpOutcome& outcome);

/// Runs `attempt` until it succeeds (2xx), fails non-transiently, or
/// max_retries retries are used up; sleeps base_delay * factor^i between.
/// Throws BackendError carrying the last status and the attempt count.
HttpOutcome with_retry(const RetryPolicy& policy, const std::function<HttpOutcome()>& attempt,
                       const Sleeper& sleep = {});

class LiveTextClient final : public TextClient {
 public:
  explicit LiveTextClient(BackendConfig config, Sleeper sleep = {});
  TextResponse complete(const TextRequest& request) override;

  // Request body as sent on the wire (no credentials).
  json request_body(const TextRequest& request) const;

 private:
  BackendConfig config_;
  Sleeper sleep_;
};

class LiveImageClient final : public ImageClient {
 public:
  LiveImageClient(BackendConfig config, std::filesystem::path out_dir, Sleeper sleep = {});
  ImageResult generate(const ImageRequest& request) override;

  json request_body(const ImageRequest& request) const;

 private:
  BackendConfig config_;
  std::filesystem::path out_dir_;
  Sleeper sleep_;
};

/// Deterministic offline text model.
///
/// Replies come from `script` by exact user-prompt key, then by a
/// task-wide key "@<task>" (e.g. "@judge"); anything else is synthesized:
///   theme    -> the labels from context joined by " and " (top three)
///   style    -> one of context["styles"], picked by a stable hash of the prompt
///   describe -> "a depiction of <label>"
///   expand   -> max_children sub-elements named part-1..part-n
///   fuse     -> the current content unchanged
///   judge    -> 50 for every score
///   generic  -> the user prompt echoed back
using StubScript = std::map<std::string, std::string>;

class StubTextClient final : public TextClient {
 public:
  explicit StubTextClient(std::map<std::string, std::string> script = {});
  TextResponse complete(const TextRequest& request) override;

 private:
  std::string synthesize(const TextRequest& request) const;

  std::map<std::string, std::string> script_;
};

std::shared_ptr<TextClient> stub_text_client(std::map<std::string, std::string> script = {});

/// Writes the debug SVG of the scene it was built with to out_dir/image.svg.
class StubImageClient final : public ImageClient {
 public:
  StubImageClient(SceneGraph scene, CompositionTemplate tmpl, std::filesystem::path out_dir);
  ImageResult generate(const ImageRequest& request) override;

 private:
  SceneGraph scene_;
  CompositionTemplate template_;
  std::filesystem::path out_dir_;
};

/// Builds the image client for one generation; live clients ignore the scene.
using ImageClientFactory = std::function<std::unique_ptr<ImageClient>(
    const SceneGraph& scene, const CompositionTemplate& tmpl, const std::filesystem::path& run_dir)>;

struct Backends {
  std::shared_ptr<TextClient> text;
  ImageClientFactory image;
};

Backends stub_backends(std::map<std::string, std::string> script = {});
Backends live_backends(BackendConfig text, BackendConfig image);

}  // namespace sde
