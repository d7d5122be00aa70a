#include "sde/backends.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "sde/hashing.hpp"
#include "sde/prompt_compiler.hpp"
#include "sde/theme_extraction.hpp"

namespace sde {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError(0, 0, "endpoint url must start with http:// or https://");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpOutcome post_json(const BackendConfig& config, const std::string& body) {
  auto [origin, path] = split_url(config.endpoint_url);
  httplib::Client client(origin);
  auto seconds = std::chrono::duration<double>(config.timeout_s);
  auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(seconds);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config.api_key_ref.empty()) {
    if (const char* key = std::getenv(config.api_key_ref.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, res->status >= 300 ? "HTTP " + std::to_string(res->status) : ""};
}

RetryPolicy policy_for(const BackendConfig& config) {
  RetryPolicy policy;
  policy.max_retries = config.max_retries;
  return policy;
}

std::string decode_base64(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean += c;
  }
  if (clean.size() % 4 != 0) throw BackendError(0, 1, "image payload is not valid base64");
  std::string out(clean.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) throw BackendError(0, 1, "image payload is not valid base64");
  std::size_t pad = 0;
  while (pad < 2 && !clean.empty() && clean[clean.size() - 1 - pad] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::BackendError, "cannot write " + path.string());
}

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

std::string_view to_string(TextTask task) {
  switch (task) {
    case TextTask::generic: return "generic";
    case TextTask::theme: return "theme";
    case TextTask::style: return "style";
    case TextTask::describe: return "describe";
    case TextTask::expand: return "expand";
    case TextTask::fuse: return "fuse";
    case TextTask::judge: return "judge";
  }
  return "generic";
}

TextResponse text_complete(TextClient& client, const TextRequest& request) {
  return client.complete(request);
}

std::optional<json> extract_json(std::string_view reply) {
  auto attempt = [](std::string_view text) -> std::optional<json> {
    auto parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
  };
  auto text = trim(reply);
  if (auto j = attempt(text)) return j;
  auto open = text.find_first_of("{[");
  if (open == std::string::npos) return std::nullopt;
  char closer = text[open] == '{' ? '}' : ']';
  auto close = text.rfind(closer);
  if (close == std::string::npos || close < open) return std::nullopt;
  return attempt(std::string_view(text).substr(open, close - open + 1));
}

json complete_structured(TextClient& client, TextRequest request, const JsonShapeCheck& check) {
  std::string reason;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = text_complete(client, request);
    auto parsed = extract_json(reply.text);
    if (!parsed) {
      reason = "the reply is not JSON";
    } else if (auto problem = check ? check(*parsed) : std::nullopt) {
      reason = *problem;
    } else {
      return *parsed;
    }
    request.user += "\n\nYour previous reply was rejected: " + reason + ". Reply with valid JSON only.";
  }
  throw Error(ErrorCode::MalformedOutput,
              std::string(to_string(request.task)) + " reply rejected twice: " + reason);
}

ImageResult image_generate(ImageClient& client, const ImageRequest& request) {
  if (trim(request.prompt).empty()) throw Error(ErrorCode::EmptyPrompt, "image prompt is empty");
  return client.generate(request);
}

// ---------------------------------------------------------------------------

std::vector<std::string> check_config(const BackendConfig& config) {
  std::vector<std::string> problems;
  if (!(config.timeout_s > 0)) problems.emplace_back("timeout_s must be positive");
  if (config.max_retries < 0) problems.emplace_back("max_retries must be non-negative");
  if (config.endpoint_url.empty()) problems.emplace_back("endpoint_url is empty");
  return problems;
}

BackendConfig backend_config_from_env(std::string_view kind) {
  auto env = [&](std::string_view suffix) {
    std::string name = "SDE_" + std::string(kind) + "_" + std::string(suffix);
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
  };
  BackendConfig config;
  config.endpoint_url = env("API_URL");
  config.api_key_ref = "SDE_" + std::string(kind) + "_API_KEY";
  config.model_name = env("MODEL");
  if (config.endpoint_url.empty()) {
    config.endpoint_url = kind == "IMAGE" ? "https://api.openai.com/v1/images/generations"
                                          : "https://api.openai.com/v1/chat/completions";
  }
  if (config.model_name.empty()) config.model_name = kind == "IMAGE" ? "dall-e-3" : "gpt-4o";
  return config;
}

bool is_transient(const HttpOutcome& outcome) {
  return outcome.status == 0 || outcome.status == 408 || outcome.status == 429 ||
         outcome.status >= 500;
}

HttpOutcome with_retry(const RetryPolicy& policy, const std::function<HttpOutcome()>& attempt,
                       const Sleeper& sleep) {
  const int total = std::max(policy.max_retries, 0) + 1;
  for (int i = 1;; ++i) {
    auto outcome = attempt();
    if (outcome.status >= 200 && outcome.status < 300) return outcome;
    if (!is_transient(outcome) || i == total) {
      throw BackendError(outcome.status, i, outcome.error.empty() ? outcome.body : outcome.error);
    }
    auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(
        static_cast<double>(policy.base_delay.count()) * std::pow(policy.factor, i - 1)));
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

LiveTextClient::LiveTextClient(BackendConfig config, Sleeper sleep)
    : config_(std::move(config)), sleep_(std::move(sleep)) {}

json LiveTextClient::request_body(const TextRequest& request) const {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return json{{"model", config_.model_name},
              {"messages", messages},
              {"temperature", config_.temperature},
              {"seed", request.seed}};
}

TextResponse LiveTextClient::complete(const TextRequest& request) {
  auto start = Clock::now();
  auto body = request_body(request).dump();
  auto outcome = with_retry(policy_for(config_), [&] { return post_json(config_, body); }, sleep_);
  auto reply = json::parse(outcome.body, nullptr, false);
  try {
    return {reply.at("choices").at(0).at("message").at("content").get<std::string>(),
            elapsed_ms(start)};
  } catch (const json::exception&) {
    throw BackendError(outcome.status, 1, "response has no choices[0].message.content");
  }
}

LiveImageClient::LiveImageClient(BackendConfig config, std::filesystem::path out_dir, Sleeper sleep)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), sleep_(std::move(sleep)) {}

json LiveImageClient::request_body(const ImageRequest& request) const {
  return json{{"model", config_.model_name},
              {"prompt", request.prompt},
              {"n", 1},
              {"size", std::to_string(request.width_px) + "x" + std::to_string(request.height_px)},
              {"response_format", "b64_json"}};
}

ImageResult LiveImageClient::generate(const ImageRequest& request) {
  if (trim(request.prompt).empty()) throw Error(ErrorCode::EmptyPrompt, "image prompt is empty");
  auto start = Clock::now();
  auto body = request_body(request).dump();
  auto outcome = with_retry(policy_for(config_), [&] { return post_json(config_, body); }, sleep_);
  auto reply = json::parse(outcome.body, nullptr, false);
  ImageResult result;
  result.width_px = request.width_px;
  result.height_px = request.height_px;
  try {
    const auto& item = reply.at("data").at(0);
    if (item.contains("b64_json")) {
      auto path = out_dir_ / "image.png";
      write_file(path, decode_base64(item.at("b64_json").get<std::string>()));
      result.image_ref = path.string();
    } else {
      result.image_ref = item.at("url").get<std::string>();
    }
  } catch (const json::exception&) {
    throw BackendError(outcome.status, 1, "response has no data[0].b64_json or data[0].url");
  }
  result.latency_ms = elapsed_ms(start);
  return result;
}

// ---------------------------------------------------------------------------

StubTextClient::StubTextClient(std::map<std::string, std::string> script)
    : script_(std::move(script)) {}

TextResponse StubTextClient::complete(const TextRequest& request) {
  if (auto it = script_.find(request.user); it != script_.end()) return {it->second, 0};
  if (auto it = script_.find("@" + std::string(to_string(request.task))); it != script_.end()) {
    return {it->second, 0};
  }
  return {synthesize(request), 0};
}

std::string StubTextClient::synthesize(const TextRequest& request) const {
  const auto& ctx = request.context;
  switch (request.task) {
    case TextTask::theme: {
      auto labels = ctx.value("labels", std::vector<std::string>{});
      return fallback_theme(labels);
    }
    case TextTask::style: {
      auto styles = ctx.value("styles", std::vector<std::string>{});
      if (styles.empty()) return "flat-infographic";
      return styles[fnv1a64(request.user) % styles.size()];
    }
    case TextTask::describe:
      return "a depiction of " + ctx.value("label", std::string("the subject"));
    case TextTask::expand: {
      auto n = ctx.value("max_children", std::size_t{1});
      auto parent = ctx.value("id", std::string("element"));
      json children = json::array();
      for (std::size_t i = 1; i <= n; ++i) {
        children.push_back({{"name", "part-" + std::to_string(i)},
                            {"position", "cell " + std::to_string(i)},
                            {"description", "part " + std::to_string(i) + " of the " + parent}});
      }
      return json{{"children", children}}.dump();
    }
    case TextTask::fuse:
      return ctx.value("current", std::string());
    case TextTask::judge:
      return R"({"artistic_quality":50,"conformity":50,"understandability":50})";
    case TextTask::generic:
      break;
  }
  return request.user;
}

std::shared_ptr<TextClient> stub_text_client(std::map<std::string, std::string> script) {
  return std::make_shared<StubTextClient>(std::move(script));
}

StubImageClient::StubImageClient(SceneGraph scene, CompositionTemplate tmpl,
                                 std::filesystem::path out_dir)
    : scene_(std::move(scene)), template_(std::move(tmpl)), out_dir_(std::move(out_dir)) {}

ImageResult StubImageClient::generate(const ImageRequest& request) {
  if (trim(request.prompt).empty()) throw Error(ErrorCode::EmptyPrompt, "image prompt is empty");
  auto path = out_dir_ / "image.svg";
  write_file(path, render_debug_svg(scene_, template_));
  return {path.string(), request.width_px, request.height_px, 0};
}

Backends stub_backends(std::map<std::string, std::string> script) {
  Backends b;
  b.text = stub_text_client(std::move(script));
  b.image = [](const SceneGraph& scene, const CompositionTemplate& tmpl,
               const std::filesystem::path& run_dir) -> std::unique_ptr<ImageClient> {
    return std::make_unique<StubImageClient>(scene, tmpl, run_dir);
  };
  return b;
}

Backends live_backends(BackendConfig text, BackendConfig image) {
  Backends b;
  b.text = std::make_shared<LiveTextClient>(std::move(text));
  b.image = [image = std::move(image)](const SceneGraph&, const CompositionTemplate&,
                                       const std::filesystem::path& run_dir)
      -> std::unique_ptr<ImageClient> { return std::make_unique<LiveImageClient>(image, run_dir); };
  return b;
}

}  // namespace sde
