#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "sde/backends.hpp"
#include "sde/composition.hpp"
#include "sde/prompt_compiler.hpp"
#include "support/helpers.hpp"

using namespace sde;
using testing::code_of;

namespace {

/// Local HTTP server on an ephemeral port, stopped on destruction.
class FakeEndpoint {
 public:
  FakeEndpoint() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string base64(const std::string& bytes) {
  static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8 | (unsigned char)bytes[i + 2];
    for (int k = 3; k >= 0; --k) out += alphabet[(v >> (6 * k)) & 63];
  }
  if (bytes.size() - i == 1) {
    unsigned v = (unsigned char)bytes[i] << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (bytes.size() - i == 2) {
    unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

class SequenceClient final : public TextClient {
 public:
  explicit SequenceClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  TextResponse complete(const TextRequest& request) override {
    seen.push_back(request.user);
    return {replies_.at(std::min(seen.size() - 1, replies_.size() - 1)), 0};
  }
  std::vector<std::string> seen;

 private:
  std::vector<std::string> replies_;
};

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST_SUITE("backends") {
  TEST_CASE("stub text client") {
    StubTextClient stub(StubScript{{"exact prompt", "exact reply"}, {"@judge", "scripted judge"}});
    TextRequest req;
    req.user = "exact prompt";
    req.task = TextTask::describe;
    CHECK(stub.complete(req).text == "exact reply");

    req.user = "anything";
    req.task = TextTask::judge;
    CHECK(stub.complete(req).text == "scripted judge");

    req.task = TextTask::generic;
    CHECK(stub.complete(req).text == "anything");
    CHECK(stub.complete(req).latency_ms == 0);

    req.task = TextTask::describe;
    req.context = {{"label", "river"}};
    CHECK(stub.complete(req).text == "a depiction of river");

    req.task = TextTask::style;
    req.context = {{"styles", {"a", "b", "c"}}};
    auto picked = stub.complete(req).text;
    CHECK((picked == "a" || picked == "b" || picked == "c"));
    CHECK(StubTextClient().complete(req).text == picked);

    req.task = TextTask::expand;
    req.context = {{"id", "tree"}, {"max_children", 3}};
    auto reply = json::parse(stub.complete(req).text);
    REQUIRE(reply["children"].size() == 3);
    CHECK(reply["children"][2]["name"] == "part-3");
    CHECK(reply["children"][2]["description"] == "part 3 of the tree");

    req.task = TextTask::fuse;
    req.context = {{"current", "new"}, {"previous", "old"}};
    CHECK(StubTextClient().complete(req).text == "new");

    req.task = TextTask::theme;
    req.context = {{"labels", {"a", "b", "c", "d"}}};
    CHECK(StubTextClient().complete(req).text == "a and b and c");
  }

  TEST_CASE("extract_json") {
    CHECK(extract_json("{\"a\":1}")->at("a") == 1);
    CHECK(extract_json("Here you go:\n```json\n{\"a\":2}\n```\nThanks")->at("a") == 2);
    CHECK(extract_json("[1,2]")->size() == 2);
    CHECK_FALSE(extract_json("no json"));
    CHECK_FALSE(extract_json("{broken"));
  }

  TEST_CASE("complete_structured reprompts once") {
    auto check = [](const json& j) -> std::optional<std::string> {
      if (!j.is_object() || !j.contains("ok")) return "missing ok";
      return std::nullopt;
    };
    SequenceClient fixed({"garbage", "{\"ok\":true}"});
    TextRequest req;
    req.user = "question";
    CHECK(complete_structured(fixed, req, check)["ok"] == true);
    REQUIRE(fixed.seen.size() == 2);
    CHECK(fixed.seen[1].find("not JSON") != std::string::npos);

    SequenceClient wrong_shape({"{\"nope\":1}"});
    CHECK(code_of([&] { complete_structured(wrong_shape, req, check); }) == ErrorCode::MalformedOutput);
    CHECK(wrong_shape.seen.size() == 2);
  }

  TEST_CASE("retry policy") {
    std::vector<std::chrono::milliseconds> sleeps;
    Sleeper record = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    RetryPolicy policy;
    policy.max_retries = 3;
    policy.base_delay = std::chrono::milliseconds(100);

    SUBCASE("transient failures then success") {
      int calls = 0;
      auto out = with_retry(policy, [&]() -> HttpOutcome {
        ++calls;
        if (calls == 1) return {503, "", "busy"};
        if (calls == 2) return {0, "", "connection refused"};
        return {200, "done", ""};
      }, record);
      CHECK(out.body == "done");
      CHECK(calls == 3);
      CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                            std::chrono::milliseconds(200)});
    }
    SUBCASE("client errors are not retried") {
      int calls = 0;
      try {
        with_retry(policy, [&]() -> HttpOutcome { ++calls; return {400, "bad", ""}; }, record);
        FAIL("expected BackendError");
      } catch (const BackendError& e) {
        CHECK(e.status() == 400);
        CHECK(e.attempts() == 1);
      }
      CHECK(calls == 1);
    }
    SUBCASE("exhaustion") {
      try {
        with_retry(policy, []() -> HttpOutcome { return {429, "", "slow down"}; }, record);
        FAIL("expected BackendError");
      } catch (const BackendError& e) {
        CHECK(e.status() == 429);
        CHECK(e.attempts() == 4);
      }
      CHECK(sleeps.size() == 3);
    }
    CHECK(is_transient({0, "", ""}));
    CHECK(is_transient({500, "", ""}));
    CHECK_FALSE(is_transient({404, "", ""}));
  }

  TEST_CASE("unreachable endpoint") {
    BackendConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
    cfg.timeout_s = 2;
    cfg.max_retries = 2;
    LiveTextClient client(cfg, kNoSleep);
    try {
      client.complete({"sys", "hello", 0, TextTask::generic, json::object()});
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(e.status() == 0);
      CHECK(e.attempts() == 3);
    }
  }

  TEST_CASE("live text client against a local endpoint") {
    FakeEndpoint endpoint;
    json last_body;
    std::string last_auth;
    int failures_left = 1;
    endpoint.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      if (failures_left-- > 0) {
        res.status = 502;
        return;
      }
      last_body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}]})",
                      "application/json");
    });
    ::setenv("SDE_TEST_KEY", "secret-123", 1);
    BackendConfig cfg;
    cfg.endpoint_url = endpoint.url("/v1/chat/completions");
    cfg.api_key_ref = "SDE_TEST_KEY";
    cfg.model_name = "test-model";
    cfg.temperature = 0.3;
    LiveTextClient client(cfg, kNoSleep);
    auto reply = client.complete({"be brief", "say hi", 42, TextTask::generic, json::object()});
    CHECK(reply.text == "hi there");
    CHECK(last_auth == "Bearer secret-123");
    CHECK(last_body["model"] == "test-model");
    CHECK(last_body["seed"] == 42);
    CHECK(last_body["temperature"] == 0.3);
    CHECK(last_body["messages"][0]["role"] == "system");
    CHECK(last_body["messages"][1]["content"] == "say hi");
    CHECK(client.request_body({"s", "u", 1, TextTask::generic, json::object()}).dump().find("secret") ==
          std::string::npos);
    ::unsetenv("SDE_TEST_KEY");
  }

  TEST_CASE("live image client decodes base64 payloads") {
    testing::TempDir dir;
    FakeEndpoint endpoint;
    const std::string png = std::string("\x89PNG\r\n\x1a\n", 8) + "pixels!";
    json sent;
    endpoint.server().Post("/v1/images/generations", [&](const httplib::Request& req, httplib::Response& res) {
      sent = json::parse(req.body);
      res.set_content(json{{"data", {{{"b64_json", base64(png)}}}}}.dump(), "application/json");
    });
    BackendConfig cfg;
    cfg.endpoint_url = endpoint.url("/v1/images/generations");
    cfg.model_name = "img";
    LiveImageClient client(cfg, dir.path(), kNoSleep);
    auto result = image_generate(client, {"a red square", 1792, 1024, 3});
    CHECK(testing::read_file(result.image_ref) == png);
    CHECK(result.width_px == 1792);
    CHECK(sent["size"] == "1792x1024");
    CHECK(sent["prompt"] == "a red square");
    CHECK(code_of([&] { image_generate(client, {"  ", 1024, 1024, 0}); }) == ErrorCode::EmptyPrompt);
  }

  TEST_CASE("responses without the expected fields") {
    FakeEndpoint endpoint;
    endpoint.server().Post("/x", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"unexpected\":true}", "application/json");
    });
    BackendConfig cfg;
    cfg.endpoint_url = endpoint.url("/x");
    LiveTextClient client(cfg, kNoSleep);
    CHECK(code_of([&] { client.complete({"", "u", 0, TextTask::generic, json::object()}); }) ==
          ErrorCode::BackendError);
  }

  TEST_CASE("stub image client writes the debug svg") {
    testing::TempDir dir;
    SceneGraph s;
    s.template_id = "thirds";
    const auto& tmpl = find_template(builtin_templates(), "thirds");
    StubImageClient client(s, tmpl, dir.path() / "run");
    auto result = image_generate(client, {"prompt", 1024, 1024, 0});
    CHECK(testing::read_file(result.image_ref) == render_debug_svg(s, tmpl));
    CHECK(code_of([&] { image_generate(client, {"", 1024, 1024, 0}); }) == ErrorCode::EmptyPrompt);
  }

  TEST_CASE("configuration") {
    BackendConfig cfg;
    CHECK_FALSE(check_config(cfg).empty());
    cfg.endpoint_url = "http://x";
    CHECK(check_config(cfg).empty());
    cfg.timeout_s = 0;
    cfg.max_retries = -1;
    CHECK(check_config(cfg).size() == 2);
    ::setenv("SDE_TEXT_API_URL", "http://localhost:9/v1/chat/completions", 1);
    ::setenv("SDE_TEXT_MODEL", "m1", 1);
    auto env = backend_config_from_env("TEXT");
    CHECK(env.endpoint_url == "http://localhost:9/v1/chat/completions");
    CHECK(env.model_name == "m1");
    CHECK(env.api_key_ref == "SDE_TEXT_API_KEY");
    ::unsetenv("SDE_TEXT_API_URL");
    ::unsetenv("SDE_TEXT_MODEL");
  }
}
