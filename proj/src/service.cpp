#include "sde/service.hpp"

#include "httplib.h"

#include "sde/composition.hpp"

namespace sde {

namespace {

// Request body problems (not JSON, wrong field types) map to 400.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json error_body(std::string_view code, const std::string& message,
                const std::vector<Violation>* violations = nullptr) {
  json e{{"code", code}, {"message", message}};
  if (violations) e["violations"] = *violations;
  return json{{"error", e}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req, bool required = true) {
  if (req.body.empty()) {
    if (required) throw BadRequest("request body must be a JSON object");
    return json::object();
  }
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw BadRequest("request body must be a JSON object");
  return body;
}

std::size_t iteration_number(const std::string& text) {
  try {
    std::size_t used = 0;
    auto n = std::stoull(text, &used);
    if (used == text.size()) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::NotFound, "no iteration '" + text + "'");
}

ExpansionConfig expansion_from_json(const json& j) {
  ExpansionConfig c;
  c.max_depth = j.value("max_depth", c.max_depth);
  c.max_children = j.value("max_children", c.max_children);
  c.element_budget = j.value("element_budget", c.element_budget);
  return c;
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::PathNotFound:
      return 404;
    case ErrorCode::StageOrderViolation:
      return 409;
    case ErrorCode::BackendError:
    case ErrorCode::MalformedOutput:
      return 502;
    case ErrorCode::EmptyInput:
    case ErrorCode::BadK:
    case ErrorCode::BadArgument:
    case ErrorCode::InvalidScene:
    case ErrorCode::InvalidTemplate:
    case ErrorCode::OrphanPath:
    case ErrorCode::InvalidPath:
    case ErrorCode::InvalidEdit:
    case ErrorCode::EmptyLibrary:
    case ErrorCode::EmptyPrompt:
    case ErrorCode::EmptyCorpus:
      return 422;
    case ErrorCode::ParseError:
    case ErrorCode::InjectedFault:
      return 500;
  }
  return 500;
}

AdvanceParams advance_params_from_json(const json& j) {
  AdvanceParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw BadRequest("params must be an object");
  try {
    if (j.contains("style")) {
      if (j["style"].is_string()) {
        p.style_name = j["style"].get<std::string>();
      } else {
        p.style = j["style"].get<StyleSpec>();
      }
    }
    if (j.contains("k")) p.k = j["k"].get<std::size_t>();
    if (j.contains("linkage")) {
      auto l = j["linkage"].get<std::string>();
      if (l != "single" && l != "average") throw BadRequest("linkage must be single or average");
      p.linkage = l == "single" ? Linkage::single : Linkage::average;
    }
    if (j.contains("template_id")) p.template_id = j["template_id"].get<std::string>();
    if (j.contains("lighting")) p.lighting = j["lighting"].get<LightingSpec>();
    if (j.contains("expansion")) p.expansion = expansion_from_json(j["expansion"]);
  } catch (const json::exception& e) {
    throw BadRequest(std::string("invalid params: ") + e.what());
  }
  return p;
}

struct HttpService::Impl {
  std::shared_ptr<Pipeline> pipeline;
  std::string allow_origin;
  httplib::Server server;

  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const BadRequest& e) {
      send_json(res, 400, error_body("BadRequest", e.what()));
    } catch (const ValidationError& e) {
      send_json(res, http_status_for(e.code()), error_body(to_string(e.code()), e.what(), &e.violations()));
    } catch (const Error& e) {
      send_json(res, http_status_for(e.code()), error_body(to_string(e.code()), e.what()));
    } catch (const json::exception& e) {
      send_json(res, 400, error_body("BadRequest", e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, error_body("Internal", e.what()));
    }
  }

  const IterationRecord& iteration(const SessionState& s, const std::string& n_text) {
    auto n = iteration_number(n_text);
    if (n >= s.iterations.size()) throw Error(ErrorCode::NotFound, "no iteration " + n_text);
    return s.iterations[n];
  }

  void routes() {
    if (!allow_origin.empty()) {
      server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", allow_origin);
        res.set_header("Vary", "Origin");
      });
      server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
      });
    }

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = parse_body(req);
        if (!body.contains("input_text") || !body["input_text"].is_string()) {
          throw BadRequest("input_text must be a string");
        }
        std::optional<StyleSpec> style;
        if (body.contains("style") && !body["style"].is_null()) {
          if (body["style"].is_string()) {
            const auto* found = find_style(body["style"].get<std::string>());
            if (!found) throw Error(ErrorCode::BadArgument, "unknown style");
            style = *found;
          } else {
            style = body["style"].get<StyleSpec>();
          }
        }
        std::uint64_t seed = body.value("seed", std::uint64_t{0});
        auto s = pipeline->create_session(body["input_text"].get<std::string>(), style, seed);
        send_json(res, 201, json{{"session", s}});
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, json{{"session", pipeline->load(req.matches[1].str())}}); });
    });

    server.Post(R"(/sessions/([^/]+)/advance)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    auto body = parse_body(req, false);
                    auto params = advance_params_from_json(body.value("params", json()));
                    auto s = pipeline->advance(req.matches[1].str(), params);
                    send_json(res, 200, json{{"session", s}});
                  });
                });

    server.Post(R"(/sessions/([^/]+)/iterate)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    auto body = parse_body(req);
                    if (!body.contains("edits") || !body["edits"].is_array()) {
                      throw BadRequest("edits must be an array");
                    }
                    auto edits = body["edits"].get<std::vector<Edit>>();
                    std::optional<ExpansionConfig> expand;
                    if (body.contains("expand") && !body["expand"].is_null()) {
                      expand = expansion_from_json(body["expand"]);
                    }
                    auto s = pipeline->iterate(req.matches[1].str(), edits, expand);
                    send_json(res, 200, json{{"session", s}});
                  });
                });

    server.Get(R"(/sessions/([^/]+)/iterations/([^/]+)/svg)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                   auto s = pipeline->load(req.matches[1].str());
                   const auto& it = iteration(s, req.matches[2].str());
                   const auto& tmpl = find_template(pipeline->library(), *s.template_id);
                   res.status = 200;
                   res.set_content(render_debug_svg(it.scene_snapshot, tmpl), "image/svg+xml");
                 });
               });

    server.Get(R"(/sessions/([^/]+)/iterations/([^/]+)/prompt)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                   auto s = pipeline->load(req.matches[1].str());
                   res.status = 200;
                   res.set_content(iteration(s, req.matches[2].str()).compiled_prompt,
                                   "text/plain; charset=utf-8");
                 });
               });

    server.Get("/templates", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, json(pipeline->library())); });
    });
  }
};

HttpService::HttpService(std::shared_ptr<Pipeline> pipeline, std::string allow_origin)
    : impl_(std::make_unique<Impl>()) {
  impl_->pipeline = std::move(pipeline);
  impl_->allow_origin = std::move(allow_origin);
  impl_->routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::run() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace sde
