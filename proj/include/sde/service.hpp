#pragma once

// JSON-over-HTTP surface for the interactive workflow.
//
//   POST /sessions                          {input_text, style?, seed?}   -> 201 {session}
//   GET  /sessions/{id}                                                   -> 200 {session}
//   POST /sessions/{id}/advance             {params?}                     -> 200 {session}
//   POST /sessions/{id}/iterate             {edits, expand?}              -> 200 {session}
//   GET  /sessions/{id}/iterations/{n}/svg                                -> image/svg+xml
//   GET  /sessions/{id}/iterations/{n}/prompt                             -> text/plain
//   GET  /templates                                                       -> [templates]
//
// Errors are {"error": {code, message, violations?}} with 400 (bad body),
// 404, 409, 422 or 502.

#include <memory>
#include <string>

#include "sde/error.hpp"
#include "sde/pipeline.hpp"

namespace sde {

int http_status_for(ErrorCode code);

AdvanceParams advance_params_from_json(const json& params);

class HttpService {
 public:
  explicit HttpService(std::shared_ptr<Pipeline> pipeline, std::string allow_origin = "");
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sde
