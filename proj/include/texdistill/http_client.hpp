#pragma once

#include <string>

#include "json.hpp"

namespace texdistill {

// Connection settings shared by the HTTP denoiser and embedding adapters.
struct HttpClientOptions {
  std::string endpoint;  // http://host[:port][/prefix]
  double timeout_seconds = 60.0;
  int max_retries = 2;
  double retry_backoff_seconds = 0.5;  // sleep backoff * attempt before each retry

  // Reads endpoint/timeout_seconds/max_retries/retry_backoff_seconds; the
  // endpoint falls back to the environment variable `endpoint_env`.
  static HttpClientOptions from_json(const nlohmann::json& j, const char* endpoint_env);
  void validate() const;
};

// POSTs `body` as JSON to <endpoint><route>. Transport errors and 5xx are
// retried; other non-200 statuses and unparsable bodies throw
// std::runtime_error immediately.
nlohmann::json post_json(const HttpClientOptions& options, const std::string& route, const nlohmann::json& body);

}  // namespace texdistill
