#include "texdistill/http_client.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "httplib.h"

namespace texdistill {

using nlohmann::json;

HttpClientOptions HttpClientOptions::from_json(const json& j, const char* endpoint_env) {
  HttpClientOptions o;
  o.endpoint = j.value("endpoint", std::string());
  o.timeout_seconds = j.value("timeout_seconds", o.timeout_seconds);
  o.max_retries = j.value("max_retries", o.max_retries);
  o.retry_backoff_seconds = j.value("retry_backoff_seconds", o.retry_backoff_seconds);
  if (o.endpoint.empty() && endpoint_env) {
    if (const char* env = std::getenv(endpoint_env)) o.endpoint = env;
  }
  return o;
}

void HttpClientOptions::validate() const {
  if (endpoint.empty()) throw std::invalid_argument("HTTP adapter needs an endpoint");
  if (endpoint.rfind("http://", 0) != 0) throw std::invalid_argument("endpoint must start with http://: " + endpoint);
  if (!(timeout_seconds > 0.0)) throw std::invalid_argument("timeout_seconds must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (!(retry_backoff_seconds >= 0.0)) throw std::invalid_argument("retry_backoff_seconds must be >= 0");
}

json post_json(const HttpClientOptions& options, const std::string& route, const json& body) {
  options.validate();
  const std::string& ep = options.endpoint;
  const auto path_start = ep.find('/', 7);
  const std::string host = ep.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : ep.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(host);
  const auto secs = static_cast<time_t>(options.timeout_seconds);
  const auto usecs = static_cast<time_t>((options.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(options.retry_backoff_seconds * attempt));
    auto res = client.Post(prefix + route, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw std::runtime_error(ep + route + " rejected request: HTTP " + std::to_string(res->status) + " " + res->body);
    try {
      return json::parse(res->body);
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed response from " + ep + route + ": " + e.what());
    }
  }
  throw std::runtime_error(ep + route + " unreachable after " + std::to_string(options.max_retries + 1) +
                           " attempts (" + last_error + ")");
}

}  // namespace texdistill
