#pragma once

#include "json.hpp"
#include "texdistill/backend.hpp"
#include "texdistill/http_client.hpp"

namespace texdistill {

inline constexpr const char* kBackendEndpointEnv = "TEXDISTILL_BACKEND_ENDPOINT";

// Adapter for an out-of-process denoiser: POST <endpoint>/predict_noise.
// Wire format in docs/backend_adapter.md. Options: the HttpClientOptions
// keys plus "capabilities".
class HttpDenoiserBackend final : public DenoiserBackend {
 public:
  HttpDenoiserBackend(HttpClientOptions client, BackendCapabilities capabilities);
  static std::unique_ptr<HttpDenoiserBackend> from_json(const nlohmann::json& options);

  Image predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const override;
  BackendCapabilities capabilities() const override { return capabilities_; }
  std::string name() const override { return "external-diffusion"; }

 private:
  HttpClientOptions client_;
  BackendCapabilities capabilities_;
};

nlohmann::json image_to_json(const Image& img);
Image image_from_json(const nlohmann::json& j);
nlohmann::json conditioning_to_json(const ConditioningBundle& cond);
ConditioningBundle conditioning_from_json(const nlohmann::json& j);

}  // namespace texdistill
