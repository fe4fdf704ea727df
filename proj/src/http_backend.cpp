#include "texdistill/http_backend.hpp"

#include <stdexcept>

namespace texdistill {

using nlohmann::json;

json image_to_json(const Image& img) {
  return json{{"shape", {img.height, img.width, img.channels}}, {"data", img.data}};
}

Image image_from_json(const json& j) {
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 3 || shape[0] < 0 || shape[1] < 0 || shape[2] < 0)
    throw std::invalid_argument("image shape must be [height, width, channels]");
  Image img(shape[0], shape[1], shape[2]);
  img.data = j.at("data").get<std::vector<double>>();
  if (img.data.size() != static_cast<std::size_t>(shape[0]) * shape[1] * shape[2])
    throw std::invalid_argument("image data length does not match shape");
  return img;
}

json conditioning_to_json(const ConditioningBundle& cond) {
  json j = json::object();
  j["text"] = cond.text ? json(*cond.text) : json(nullptr);
  j["negative_text"] = cond.negative_text ? json(*cond.negative_text) : json(nullptr);
  if (cond.style) {
    std::vector<std::string> layers(cond.style->layers.layers().begin(), cond.style->layers.layers().end());
    j["style"] = json{{"feature", cond.style->feature}, {"layers", layers}};
  } else {
    j["style"] = nullptr;
  }
  if (cond.geometry) {
    j["geometry"] = json{{"depth", image_to_json(cond.geometry->depth)},
                         {"normal", image_to_json(cond.geometry->normal)},
                         {"mask", cond.geometry->mask}};
  } else {
    j["geometry"] = nullptr;
  }
  return j;
}

ConditioningBundle conditioning_from_json(const json& j) {
  ConditioningBundle c;
  if (j.contains("text") && !j.at("text").is_null()) c.text = j.at("text").get<std::string>();
  if (j.contains("negative_text") && !j.at("negative_text").is_null())
    c.negative_text = j.at("negative_text").get<std::string>();
  if (j.contains("style") && !j.at("style").is_null()) {
    StyleCondition s;
    s.feature = j.at("style").at("feature").get<std::vector<double>>();
    s.layers = InjectionLayerSet(j.at("style").value("layers", std::vector<std::string>{}));
    c.style = std::move(s);
  }
  if (j.contains("geometry") && !j.at("geometry").is_null()) {
    GeometryMaps g;
    g.depth = image_from_json(j.at("geometry").at("depth"));
    g.normal = image_from_json(j.at("geometry").at("normal"));
    g.mask = j.at("geometry").value("mask", std::vector<std::uint8_t>{});
    g.height = g.depth.height;
    g.width = g.depth.width;
    c.geometry = std::move(g);
  }
  return c;
}

HttpDenoiserBackend::HttpDenoiserBackend(HttpClientOptions client, BackendCapabilities capabilities)
    : client_(std::move(client)), capabilities_(capabilities) {
  client_.validate();
}

std::unique_ptr<HttpDenoiserBackend> HttpDenoiserBackend::from_json(const json& options) {
  BackendCapabilities caps{true, true, false};
  if (options.contains("capabilities")) {
    const json& c = options.at("capabilities");
    caps.supports_style_injection = c.value("supports_style_injection", caps.supports_style_injection);
    caps.supports_geometry = c.value("supports_geometry", caps.supports_geometry);
    caps.has_latent_codec = c.value("has_latent_codec", caps.has_latent_codec);
  }
  return std::make_unique<HttpDenoiserBackend>(HttpClientOptions::from_json(options, kBackendEndpointEnv), caps);
}

Image HttpDenoiserBackend::predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const {
  const json request{{"x_t", image_to_json(x_t)}, {"t", t}, {"conditioning", conditioning_to_json(cond)}};
  const json response = post_json(client_, "/predict_noise", request);
  Image eps;
  try {
    eps = image_from_json(response.at("eps"));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("malformed external-diffusion response: ") + e.what());
  }
  if (!eps.same_shape(x_t)) throw std::runtime_error("external-diffusion response shape differs from x_t");
  return eps;
}

}  // namespace texdistill
