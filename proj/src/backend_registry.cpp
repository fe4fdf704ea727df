#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "texdistill/backend.hpp"
#include "texdistill/http_backend.hpp"
#include "texdistill/rng.hpp"

namespace texdistill {

using nlohmann::json;

namespace {

// A mean is either a per-channel list (broadcast) or a full image object.
Image mean_from_json(const json& j) {
  if (j.is_array()) {
    const auto v = j.get<std::vector<double>>();
    return solid_image(1, 1, v);
  }
  return image_from_json(j);
}

Eigen::MatrixXd style_map_from_json(const json& j, int channels) {
  if (j.is_array()) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::invalid_argument("style_map must not be empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw std::invalid_argument("style_map rows differ in length");
      for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
  }
  // {"seed": s, "dimension": d, "scale": a}: entries a * N(0,1) / sqrt(d)
  const auto seed = j.at("seed").get<std::uint64_t>();
  const int dim = j.at("dimension").get<int>();
  const double scale = j.value("scale", 1.0);
  if (dim <= 0) throw std::invalid_argument("style_map dimension must be positive");
  Rng rng = make_rng(seed, 0x57u);
  Eigen::MatrixXd m(channels, dim);
  for (int r = 0; r < channels; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = scale * standard_normal(rng) / std::sqrt(static_cast<double>(dim));
  return m;
}

std::unique_ptr<DenoiserBackend> make_analytic(const json& options, const NoiseSchedule& schedule) {
  const Image mean = options.contains("mean") ? mean_from_json(options.at("mean")) : solid_image(1, 1, std::vector<double>{0.5, 0.5, 0.5});
  auto backend = make_analytic_oracle(mean, options.value("sigma", 0.0), schedule);
  if (options.contains("prompts")) {
    for (const auto& [prompt, spec] : options.at("prompts").items()) {
      std::optional<double> sigma;
      if (spec.contains("sigma")) sigma = spec.at("sigma").get<double>();
      backend->register_prompt(prompt, mean_from_json(spec.at("mean")), sigma);
    }
  }
  if (options.contains("style_map")) backend->set_style_map(style_map_from_json(options.at("style_map"), mean.channels));
  return backend;
}

using Factory = std::function<std::unique_ptr<DenoiserBackend>(const json&, const NoiseSchedule&)>;

const std::map<std::string, Factory>& factories() {
  static const std::map<std::string, Factory> table = {
      {"analytic", make_analytic},
      {"external-diffusion",
       [](const json& options, const NoiseSchedule&) -> std::unique_ptr<DenoiserBackend> {
         return HttpDenoiserBackend::from_json(options);
       }},
  };
  return table;
}

}  // namespace

std::unique_ptr<DenoiserBackend> create_backend(const std::string& name, const json& options,
                                                const NoiseSchedule& schedule) {
  const auto& table = factories();
  auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown backend '" + name + "'");
  return it->second(options.is_null() ? json::object() : options, schedule);
}

std::vector<std::string> registered_backends() {
  std::vector<std::string> names;
  for (const auto& [name, _] : factories()) names.push_back(name);
  return names;
}

}  // namespace texdistill
