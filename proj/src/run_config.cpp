#include "texdistill/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "texdistill/backend.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/serialization.hpp"

namespace texdistill {

using nlohmann::json;

InjectionLayerSet StyleOptions::layer_set() const {
  std::set<std::string> merged;
  for (const std::string& entry : layers) {
    const auto& presets = InjectionLayerSet::preset_names();
    const InjectionLayerSet part = std::find(presets.begin(), presets.end(), entry) != presets.end()
                                       ? InjectionLayerSet::preset(entry)
                                       : InjectionLayerSet({entry});
    merged.insert(part.layers().begin(), part.layers().end());
  }
  return InjectionLayerSet(std::vector<std::string>(merged.begin(), merged.end()));
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base_dir / path).lexically_normal();
}

void RunConfig::validate() const {
  if (schema_version != kRunConfigSchemaVersion)
    throw std::invalid_argument("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                                std::to_string(kRunConfigSchemaVersion) + ")");
  if (mesh.empty()) throw std::invalid_argument("mesh: required");
  if (mesh.rfind("builtin:", 0) != 0 && !std::filesystem::is_regular_file(resolve(mesh)))
    throw std::invalid_argument("mesh: file not found: " + resolve(mesh).string());
  if (!reference_image.empty() && !std::filesystem::is_regular_file(resolve(reference_image)))
    throw std::invalid_argument("reference_image: file not found: " + resolve(reference_image).string());
  prompts.validate();
  const auto names = registered_backends();
  if (std::find(names.begin(), names.end(), backend) == names.end())
    throw std::invalid_argument("backend: unknown backend '" + backend + "'");
  const NoiseSchedule sched = schedule.build();
  field.validate();
  distill.validate(sched);
  if (distill.weights.lambda_style != 0.0 && reference_image.empty())
    throw std::invalid_argument("reference_image: required when lambda_style != 0");
  style.layer_set();
  if (style.decomposition != "odcr" && style.decomposition != "naive")
    throw std::invalid_argument("style.decomposition must be odcr or naive");
  if (!std::isfinite(style.naive_strength)) throw std::invalid_argument("style.naive_strength must be finite");
  if (embedding_provider != "mock" && embedding_provider != "http")
    throw std::invalid_argument("embedding.provider: unknown provider '" + embedding_provider + "'");
  if (bake.resolution < 1) throw std::invalid_argument("bake.resolution must be >= 1");
  if (bake.padding_iterations < 0) throw std::invalid_argument("bake.padding_iterations must be >= 0");
  if (eval.views < 1) throw std::invalid_argument("eval.views must be >= 1");
  if (eval.view_size < 8) throw std::invalid_argument("eval.view_size must be >= 8");
  make_extractor(eval.extractor, eval.extractor_options);
  if (output_dir.empty()) throw std::invalid_argument("output_dir: required");
}

bool RunConfig::operator==(const RunConfig& o) const {
  json a, b;
  to_json(a, *this);
  to_json(b, o);
  return a == b;
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"schema_version", c.schema_version},
           {"mesh", c.mesh},
           {"reference_image", c.reference_image},
           {"prompts", {{"y", c.prompts.y}, {"y_ref", c.prompts.y_ref}}},
           {"backend", {{"name", c.backend}, {"options", c.backend_options}}},
           {"schedule", c.schedule},
           {"field", c.field},
           {"distill", c.distill},
           {"style",
            {{"layers", c.style.layers},
             {"decomposition", c.style.decomposition},
             {"naive_strength", c.style.naive_strength}}},
           {"embedding", {{"provider", c.embedding_provider}, {"options", c.embedding_options}}},
           {"bake",
            {{"resolution", c.bake.resolution},
             {"padding_iterations", c.bake.padding_iterations},
             {"atlas_command", c.bake.atlas_command}}},
           {"eval",
            {{"enabled", c.eval.enabled},
             {"views", c.eval.views},
             {"view_size", c.eval.view_size},
             {"extractor", c.eval.extractor},
             {"extractor_options", c.eval.extractor_options}}},
           {"output_dir", c.output_dir},
           {"seed", c.seed}};
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void from_json(const json& j, RunConfig& c) {
  check_keys(j,
             {"schema_version", "mesh", "reference_image", "prompts", "backend", "schedule", "field", "distill", "style",
              "embedding", "bake", "eval", "output_dir", "seed"},
             "config");
  if (!j.contains("schema_version")) throw std::invalid_argument("config: schema_version is required");
  read(j, "schema_version", c.schema_version);
  read(j, "mesh", c.mesh);
  read(j, "reference_image", c.reference_image);
  if (j.contains("prompts")) {
    const json& p = j.at("prompts");
    check_keys(p, {"y", "y_ref"}, "prompts");
    read(p, "y", c.prompts.y);
    read(p, "y_ref", c.prompts.y_ref);
  }
  if (j.contains("backend")) {
    const json& b = j.at("backend");
    check_keys(b, {"name", "options"}, "backend");
    read(b, "name", c.backend);
    if (b.contains("options")) c.backend_options = b.at("options");
  }
  read(j, "schedule", c.schedule);
  read(j, "field", c.field);
  read(j, "distill", c.distill);
  if (j.contains("style")) {
    const json& s = j.at("style");
    check_keys(s, {"layers", "decomposition", "naive_strength"}, "style");
    if (s.contains("layers")) {
      c.style.layers = s.at("layers").is_string() ? std::vector<std::string>{s.at("layers").get<std::string>()}
                                                  : s.at("layers").get<std::vector<std::string>>();
    }
    read(s, "decomposition", c.style.decomposition);
    read(s, "naive_strength", c.style.naive_strength);
  }
  if (j.contains("embedding")) {
    const json& e = j.at("embedding");
    check_keys(e, {"provider", "options"}, "embedding");
    read(e, "provider", c.embedding_provider);
    if (e.contains("options")) c.embedding_options = e.at("options");
  }
  if (j.contains("bake")) {
    const json& b = j.at("bake");
    check_keys(b, {"resolution", "padding_iterations", "atlas_command"}, "bake");
    read(b, "resolution", c.bake.resolution);
    read(b, "padding_iterations", c.bake.padding_iterations);
    read(b, "atlas_command", c.bake.atlas_command);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, {"enabled", "views", "view_size", "extractor", "extractor_options"}, "eval");
    read(e, "enabled", c.eval.enabled);
    read(e, "views", c.eval.views);
    read(e, "view_size", c.eval.view_size);
    read(e, "extractor", c.eval.extractor);
    if (e.contains("extractor_options")) c.eval.extractor_options = e.at("extractor_options");
  }
  read(j, "output_dir", c.output_dir);
  read(j, "seed", c.seed);
  c.distill.seed = c.seed;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config " + path.string());
  RunConfig c;
  try {
    c = json::parse(is, nullptr, true, true).get<RunConfig>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  c.base_dir = std::filesystem::absolute(path).parent_path();
  c.validate();
  return c;
}

Mesh load_mesh_spec(const std::string& spec, const std::filesystem::path& base_dir) {
  Mesh m;
  if (spec == "builtin:cube") {
    m = primitives::cube(true);
  } else if (spec == "builtin:cube-nouv") {
    m = primitives::cube(false);
  } else if (spec == "builtin:sphere") {
    m = primitives::uv_sphere(32, 16);
  } else if (spec == "builtin:quad") {
    m = primitives::quad();
  } else if (spec.rfind("builtin:", 0) == 0) {
    throw std::invalid_argument("unknown builtin mesh '" + spec + "'");
  } else {
    const std::filesystem::path p(spec);
    return load_mesh(p.is_absolute() ? p : base_dir / p);
  }
  normalize_mesh(m);
  return m;
}

}  // namespace texdistill
