#include "texdistill/serialization.hpp"

#include <stdexcept>

namespace texdistill {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const HashGridConfig& c) {
  j = json{{"levels", c.levels},
           {"base_resolution", c.base_resolution},
           {"growth_factor", c.growth_factor},
           {"features_per_level", c.features_per_level},
           {"table_size_log2", c.table_size_log2},
           {"mlp_hidden", c.mlp_hidden}};
}

void from_json(const json& j, HashGridConfig& c) {
  check_keys(j, {"levels", "base_resolution", "growth_factor", "features_per_level", "table_size_log2", "mlp_hidden"},
             "hash_grid");
  read(j, "levels", c.levels);
  read(j, "base_resolution", c.base_resolution);
  read(j, "growth_factor", c.growth_factor);
  read(j, "features_per_level", c.features_per_level);
  read(j, "table_size_log2", c.table_size_log2);
  read(j, "mlp_hidden", c.mlp_hidden);
  c.validate();
}

void to_json(json& j, const AdamParams& c) {
  j = json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

void from_json(const json& j, AdamParams& c) {
  check_keys(j, {"learning_rate", "beta1", "beta2", "epsilon"}, "optimizer");
  read(j, "learning_rate", c.learning_rate);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
}

void to_json(json& j, const GuidanceWeights& c) {
  j = json{{"lambda_cfg", c.lambda_cfg}, {"lambda_style", c.lambda_style}};
}

void from_json(const json& j, GuidanceWeights& c) {
  check_keys(j, {"lambda_cfg", "lambda_style"}, "weights");
  read(j, "lambda_cfg", c.lambda_cfg);
  read(j, "lambda_style", c.lambda_style);
  c.validate();
}

void to_json(json& j, const TimestepPolicy& c) {
  j = json{{"min_t", c.min_t}, {"max_t", c.max_t}, {"annealing", to_string(c.annealing)}, {"max_t_floor", c.max_t_floor}};
}

void from_json(const json& j, TimestepPolicy& c) {
  check_keys(j, {"min_t", "max_t", "annealing", "max_t_floor"}, "timestep");
  read(j, "min_t", c.min_t);
  read(j, "max_t", c.max_t);
  if (j.contains("annealing")) c.annealing = annealing_from_string(j.at("annealing").get<std::string>());
  read(j, "max_t_floor", c.max_t_floor);
}

void to_json(json& j, const Range& c) { j = json::array({c.min, c.max}); }

void from_json(const json& j, Range& c) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw std::invalid_argument("range must be [min, max]");
  c = {v[0], v[1]};
}

void to_json(json& j, const CameraPolicy& c) {
  j = json{{"azimuth_deg", c.azimuth_deg}, {"elevation_deg", c.elevation_deg}, {"radius", c.radius},
           {"fov_deg", c.fov_deg},         {"width", c.width},                 {"height", c.height}};
}

void from_json(const json& j, CameraPolicy& c) {
  check_keys(j, {"azimuth_deg", "elevation_deg", "radius", "fov_deg", "width", "height"}, "camera");
  read(j, "azimuth_deg", c.azimuth_deg);
  read(j, "elevation_deg", c.elevation_deg);
  read(j, "radius", c.radius);
  read(j, "fov_deg", c.fov_deg);
  read(j, "width", c.width);
  read(j, "height", c.height);
  c.validate();
}

void to_json(json& j, const ScheduleConfig& c) {
  j = json{{"steps", c.steps}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}, {"kind", to_string(c.kind)}};
}

void from_json(const json& j, ScheduleConfig& c) {
  check_keys(j, {"steps", "beta_start", "beta_end", "kind"}, "schedule");
  read(j, "steps", c.steps);
  read(j, "beta_start", c.beta_start);
  read(j, "beta_end", c.beta_end);
  if (j.contains("kind")) c.kind = beta_kind_from_string(j.at("kind").get<std::string>());
  c.build();
}

void to_json(json& j, const DistillConfig& c) {
  j = json{{"weights", c.weights},
           {"iterations", c.iterations},
           {"optimizer", c.adam},
           {"timestep", c.timestep},
           {"inversion_step", c.inversion_step},
           {"inversion_refine_iterations", c.inversion_refine_iterations},
           {"objective", to_string(c.objective)},
           {"camera", c.camera},
           {"background", {c.background[0], c.background[1], c.background[2]}},
           {"checkpoint_every", c.checkpoint_every}};
}

// seed and the output paths are owned by the run config, not parsed here.
void from_json(const json& j, DistillConfig& c) {
  check_keys(j,
             {"weights", "iterations", "optimizer", "timestep", "inversion_step", "inversion_refine_iterations",
              "objective", "camera", "background", "checkpoint_every"},
             "distill");
  read(j, "weights", c.weights);
  read(j, "iterations", c.iterations);
  read(j, "optimizer", c.adam);
  read(j, "timestep", c.timestep);
  read(j, "inversion_step", c.inversion_step);
  read(j, "inversion_refine_iterations", c.inversion_refine_iterations);
  if (j.contains("objective")) c.objective = objective_from_string(j.at("objective").get<std::string>());
  read(j, "camera", c.camera);
  if (j.contains("background")) {
    const auto bg = j.at("background").get<std::vector<double>>();
    if (bg.size() != 3) throw std::invalid_argument("distill.background must have 3 entries");
    c.background = Rgb(bg[0], bg[1], bg[2]);
  }
  read(j, "checkpoint_every", c.checkpoint_every);
}

json report_to_json(const StepReport& r) {
  return json{{"iteration", r.iteration},         {"t", r.t},
              {"t_prev", r.t_prev},               {"delta_norm", r.delta_norm},
              {"gradient_norm", r.gradient_norm}, {"interval_norm", r.interval_norm},
              {"cfg_norm", r.cfg_norm},           {"style_norm", r.style_norm},
              {"covered_pixels", r.covered_pixels}, {"backend_calls", r.backend_calls},
              {"wall_time_seconds", r.wall_time_seconds}};
}

}  // namespace texdistill
