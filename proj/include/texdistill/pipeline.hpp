#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "texdistill/backend.hpp"
#include "texdistill/camera.hpp"
#include "texdistill/guidance.hpp"
#include "texdistill/mesh.hpp"
#include "texdistill/optimizer.hpp"
#include "texdistill/render.hpp"
#include "texdistill/rng.hpp"
#include "texdistill/schedule.hpp"
#include "texdistill/texture_field.hpp"

namespace texdistill {

enum class Annealing { kNone, kLinear };
enum class Objective { kIsm, kSds };

std::string to_string(Annealing a);
Annealing annealing_from_string(const std::string& s);
std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct TimestepPolicy {
  int min_t = 20;
  int max_t = 980;
  Annealing annealing = Annealing::kNone;
  int max_t_floor = 200;  // effective max_t at the final iteration under kLinear

  void validate(int T) const;
  bool operator==(const TimestepPolicy&) const = default;
};

// Upper bound of the sampling range at `iteration` (0-based) of `total`.
int effective_max_t(const TimestepPolicy& policy, int iteration, int total_iterations);

// Uniform integer in [min_t, effective_max_t(iteration)].
int sample_timestep(const TimestepPolicy& policy, Rng& rng, int iteration, int total_iterations);

struct DistillConfig {
  GuidanceWeights weights;
  int iterations = 2500;
  AdamParams adam;
  TimestepPolicy timestep;
  int inversion_step = 25;
  int inversion_refine_iterations = 0;
  Objective objective = Objective::kIsm;
  CameraPolicy camera;  // also fixes the render size
  std::uint64_t seed = 0;
  Rgb background = kDefaultBackground;
  int checkpoint_every = 0;     // 0 disables periodic checkpoints
  std::string checkpoint_path;  // written every checkpoint_every iterations and at the end
  std::string report_path;      // JSON-lines, one StepReport per iteration

  void validate(const NoiseSchedule& schedule) const;  // throws std::invalid_argument
};

struct StepReport {
  int iteration = 0;
  int t = 0;
  int t_prev = 0;
  double delta_norm = 0.0;
  double gradient_norm = 0.0;
  double interval_norm = 0.0;
  double cfg_norm = 0.0;
  double style_norm = 0.0;
  std::size_t covered_pixels = 0;
  long backend_calls = 0;
  double wall_time_seconds = 0.0;
};

// Field, optimizer, and position in the loop. Everything needed to resume.
struct DistillState {
  TextureField field;
  Adam adam;
  int next_iteration = 0;

  DistillState(TextureField f, const AdamParams& params)
      : field(std::move(f)), adam(field.parameter_count(), params) {}
};

// One iteration: sample camera, render, sample t, invert (ISM) or noise (SDS),
// compose the guided delta, route omega(t) * delta through the renderer and
// take an optimizer step. A view with no covered pixels takes
// Adam::skip_step(). Throws std::runtime_error on a non-finite delta or
// gradient. Geometry maps are attached when the backend supports them.
StepReport distill_step(const Mesh& mesh, DistillState& state, const DenoiserBackend& backend,
                        const ConditioningBundle& cond, const DistillConfig& config, const NoiseSchedule& schedule,
                        Rng& rng, int iteration);

// Everything distill_step computes before the optimizer update; exposed for
// gradient checks.
struct StepGradient {
  Camera camera;
  RenderedView view;
  int t = 0;
  int t_prev = 0;
  DeltaTerms delta;
  Image weighted_delta;  // omega(t) * delta.total
  ParameterGradient gradient;
  long backend_calls = 0;
};

StepGradient compute_step_gradient(const Mesh& mesh, const TextureField& field, const DenoiserBackend& backend,
                                   const ConditioningBundle& cond, const DistillConfig& config,
                                   const NoiseSchedule& schedule, Rng& rng, int iteration);

using ReportCallback = std::function<void(const StepReport&, const DistillState&)>;

// Runs iterations state.next_iteration .. config.iterations - 1. Iteration i
// draws from make_rng(config.seed, i), so resumed runs match uninterrupted
// ones. Writes reports/checkpoints when the config paths are set.
std::vector<StepReport> distill(const Mesh& mesh, DistillState& state, const DenoiserBackend& backend,
                                const ConditioningBundle& cond, const DistillConfig& config,
                                const NoiseSchedule& schedule, const ReportCallback& on_report = {});

}  // namespace texdistill
