#include "texdistill/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "texdistill/checkpoint.hpp"
#include "texdistill/ddim.hpp"
#include "texdistill/serialization.hpp"

namespace texdistill {

std::string to_string(Annealing a) { return a == Annealing::kNone ? "none" : "linear"; }

Annealing annealing_from_string(const std::string& s) {
  if (s == "none") return Annealing::kNone;
  if (s == "linear") return Annealing::kLinear;
  throw std::invalid_argument("unknown annealing '" + s + "' (expected none | linear)");
}

std::string to_string(Objective o) { return o == Objective::kIsm ? "ism" : "sds"; }

Objective objective_from_string(const std::string& s) {
  if (s == "ism") return Objective::kIsm;
  if (s == "sds") return Objective::kSds;
  throw std::invalid_argument("unknown objective '" + s + "' (expected ism | sds)");
}

void TimestepPolicy::validate(int T) const {
  if (!(min_t > 0 && min_t <= max_t && max_t <= T))
    throw std::invalid_argument("timestep policy needs 0 < min_t <= max_t <= T");
  if (annealing == Annealing::kLinear && !(max_t_floor >= min_t && max_t_floor <= max_t))
    throw std::invalid_argument("timestep policy needs min_t <= max_t_floor <= max_t");
}

int effective_max_t(const TimestepPolicy& policy, int iteration, int total_iterations) {
  if (policy.annealing == Annealing::kNone || total_iterations <= 1) return policy.max_t;
  const double frac = std::clamp(static_cast<double>(iteration) / (total_iterations - 1), 0.0, 1.0);
  return static_cast<int>(std::lround(policy.max_t - frac * (policy.max_t - policy.max_t_floor)));
}

int sample_timestep(const TimestepPolicy& policy, Rng& rng, int iteration, int total_iterations) {
  const int hi = effective_max_t(policy, iteration, total_iterations);
  if (hi < policy.min_t) throw std::invalid_argument("empty timestep range");
  const int span = hi - policy.min_t + 1;
  const int k = std::min(static_cast<int>(uniform01(rng) * span), span - 1);
  return policy.min_t + k;
}

void DistillConfig::validate(const NoiseSchedule& schedule) const {
  weights.validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  timestep.validate(schedule.steps());
  if (inversion_step < 1) throw std::invalid_argument("inversion_step must be >= 1");
  if (inversion_refine_iterations < 0) throw std::invalid_argument("inversion_refine_iterations must be >= 0");
  camera.validate();
  for (int k = 0; k < 3; ++k)
    if (!std::isfinite(background[k])) throw std::invalid_argument("background must be finite");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

StepGradient compute_step_gradient(const Mesh& mesh, const TextureField& field, const DenoiserBackend& backend,
                                   const ConditioningBundle& cond, const DistillConfig& config,
                                   const NoiseSchedule& schedule, Rng& rng, int iteration) {
  CallCountingBackend counted(backend);
  StepGradient g;
  g.camera = sample_camera(rng, config.camera);
  g.view = render_color(mesh, field, g.camera, config.background);
  g.t = sample_timestep(config.timestep, rng, iteration, config.iterations);

  ConditioningBundle step_cond = cond;
  if (backend.capabilities().supports_geometry) step_cond.geometry = render_geometry_maps(mesh, g.camera);

  const Image& x0 = g.view.color;
  if (config.objective == Objective::kIsm) {
    const Trajectory traj = ddim_invert_trajectory(x0, g.t, config.inversion_step, step_cond.unconditional(), counted,
                                                   schedule, config.inversion_refine_iterations);
    const std::size_t n = traj.size();
    g.t_prev = traj.timesteps[n - 2];
    g.delta = full_delta(traj.states[n - 1], traj.states[n - 2], g.t, g.t_prev, step_cond, counted, schedule,
                         config.weights);
  } else {
    const Image eps = gaussian_image(rng, x0.height, x0.width, x0.channels);
    g.t_prev = g.t;
    g.delta = sds_full_delta(x0, g.t, eps, step_cond, counted, schedule, config.weights);
  }
  g.backend_calls = counted.calls();

  if (!all_finite(g.delta.total)) {
    std::ostringstream os;
    os << "non-finite delta at iteration " << iteration << " (t=" << g.t << ", |interval|=" << l2_norm(g.delta.interval)
       << ", |cfg|=" << l2_norm(g.delta.cfg) << ", |style|=" << l2_norm(g.delta.style) << ")";
    throw std::runtime_error(os.str());
  }
  g.weighted_delta = schedule.omega(g.t) * g.delta.total;
  g.gradient = render_view_gradient(g.view, g.weighted_delta, field);
  if (!g.gradient.all_finite())
    throw std::runtime_error("non-finite parameter gradient at iteration " + std::to_string(iteration));
  return g;
}

StepReport distill_step(const Mesh& mesh, DistillState& state, const DenoiserBackend& backend,
                        const ConditioningBundle& cond, const DistillConfig& config, const NoiseSchedule& schedule,
                        Rng& rng, int iteration) {
  const auto start = std::chrono::steady_clock::now();
  const StepGradient g = compute_step_gradient(mesh, state.field, backend, cond, config, schedule, rng, iteration);

  const std::size_t covered = g.view.covered_count();
  if (covered == 0) {
    state.adam.skip_step();
  } else {
    state.adam.step(state.field.parameters(), g.gradient.values);
  }

  StepReport r;
  r.iteration = iteration;
  r.t = g.t;
  r.t_prev = g.t_prev;
  r.delta_norm = l2_norm(g.delta.total);
  r.gradient_norm = g.gradient.norm();
  r.interval_norm = l2_norm(g.delta.interval);
  r.cfg_norm = l2_norm(g.delta.cfg);
  r.style_norm = l2_norm(g.delta.style);
  r.covered_pixels = covered;
  r.backend_calls = g.backend_calls;
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<StepReport> distill(const Mesh& mesh, DistillState& state, const DenoiserBackend& backend,
                                const ConditioningBundle& cond, const DistillConfig& config,
                                const NoiseSchedule& schedule, const ReportCallback& on_report) {
  config.validate(schedule);
  if (config.weights.lambda_style != 0.0 && (!cond.style || cond.style->feature.empty()))
    throw std::invalid_argument("lambda_style != 0 but the conditioning has no style feature");
  if (state.next_iteration < 0 || state.next_iteration > config.iterations)
    throw std::invalid_argument("state iteration outside the configured run");

  std::ofstream reports;
  if (!config.report_path.empty()) {
    reports.open(config.report_path, state.next_iteration == 0 ? std::ios::trunc : std::ios::app);
    if (!reports) throw std::runtime_error("cannot open report file " + config.report_path);
  }

  std::vector<StepReport> out;
  for (int i = state.next_iteration; i < config.iterations; ++i) {
    Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(i));
    StepReport r = distill_step(mesh, state, backend, cond, config, schedule, rng, i);
    state.next_iteration = i + 1;
    if (reports) reports << report_to_json(r).dump() << '\n' << std::flush;
    if (on_report) on_report(r, state);
    out.push_back(r);
    const bool last = state.next_iteration == config.iterations;
    if (!config.checkpoint_path.empty() &&
        (last || (config.checkpoint_every > 0 && state.next_iteration % config.checkpoint_every == 0)))
      save_checkpoint(config.checkpoint_path, state);
  }
  return out;
}

}  // namespace texdistill
