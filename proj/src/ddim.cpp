#include "texdistill/ddim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace texdistill {

namespace {

Image ddim_update(const Image& x, int t, int s, const Image& eps, const NoiseSchedule& schedule) {
  const Image x0 = pseudo_gt(x, t, eps, schedule);
  return axpy(std::sqrt(schedule.alpha_bar(s)) * x0, std::sqrt(1.0 - schedule.alpha_bar(s)), eps);
}

double max_abs(const Image& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

Image ddim_step(const Image& x, int t, int s, const ConditioningBundle& cond, const DenoiserBackend& backend,
                const NoiseSchedule& schedule, DdimDirection direction, int refine_iterations) {
  schedule.check_timestep(t);
  schedule.check_timestep(s);
  if (refine_iterations < 0) throw std::invalid_argument("refine_iterations must be >= 0");
  if (s == t) return x;
  if (direction == DdimDirection::kDenoise && s > t)
    throw std::invalid_argument("denoise step requires s < t");
  if (direction == DdimDirection::kInvert && s < t) throw std::invalid_argument("inversion step requires s > t");

  Image eps = backend.predict_noise(x, t, cond);
  require_same_shape(x, eps, "backend output");
  Image out = ddim_update(x, t, s, eps, schedule);
  if (direction == DdimDirection::kDenoise) return out;

  for (int k = 0; k < refine_iterations; ++k) {
    eps = backend.predict_noise(out, s, cond);
    Image next = ddim_update(x, t, s, eps, schedule);
    const double change = max_abs_diff(next, out);
    out = std::move(next);
    if (change <= 1e-15 * std::max(1.0, max_abs(out))) break;
  }
  return out;
}

std::vector<int> inversion_timesteps(int t_target, int step) {
  if (t_target < 0) throw std::invalid_argument("t_target must be >= 0");
  if (step <= 0) throw std::invalid_argument("inversion step must be positive");
  std::vector<int> ts{0};
  while (ts.back() < t_target) ts.push_back(std::min(ts.back() + step, t_target));
  return ts;
}

Trajectory ddim_invert_trajectory(const Image& x0, int t_target, int step, const ConditioningBundle& cond,
                                  const DenoiserBackend& backend, const NoiseSchedule& schedule,
                                  int refine_iterations) {
  schedule.check_timestep(t_target);
  Trajectory traj;
  traj.timesteps = inversion_timesteps(t_target, step);
  traj.states.reserve(traj.timesteps.size());
  traj.states.push_back(x0);
  for (std::size_t i = 1; i < traj.timesteps.size(); ++i) {
    traj.states.push_back(ddim_step(traj.states.back(), traj.timesteps[i - 1], traj.timesteps[i], cond, backend,
                                    schedule, DdimDirection::kInvert, refine_iterations));
  }
  return traj;
}

Image ddim_denoise(const Image& x, const std::vector<int>& timesteps, const ConditioningBundle& cond,
                   const DenoiserBackend& backend, const NoiseSchedule& schedule) {
  if (timesteps.empty()) throw std::invalid_argument("timesteps must not be empty");
  if (!std::is_sorted(timesteps.begin(), timesteps.end())) throw std::invalid_argument("timesteps must ascend");
  Image cur = x;
  for (std::size_t i = timesteps.size() - 1; i > 0; --i)
    cur = ddim_step(cur, timesteps[i], timesteps[i - 1], cond, backend, schedule, DdimDirection::kDenoise);
  return cur;
}

}  // namespace texdistill
