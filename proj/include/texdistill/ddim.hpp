#pragma once

#include <vector>

#include "texdistill/backend.hpp"
#include "texdistill/image.hpp"
#include "texdistill/schedule.hpp"

namespace texdistill {

enum class DdimDirection { kInvert, kDenoise };

// Deterministic DDIM update x_s = sqrt(abar_s) x0_hat + sqrt(1 - abar_s) eps_hat.
// Denoise requires s < t, invert requires s > t; s == t is the identity and
// makes no backend call. By default eps_hat is evaluated at the source state
// (first-order). For inversion, refine_iterations > 0 re-evaluates eps_hat at
// the current target estimate (fixed-point iteration, one backend call each)
// so that a denoise step from the result lands back on x.
Image ddim_step(const Image& x, int t, int s, const ConditioningBundle& cond, const DenoiserBackend& backend,
                const NoiseSchedule& schedule, DdimDirection direction, int refine_iterations = 0);

// Timesteps 0, step, 2*step, ..., t_target (last interval may be shorter).
std::vector<int> inversion_timesteps(int t_target, int step);

struct Trajectory {
  std::vector<int> timesteps;
  std::vector<Image> states;

  std::size_t size() const { return states.size(); }
  const Image& head() const { return states.back(); }
  int head_t() const { return timesteps.back(); }
};

// Inverts x0 to t_target along inversion_timesteps(t_target, step).
// t_target == 0 yields {x0}.
Trajectory ddim_invert_trajectory(const Image& x0, int t_target, int step, const ConditioningBundle& cond,
                                  const DenoiserBackend& backend, const NoiseSchedule& schedule,
                                  int refine_iterations = 0);

// Denoises x from timesteps.back() down to timesteps.front() through every
// listed timestep (ascending order expected).
Image ddim_denoise(const Image& x, const std::vector<int>& timesteps, const ConditioningBundle& cond,
                   const DenoiserBackend& backend, const NoiseSchedule& schedule);

}  // namespace texdistill
