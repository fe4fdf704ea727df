#pragma once

#include <string>
#include <vector>

#include "texdistill/image.hpp"

namespace texdistill {

enum class BetaKind { kLinear, kScaledLinear };

std::string to_string(BetaKind kind);
BetaKind beta_kind_from_string(const std::string& s);

// Forward-diffusion constants for timesteps 0..T. beta is defined for
// t = 1..T; alpha_bar(0) = 1 is the clean state.
class NoiseSchedule {
 public:
  // Throws std::invalid_argument unless T >= 1 and 0 < beta_start < beta_end < 1
  // (beta_start == beta_end is accepted only when T == 1).
  static NoiseSchedule make(int T, double beta_start, double beta_end, BetaKind kind);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;       // t in [1, T]
  double alpha_bar(int t) const;  // t in [0, T]
  double gamma(int t) const;      // sqrt(1 - abar) / sqrt(abar)
  double omega(int t) const;      // 1 - abar

  void check_timestep(int t) const;  // throws std::out_of_range

 private:
  std::vector<double> betas_;      // index t-1
  std::vector<double> alpha_bar_;  // index t
};

struct ScheduleConfig {
  int steps = 1000;
  double beta_start = 0.00085;
  double beta_end = 0.012;
  BetaKind kind = BetaKind::kScaledLinear;

  NoiseSchedule build() const { return NoiseSchedule::make(steps, beta_start, beta_end, kind); }
  bool operator==(const ScheduleConfig&) const = default;
};

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Image add_noise(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule);

// Single-step clean estimate (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
Image pseudo_gt(const Image& x_t, int t, const Image& eps_hat, const NoiseSchedule& schedule);

}  // namespace texdistill
