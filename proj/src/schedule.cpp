#include "texdistill/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace texdistill {

std::string to_string(BetaKind kind) { return kind == BetaKind::kLinear ? "linear" : "scaled-linear"; }

BetaKind beta_kind_from_string(const std::string& s) {
  if (s == "linear") return BetaKind::kLinear;
  if (s == "scaled-linear") return BetaKind::kScaledLinear;
  throw std::invalid_argument("unknown beta schedule kind '" + s + "'");
}

NoiseSchedule NoiseSchedule::make(int T, double beta_start, double beta_end, BetaKind kind) {
  if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end) || (T > 1 && beta_start == beta_end))
    throw std::invalid_argument("schedule: require 0 < beta_start < beta_end < 1");
  NoiseSchedule s;
  s.betas_.resize(T);
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    if (kind == BetaKind::kLinear) {
      s.betas_[i] = beta_start + frac * (beta_end - beta_start);
    } else {
      const double r = std::sqrt(beta_start) + frac * (std::sqrt(beta_end) - std::sqrt(beta_start));
      s.betas_[i] = r * r;
    }
  }
  s.alpha_bar_.resize(T + 1);
  s.alpha_bar_[0] = 1.0;
  for (int t = 1; t <= T; ++t) s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.betas_[t - 1]);
  return s;
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 0 || t > steps())
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("beta: timestep outside [1, T]");
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_timestep(t);
  return alpha_bar_[t];
}

double NoiseSchedule::gamma(int t) const {
  const double a = alpha_bar(t);
  return std::sqrt(1.0 - a) / std::sqrt(a);
}

double NoiseSchedule::omega(int t) const { return 1.0 - alpha_bar(t); }

Image add_noise(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "add_noise");
  const double a = schedule.alpha_bar(t);
  Image out = x0;
  const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = sa * x0.data[i] + sn * eps.data[i];
  return out;
}

Image pseudo_gt(const Image& x_t, int t, const Image& eps_hat, const NoiseSchedule& schedule) {
  require_same_shape(x_t, eps_hat, "pseudo_gt");
  const double a = schedule.alpha_bar(t);
  const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
  Image out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (x_t.data[i] - sn * eps_hat.data[i]) / sa;
  return out;
}

}  // namespace texdistill
