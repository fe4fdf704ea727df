#include "texdistill/backend.hpp"

#include <cmath>
#include <stdexcept>

namespace texdistill {

ConditioningBundle ConditioningBundle::unconditional() const {
  ConditioningBundle c;
  c.geometry = geometry;
  return c;
}

ConditioningBundle ConditioningBundle::with_prompt(const std::optional<std::string>& prompt) const {
  ConditioningBundle c;
  c.text = prompt;
  c.geometry = geometry;
  return c;
}

ConditioningBundle ConditioningBundle::style_conditioned() const {
  ConditioningBundle c;
  c.text = text;
  c.negative_text = negative_text;
  c.style = style;
  c.geometry = geometry;
  return c;
}

namespace {

void check_mean(const Image& mean, double sigma) {
  if (mean.empty() || mean.channels <= 0) throw std::invalid_argument("oracle mean must be a non-empty image");
  if (!all_finite(mean)) throw std::invalid_argument("oracle mean must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("oracle sigma must be finite and >= 0");
}

bool broadcasts(const Image& mean) { return mean.height == 1 && mean.width == 1; }

}  // namespace

AnalyticGaussianBackend::AnalyticGaussianBackend(Image mean, double sigma, NoiseSchedule schedule)
    : schedule_(std::move(schedule)) {
  check_mean(mean, sigma);
  base_ = {std::move(mean), sigma};
}

void AnalyticGaussianBackend::register_prompt(const std::string& prompt, Image mean, std::optional<double> sigma) {
  const double s = sigma.value_or(base_.sigma);
  check_mean(mean, s);
  if (mean.channels != base_.mean.channels) throw std::invalid_argument("prompt mean channel count differs from base");
  prompts_[prompt] = {std::move(mean), s};
}

void AnalyticGaussianBackend::set_style_map(Eigen::MatrixXd map) {
  if (map.rows() != base_.mean.channels) throw std::invalid_argument("style map must have one row per channel");
  if (!map.allFinite()) throw std::invalid_argument("style map must be finite");
  style_map_ = std::move(map);
}

const AnalyticGaussianBackend::Entry& AnalyticGaussianBackend::entry_for(const ConditioningBundle& cond) const {
  if (cond.text) {
    auto it = prompts_.find(*cond.text);
    if (it != prompts_.end()) return it->second;
  }
  return base_;
}

double AnalyticGaussianBackend::sigma_for(const ConditioningBundle& cond) const { return entry_for(cond).sigma; }

Image AnalyticGaussianBackend::mean_for(const ConditioningBundle& cond, int h, int w) const {
  const Entry& e = entry_for(cond);
  const int c = e.mean.channels;
  Image out;
  if (broadcasts(e.mean)) {
    out = solid_image(h, w, std::span<const double>(e.mean.data.data(), c));
  } else {
    if (e.mean.height != h || e.mean.width != w)
      throw std::invalid_argument("oracle mean shape does not match input");
    out = e.mean;
  }
  if (cond.style && !cond.style->layers.empty() && style_map_) {
    const auto& f = cond.style->feature;
    if (static_cast<Eigen::Index>(f.size()) != style_map_->cols())
      throw std::invalid_argument("style feature dimension does not match style map");
    const Eigen::VectorXd shift = *style_map_ * Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    for (std::size_t p = 0; p < out.pixel_count(); ++p)
      for (int k = 0; k < c; ++k) out.data[p * c + k] += shift[k];
  }
  return out;
}

Image AnalyticGaussianBackend::predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const {
  schedule_.check_timestep(t);
  if (x_t.channels != base_.mean.channels) throw std::invalid_argument("input channel count does not match oracle");
  const Image mu = mean_for(cond, x_t.height, x_t.width);
  const double sigma = sigma_for(cond);
  const double ab = schedule_.alpha_bar(t);
  const double denom = (1.0 - ab) + ab * sigma * sigma;
  Image eps(x_t.height, x_t.width, x_t.channels, 0.0);
  if (denom <= 0.0) return eps;
  const double num = std::sqrt(1.0 - ab);
  const double sab = std::sqrt(ab);
  for (std::size_t i = 0; i < eps.data.size(); ++i) eps.data[i] = num * (x_t.data[i] - sab * mu.data[i]) / denom;
  return eps;
}

std::unique_ptr<AnalyticGaussianBackend> make_analytic_oracle(Image mean, double sigma, NoiseSchedule schedule) {
  return std::make_unique<AnalyticGaussianBackend>(std::move(mean), sigma, std::move(schedule));
}

}  // namespace texdistill
