#include "texdistill/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace texdistill {

namespace {

void require_same_dim(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimensions differ");
}

void require_style(const ConditioningBundle& cond, const DenoiserBackend& backend, const GuidanceWeights& weights) {
  if (weights.lambda_style == 0.0) return;
  if (!cond.style || cond.style->feature.empty())
    throw std::invalid_argument("lambda_style != 0 but no style feature is attached");
  if (!backend.capabilities().supports_style_injection)
    throw std::invalid_argument("backend '" + backend.name() + "' does not support style injection");
}

}  // namespace

double dot(const Embedding& a, const Embedding& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

Embedding odcr(const Embedding& f_g, const Embedding& f_c) {
  require_same_dim(f_g, f_c);
  const double cc = dot(f_c, f_c);
  if (!(cc > 0.0)) throw std::invalid_argument("content embedding has zero norm");
  const double k = dot(f_g, f_c) / cc;
  Embedding out(f_g.size());
  for (std::size_t i = 0; i < f_g.size(); ++i) out[i] = f_g[i] - k * f_c[i];
  return out;
}

Embedding naive_subtraction(const Embedding& f_g, const Embedding& f_c, double strength) {
  require_same_dim(f_g, f_c);
  Embedding out(f_g.size());
  for (std::size_t i = 0; i < f_g.size(); ++i) out[i] = f_g[i] - strength * f_c[i];
  return out;
}

StyleEmbeddings StyleEmbeddings::decompose(Embedding f_g, Embedding f_c) {
  StyleEmbeddings e;
  e.f_s = odcr(f_g, f_c);
  e.f_g = std::move(f_g);
  e.f_c = std::move(f_c);
  return e;
}

void GuidanceWeights::validate() const {
  if (!std::isfinite(lambda_cfg) || !std::isfinite(lambda_style))
    throw std::invalid_argument("guidance weights must be finite");
}

Image cfg_delta(const Image& eps_uncond_t, const Image& eps_uncond_prev, const Image& eps_cond_t,
                const GuidanceWeights& weights) {
  require_same_shape(eps_uncond_t, eps_uncond_prev, "cfg_delta");
  require_same_shape(eps_uncond_t, eps_cond_t, "cfg_delta");
  return axpy(eps_uncond_t - eps_uncond_prev, weights.lambda_cfg, eps_cond_t - eps_uncond_t);
}

Image style_delta(const Image& eps_style_t, const Image& eps_uncond_t, const GuidanceWeights& weights) {
  require_same_shape(eps_style_t, eps_uncond_t, "style_delta");
  return weights.lambda_style * (eps_style_t - eps_uncond_t);
}

DeltaTerms full_delta(const Image& x_t, const Image& x_prev, int t, int t_prev, const ConditioningBundle& cond,
                      const DenoiserBackend& backend, const NoiseSchedule& schedule, const GuidanceWeights& weights) {
  weights.validate();
  require_same_shape(x_t, x_prev, "full_delta states");
  schedule.check_timestep(t);
  schedule.check_timestep(t_prev);
  if (t_prev >= t) throw std::invalid_argument("full_delta requires t_prev < t");
  require_style(cond, backend, weights);

  DeltaTerms d;
  const ConditioningBundle uncond = cond.unconditional();
  d.eps_uncond_t = backend.predict_noise(x_t, t, uncond);
  d.eps_uncond_prev = backend.predict_noise(x_prev, t_prev, uncond);
  d.eps_text_t = backend.predict_noise(x_t, t, cond.with_prompt(cond.text));
  d.eps_negative_t = backend.predict_noise(x_t, t, cond.with_prompt(cond.negative_text));
  d.eps_style_t = backend.predict_noise(x_t, t, cond.style_conditioned());
  for (const Image* e : {&d.eps_uncond_t, &d.eps_uncond_prev, &d.eps_text_t, &d.eps_negative_t, &d.eps_style_t})
    require_same_shape(x_t, *e, "backend output");

  d.interval = d.eps_uncond_t - d.eps_uncond_prev;
  d.cfg = weights.lambda_cfg * (d.eps_text_t - d.eps_negative_t);
  d.style = style_delta(d.eps_style_t, d.eps_uncond_t, weights);
  d.total = d.interval + d.cfg + d.style;
  return d;
}

SdsTerms sds_terms(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                   const DenoiserBackend& backend, const NoiseSchedule& schedule) {
  SdsTerms s;
  s.x_t = add_noise(x0, t, eps, schedule);
  s.eps_hat = backend.predict_noise(s.x_t, t, cond.with_prompt(cond.text));
  require_same_shape(x0, s.eps_hat, "backend output");
  s.direction = s.eps_hat - eps;
  s.weighted = schedule.omega(t) * s.direction;
  s.pseudo_gt_form = (schedule.omega(t) / schedule.gamma(t)) * (x0 - pseudo_gt(s.x_t, t, s.eps_hat, schedule));
  return s;
}

Image sds_direction(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                    const DenoiserBackend& backend, const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "sds_direction");
  schedule.check_timestep(t);
  const Image x_t = add_noise(x0, t, eps, schedule);
  return backend.predict_noise(x_t, t, cond.with_prompt(cond.text)) - eps;
}

DeltaTerms sds_full_delta(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                          const DenoiserBackend& backend, const NoiseSchedule& schedule,
                          const GuidanceWeights& weights) {
  weights.validate();
  require_same_shape(x0, eps, "sds_full_delta");
  schedule.check_timestep(t);
  require_style(cond, backend, weights);

  DeltaTerms d;
  const Image x_t = add_noise(x0, t, eps, schedule);
  d.eps_uncond_t = backend.predict_noise(x_t, t, cond.unconditional());
  d.eps_uncond_prev = eps;
  d.eps_text_t = backend.predict_noise(x_t, t, cond.with_prompt(cond.text));
  d.eps_negative_t = backend.predict_noise(x_t, t, cond.with_prompt(cond.negative_text));
  d.eps_style_t = backend.predict_noise(x_t, t, cond.style_conditioned());

  d.interval = d.eps_uncond_t - eps;
  d.cfg = weights.lambda_cfg * (d.eps_text_t - d.eps_negative_t);
  d.style = style_delta(d.eps_style_t, d.eps_uncond_t, weights);
  d.total = d.interval + d.cfg + d.style;
  return d;
}

Image ism_direction(const Trajectory& trajectory, const ConditioningBundle& cond, const DenoiserBackend& backend,
                    const NoiseSchedule& schedule) {
  if (trajectory.size() < 2 || trajectory.timesteps.size() != trajectory.size())
    throw std::invalid_argument("ism_direction needs a trajectory with at least two states");
  const std::size_t n = trajectory.size();
  schedule.check_timestep(trajectory.timesteps[n - 1]);
  const Image head = backend.predict_noise(trajectory.states[n - 1], trajectory.timesteps[n - 1],
                                           cond.with_prompt(cond.text));
  const Image prev =
      backend.predict_noise(trajectory.states[n - 2], trajectory.timesteps[n - 2], cond.unconditional());
  return head - prev;
}

}  // namespace texdistill
