#pragma once

#include <vector>

#include "texdistill/backend.hpp"
#include "texdistill/ddim.hpp"
#include "texdistill/image.hpp"
#include "texdistill/schedule.hpp"

namespace texdistill {

using Embedding = std::vector<double>;

// Removes the component of f_g along f_c:
//   f_s = f_g - (<f_g, f_c> / |f_c|^2) f_c
// Throws std::invalid_argument on a dimension mismatch or |f_c| == 0.
Embedding odcr(const Embedding& f_g, const Embedding& f_c);

// f_g - strength * f_c. Ablation baseline; not orthogonal to f_c in general.
Embedding naive_subtraction(const Embedding& f_g, const Embedding& f_c, double strength);

double dot(const Embedding& a, const Embedding& b);
double norm(const Embedding& a);

struct StyleEmbeddings {
  Embedding f_g;  // reference image embedding
  Embedding f_c;  // content text embedding
  Embedding f_s;  // decoupled style feature

  static StyleEmbeddings decompose(Embedding f_g, Embedding f_c);
};

struct GuidanceWeights {
  double lambda_cfg = 7.5;
  double lambda_style = 7.5;

  void validate() const;  // throws unless both are finite
  bool operator==(const GuidanceWeights&) const = default;
};

// (eps_uncond_t - eps_uncond_prev) + lambda_cfg (eps_cond_t - eps_uncond_t)
Image cfg_delta(const Image& eps_uncond_t, const Image& eps_uncond_prev, const Image& eps_cond_t,
                const GuidanceWeights& weights);

// lambda_style (eps_style_t - eps_uncond_t)
Image style_delta(const Image& eps_style_t, const Image& eps_uncond_t, const GuidanceWeights& weights);

struct DeltaTerms {
  // Raw predictions, in call order.
  Image eps_uncond_t;
  Image eps_uncond_prev;
  Image eps_text_t;      // y
  Image eps_negative_t;  // y_ref
  Image eps_style_t;     // y + style feature (+ y_ref)

  Image interval;  // eps_uncond_t - eps_uncond_prev
  Image cfg;       // lambda_cfg (eps_text_t - eps_negative_t)
  Image style;     // lambda_style (eps_style_t - eps_uncond_t)
  Image total;
};

// Style-guided interval delta between x_t (at t) and x_prev (at t_prev < t):
//   eps(x_t;t) - eps(x_prev;t_prev) + lambda_cfg (eps(x_t;t,y) - eps(x_t;t,y_ref))
//     + lambda_style (eps_style(x_t;t,y,I_ref,y_ref) - eps(x_t;t))
// Exactly five backend calls. Geometry in `cond` is passed to every call.
// Throws std::invalid_argument when lambda_style != 0 and cond has no style
// feature, or the backend cannot take one.
DeltaTerms full_delta(const Image& x_t, const Image& x_prev, int t, int t_prev, const ConditioningBundle& cond,
                      const DenoiserBackend& backend, const NoiseSchedule& schedule, const GuidanceWeights& weights);

struct SdsTerms {
  Image x_t;
  Image eps_hat;          // eps(x_t; t, y)
  Image direction;        // eps_hat - eps
  Image weighted;         // omega(t) (eps_hat - eps)
  Image pseudo_gt_form;   // (omega(t) / gamma(t)) (x0 - x0_hat)
};

// Noises x0 with eps at t and evaluates the text-conditioned prediction.
SdsTerms sds_terms(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                   const DenoiserBackend& backend, const NoiseSchedule& schedule);

// eps(x_t; t, y) - eps
Image sds_direction(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                    const DenoiserBackend& backend, const NoiseSchedule& schedule);

// The full_delta composition with the interval term replaced by
// eps(x_t;t) - eps, for x_t = add_noise(x0, t, eps). Four backend calls;
// eps_uncond_prev holds eps.
DeltaTerms sds_full_delta(const Image& x0, int t, const Image& eps, const ConditioningBundle& cond,
                          const DenoiserBackend& backend, const NoiseSchedule& schedule,
                          const GuidanceWeights& weights);

// eps(head; t_head, y) - eps(previous state; t_prev), unconditional at the
// previous state. Needs at least two states.
Image ism_direction(const Trajectory& trajectory, const ConditioningBundle& cond, const DenoiserBackend& backend,
                    const NoiseSchedule& schedule);

}  // namespace texdistill
