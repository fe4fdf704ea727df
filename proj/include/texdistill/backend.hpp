#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "texdistill/image.hpp"
#include "texdistill/layers.hpp"
#include "texdistill/render.hpp"
#include "texdistill/schedule.hpp"

namespace texdistill {

struct StyleCondition {
  std::vector<double> feature;  // decoupled style feature
  InjectionLayerSet layers;
};

// Conditioning passed to a single noise prediction. Any member may be absent;
// absence means unconditional along that axis.
struct ConditioningBundle {
  std::optional<std::string> text;           // y
  std::optional<std::string> negative_text;  // y_ref
  std::optional<StyleCondition> style;
  std::optional<GeometryMaps> geometry;

  // Derived bundles for the individual guidance evaluations. Geometry is
  // carried into every one of them.
  ConditioningBundle unconditional() const;
  ConditioningBundle with_prompt(const std::optional<std::string>& prompt) const;
  ConditioningBundle style_conditioned() const;
};

struct BackendCapabilities {
  bool supports_style_injection = false;
  bool supports_geometry = false;
  // Reserved for a latent-space path (encoder/decoder around the denoiser).
  bool has_latent_codec = false;
};

// Abstract eps predictor. Implementations must be deterministic in
// (x_t, t, cond), shape-preserving, and safe for concurrent const calls.
class DenoiserBackend {
 public:
  virtual ~DenoiserBackend() = default;
  virtual Image predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const = 0;
  virtual BackendCapabilities capabilities() const = 0;
  virtual std::string name() const = 0;
};

// Exact optimal predictor for data distributed as N(mu, sigma^2 I):
//   eps_hat(x_t, t) = sqrt(1 - abar) (x_t - sqrt(abar) mu) / (1 - abar + abar sigma^2).
// The text condition selects a registered (mean, sigma); unregistered or
// absent prompts use the base distribution. A style condition with a
// non-empty layer set shifts the selected mean by style_map * feature
// (per channel, broadcast over pixels); the layer set acts as on/off only.
// A 1x1xC mean broadcasts over any image size.
class AnalyticGaussianBackend final : public DenoiserBackend {
 public:
  AnalyticGaussianBackend(Image mean, double sigma, NoiseSchedule schedule);

  void register_prompt(const std::string& prompt, Image mean, std::optional<double> sigma = std::nullopt);
  void set_style_map(Eigen::MatrixXd map);  // channels x feature dimension

  Image predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const override;
  BackendCapabilities capabilities() const override { return {true, false, false}; }
  std::string name() const override { return "analytic"; }

  // Mean image (broadcast to h x w) and sigma the oracle uses for `cond`.
  Image mean_for(const ConditioningBundle& cond, int h, int w) const;
  double sigma_for(const ConditioningBundle& cond) const;
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  struct Entry {
    Image mean;
    double sigma;
  };
  const Entry& entry_for(const ConditioningBundle& cond) const;

  Entry base_;
  std::map<std::string, Entry> prompts_;
  std::optional<Eigen::MatrixXd> style_map_;
  NoiseSchedule schedule_;
};

std::unique_ptr<AnalyticGaussianBackend> make_analytic_oracle(Image mean, double sigma, NoiseSchedule schedule);

// Forwards to another backend and counts predict_noise calls.
class CallCountingBackend final : public DenoiserBackend {
 public:
  explicit CallCountingBackend(const DenoiserBackend& inner) : inner_(inner) {}
  Image predict_noise(const Image& x_t, int t, const ConditioningBundle& cond) const override {
    ++calls_;
    return inner_.predict_noise(x_t, t, cond);
  }
  BackendCapabilities capabilities() const override { return inner_.capabilities(); }
  std::string name() const override { return inner_.name(); }
  long calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const DenoiserBackend& inner_;
  mutable std::atomic<long> calls_{0};
};

// Name-keyed construction: "analytic" (options documented in
// docs/backend_adapter.md) and "external-diffusion" (HTTP adapter).
std::unique_ptr<DenoiserBackend> create_backend(const std::string& name, const nlohmann::json& options,
                                                const NoiseSchedule& schedule);
std::vector<std::string> registered_backends();

}  // namespace texdistill
