#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace texdistill {

struct AdamParams {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order adaptive-moment optimizer with bias correction.
class Adam {
 public:
  Adam(std::size_t parameter_count, AdamParams params);

  void step(std::span<double> parameters, std::span<const double> gradient);
  // Zero-gradient bookkeeping: decays the moments and advances the step
  // counter without moving parameters.
  void skip_step();

  const AdamParams& params() const { return params_; }
  std::int64_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::int64_t steps, std::vector<double> m, std::vector<double> v);

 private:
  AdamParams params_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace texdistill
