#include "texdistill/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace texdistill {

Adam::Adam(std::size_t parameter_count, AdamParams params)
    : params_(params), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(params_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(params_.beta1 >= 0.0 && params_.beta1 < 1.0 && params_.beta2 >= 0.0 && params_.beta2 < 1.0))
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
}

void Adam::step(std::span<double> parameters, std::span<const double> gradient) {
  if (parameters.size() != m_.size() || gradient.size() != m_.size())
    throw std::invalid_argument("adam: parameter/gradient size mismatch");
  ++t_;
  const double b1 = params_.beta1, b2 = params_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = params_.learning_rate;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = gradient[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    if (m_[i] == 0.0) continue;
    parameters[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + params_.epsilon);
  }
}

void Adam::skip_step() {
  ++t_;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] *= params_.beta1;
    v_[i] *= params_.beta2;
  }
}

void Adam::restore(std::int64_t steps, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("adam: restored state size mismatch");
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace texdistill
