#include "texdistill/texture_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "texdistill/rng.hpp"

namespace texdistill {

void HashGridConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("hash grid: levels must be >= 1");
  if (features_per_level < 1) throw std::invalid_argument("hash grid: features_per_level must be >= 1");
  if (!(growth_factor > 1.0)) throw std::invalid_argument("hash grid: growth_factor must be > 1");
  if (base_resolution < 1) throw std::invalid_argument("hash grid: base_resolution must be >= 1");
  if (table_size_log2 < 1 || table_size_log2 > 30) throw std::invalid_argument("hash grid: table_size_log2 must be in [1, 30]");
  for (int h : mlp_hidden)
    if (h < 1) throw std::invalid_argument("hash grid: hidden widths must be >= 1");
  for (int l = 0; l < levels; ++l)
    if (level_resolution(l) > (1 << 20)) throw std::invalid_argument("hash grid: level resolution overflow");
}

int HashGridConfig::level_resolution(int level) const {
  return static_cast<int>(std::floor(base_resolution * std::pow(growth_factor, level)));
}

bool HashGridConfig::level_is_dense(int level) const {
  const double n = level_resolution(level) + 1.0;
  return n * n * n <= static_cast<double>(table_size());
}

std::uint32_t spatial_hash(const std::array<int, 3>& cell, std::uint32_t table_size) {
  constexpr std::uint32_t kPrimes[3] = {2654435761u, 805459861u, 3674653429u};
  std::uint32_t h = 0;
  for (int d = 0; d < 3; ++d) h ^= static_cast<std::uint32_t>(cell[d]) * kPrimes[d];
  return h % table_size;
}

std::uint32_t dense_index(const std::array<int, 3>& cell, int vertices_per_axis) {
  const auto n = static_cast<std::uint32_t>(vertices_per_axis);
  return (static_cast<std::uint32_t>(cell[0]) * n + static_cast<std::uint32_t>(cell[1])) * n +
         static_cast<std::uint32_t>(cell[2]);
}

ParameterGradient& ParameterGradient::operator+=(const ParameterGradient& other) {
  if (other.size() != size()) throw std::invalid_argument("ParameterGradient: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

ParameterGradient& ParameterGradient::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}

double ParameterGradient::norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

bool ParameterGradient::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool ParameterGradient::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::size_t TextureField::parameter_count_for(const HashGridConfig& config) {
  std::size_t n = static_cast<std::size_t>(config.levels) * config.table_size() * config.features_per_level;
  int in = static_cast<int>(config.encoding_width());
  for (int h : config.mlp_hidden) {
    n += static_cast<std::size_t>(in) * h + h;
    in = h;
  }
  return n + static_cast<std::size_t>(in) * 3 + 3;
}

TextureField::TextureField(const HashGridConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  build_layout();
  params_.assign(parameter_count_for(config_), 0.0);
  Rng rng = make_rng(seed, 0x7e47u);
  for (std::size_t i = 0; i < mlp_offset_; ++i) params_[i] = uniform(rng, -1e-4, 1e-4);
  for (const DenseLayer& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t i = 0; i < static_cast<std::size_t>(layer.in) * layer.out; ++i)
      params_[layer.weight_offset + i] = uniform(rng, -bound, bound);
  }
}

TextureField::TextureField(const HashGridConfig& config, std::vector<double> parameters)
    : config_(config), params_(std::move(parameters)) {
  config_.validate();
  build_layout();
  if (params_.size() != parameter_count_for(config_))
    throw std::invalid_argument("texture field: parameter count " + std::to_string(params_.size()) +
                                " does not match config (" + std::to_string(parameter_count_for(config_)) + ")");
}

void TextureField::build_layout() {
  resolutions_.clear();
  for (int l = 0; l < config_.levels; ++l) resolutions_.push_back(config_.level_resolution(l));
  mlp_offset_ = static_cast<std::size_t>(config_.levels) * config_.table_size() * config_.features_per_level;
  layers_.clear();
  std::size_t offset = mlp_offset_;
  int in = static_cast<int>(config_.encoding_width());
  std::vector<int> widths = config_.mlp_hidden;
  widths.push_back(3);
  for (int out : widths) {
    DenseLayer layer{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = layer.bias_offset + out;
    layers_.push_back(layer);
    in = out;
  }
}

std::uint32_t TextureField::slot(int level, const std::array<int, 3>& vertex) const {
  if (config_.level_is_dense(level)) return dense_index(vertex, resolutions_[level] + 1);
  return spatial_hash(vertex, static_cast<std::uint32_t>(config_.table_size()));
}

std::size_t TextureField::feature_index(int level, std::uint32_t slot, int f) const {
  return (static_cast<std::size_t>(level) * config_.table_size() + slot) * config_.features_per_level + f;
}

TextureField::Stencil TextureField::stencil(int level, const Vec3& point) const {
  const int res = resolutions_[level];
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int d = 0; d < 3; ++d) {
    const double u = std::clamp(point[d] + 0.5, 0.0, 1.0) * res;
    const int i = std::min(static_cast<int>(std::floor(u)), res - 1);
    base[d] = i;
    frac[d] = u - i;
  }
  Stencil s{};
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    s.slots[c] = slot(level, {base[0] + dx, base[1] + dy, base[2] + dz});
    s.weights[c] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) * (dz ? frac[2] : 1.0 - frac[2]);
  }
  return s;
}

std::vector<double> TextureField::encode(std::span<const Vec3> points) const {
  const int F = config_.features_per_level;
  const std::size_t width = config_.encoding_width();
  std::vector<double> out(points.size() * width, 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int l = 0; l < config_.levels; ++l) {
      const Stencil s = stencil(l, points[p]);
      for (int c = 0; c < 8; ++c)
        for (int f = 0; f < F; ++f) out[p * width + l * F + f] += s.weights[c] * params_[feature_index(l, s.slots[c], f)];
    }
  }
  return out;
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<Rgb> TextureField::query(std::span<const Vec3> points) const {
  std::vector<Rgb> out;
  out.reserve(points.size());
  const std::vector<double> features = encode(points);
  const std::size_t width = config_.encoding_width();
  std::vector<double> a, z;
  for (std::size_t p = 0; p < points.size(); ++p) {
    a.assign(features.begin() + p * width, features.begin() + (p + 1) * width);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const DenseLayer& L = layers_[li];
      z.assign(L.out, 0.0);
      for (int o = 0; o < L.out; ++o) {
        double acc = params_[L.bias_offset + o];
        const double* w = &params_[L.weight_offset + static_cast<std::size_t>(o) * L.in];
        for (int i = 0; i < L.in; ++i) acc += w[i] * a[i];
        z[o] = li + 1 < layers_.size() ? std::max(acc, 0.0) : logistic(acc);
      }
      a.swap(z);
    }
    out.emplace_back(a[0], a[1], a[2]);
  }
  return out;
}

Rgb TextureField::query(const Vec3& point) const { return query(std::span<const Vec3>(&point, 1)).front(); }

ParameterGradient TextureField::backward(std::span<const Vec3> points, std::span<const Rgb> d_colors) const {
  ParameterGradient grad = zero_gradient();
  accumulate_gradient(points, d_colors, grad);
  return grad;
}

void TextureField::accumulate_gradient(std::span<const Vec3> points, std::span<const Rgb> d_colors,
                                       ParameterGradient& grad) const {
  if (points.size() != d_colors.size()) throw std::invalid_argument("texture field backward: points/d_colors size mismatch");
  if (grad.size() != params_.size()) throw std::invalid_argument("texture field backward: gradient not congruent with field");
  const int F = config_.features_per_level;
  const std::size_t width = config_.encoding_width();
  const std::size_t n_layers = layers_.size();
  std::vector<std::vector<double>> acts(n_layers + 1);  // acts[0] = encoding, acts[k] = output of layer k-1
  std::vector<Stencil> stencils(config_.levels);
  std::vector<double> delta, prev_delta;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Rgb& dc = d_colors[p];
    if (dc.isZero(0.0)) continue;
    acts[0].assign(width, 0.0);
    for (int l = 0; l < config_.levels; ++l) {
      stencils[l] = stencil(l, points[p]);
      for (int c = 0; c < 8; ++c)
        for (int f = 0; f < F; ++f)
          acts[0][l * F + f] += stencils[l].weights[c] * params_[feature_index(l, stencils[l].slots[c], f)];
    }
    for (std::size_t li = 0; li < n_layers; ++li) {
      const DenseLayer& L = layers_[li];
      acts[li + 1].assign(L.out, 0.0);
      for (int o = 0; o < L.out; ++o) {
        double acc = params_[L.bias_offset + o];
        const double* w = &params_[L.weight_offset + static_cast<std::size_t>(o) * L.in];
        for (int i = 0; i < L.in; ++i) acc += w[i] * acts[li][i];
        acts[li + 1][o] = li + 1 < n_layers ? std::max(acc, 0.0) : logistic(acc);
      }
    }
    // d(loss)/d(pre-activation) of the output layer.
    delta.assign(3, 0.0);
    for (int o = 0; o < 3; ++o) {
      const double s = acts[n_layers][o];
      delta[o] = dc[o] * s * (1.0 - s);
    }
    for (std::size_t li = n_layers; li-- > 0;) {
      const DenseLayer& L = layers_[li];
      const std::vector<double>& in = acts[li];
      prev_delta.assign(L.in, 0.0);
      for (int o = 0; o < L.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        grad.values[L.bias_offset + o] += d;
        double* gw = &grad.values[L.weight_offset + static_cast<std::size_t>(o) * L.in];
        const double* w = &params_[L.weight_offset + static_cast<std::size_t>(o) * L.in];
        for (int i = 0; i < L.in; ++i) {
          gw[i] += d * in[i];
          prev_delta[i] += d * w[i];
        }
      }
      if (li > 0)
        for (int i = 0; i < L.in; ++i)
          if (in[i] <= 0.0) prev_delta[i] = 0.0;  // ReLU
      delta.swap(prev_delta);
    }
    for (int l = 0; l < config_.levels; ++l)
      for (int c = 0; c < 8; ++c)
        for (int f = 0; f < F; ++f)
          grad.values[feature_index(l, stencils[l].slots[c], f)] += stencils[l].weights[c] * delta[l * F + f];
  }
}

}  // namespace texdistill
