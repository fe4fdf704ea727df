#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "texdistill/mesh.hpp"

namespace texdistill {

using Rgb = Eigen::Vector3d;

// Multiresolution hash-grid encoding followed by a ReLU MLP with a logistic
// head. Level l has floor(base_resolution * growth_factor^l) cells per axis.
struct HashGridConfig {
  int levels = 8;
  int base_resolution = 16;
  double growth_factor = 1.5;
  int features_per_level = 2;
  int table_size_log2 = 16;
  std::vector<int> mlp_hidden{32, 32};

  void validate() const;  // throws std::invalid_argument
  std::size_t table_size() const { return std::size_t{1} << table_size_log2; }
  int level_resolution(int level) const;
  // A level is dense when all (res + 1)^3 grid vertices fit in the table.
  bool level_is_dense(int level) const;
  std::size_t encoding_width() const { return static_cast<std::size_t>(levels) * features_per_level; }

  bool operator==(const HashGridConfig&) const = default;
};

// XOR of coordinates multiplied by large odd primes, reduced modulo table_size.
std::uint32_t spatial_hash(const std::array<int, 3>& cell, std::uint32_t table_size);
// Row-major (i slowest) index of a vertex in an n^3 grid.
std::uint32_t dense_index(const std::array<int, 3>& cell, int vertices_per_axis);

// Gradient with respect to every field parameter, laid out like
// TextureField::parameters(). Accumulates additively.
struct ParameterGradient {
  std::vector<double> values;

  ParameterGradient() = default;
  explicit ParameterGradient(std::size_t n) : values(n, 0.0) {}

  std::size_t size() const { return values.size(); }
  ParameterGradient& operator+=(const ParameterGradient& other);
  ParameterGradient& operator*=(double s);
  double norm() const;
  bool all_finite() const;
  bool is_zero() const;
};

class TextureField {
 public:
  // Grid features ~ U(-1e-4, 1e-4); dense weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); zero biases.
  TextureField(const HashGridConfig& config, std::uint64_t seed);
  // Wraps an existing parameter vector (checkpoint restore). Size must match.
  TextureField(const HashGridConfig& config, std::vector<double> parameters);

  static std::size_t parameter_count_for(const HashGridConfig& config);

  const HashGridConfig& config() const { return config_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  // Offset of the first MLP parameter; everything before it is grid features.
  std::size_t mlp_offset() const { return mlp_offset_; }
  // Table slot used by `level` for integer grid vertex `vertex`.
  std::uint32_t slot(int level, const std::array<int, 3>& vertex) const;
  // Flat parameter index of feature `f` stored in `slot` of `level`.
  std::size_t feature_index(int level, std::uint32_t slot, int f) const;

  // Points are clamped to [-0.5, 0.5]^3 before lookup.
  std::vector<Rgb> query(std::span<const Vec3> points) const;
  Rgb query(const Vec3& point) const;

  // Concatenated per-level interpolated features (pre-MLP), row per point.
  std::vector<double> encode(std::span<const Vec3> points) const;

  ParameterGradient backward(std::span<const Vec3> points, std::span<const Rgb> d_colors) const;
  void accumulate_gradient(std::span<const Vec3> points, std::span<const Rgb> d_colors,
                           ParameterGradient& grad) const;

  ParameterGradient zero_gradient() const { return ParameterGradient(params_.size()); }

 private:
  struct DenseLayer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;  // out x in, row-major
    std::size_t bias_offset = 0;
  };
  struct Stencil {
    std::array<std::uint32_t, 8> slots;
    std::array<double, 8> weights;
  };

  void build_layout();
  Stencil stencil(int level, const Vec3& point) const;

  HashGridConfig config_;
  std::vector<double> params_;
  std::vector<int> resolutions_;
  std::vector<DenseLayer> layers_;
  std::size_t mlp_offset_ = 0;
};

}  // namespace texdistill
