#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "texdistill/texture_field.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("texdistill-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// |a - b| / max(|a|, |b|, floor)
inline double rel_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline texdistill::HashGridConfig small_grid() {
  texdistill::HashGridConfig c;
  c.levels = 4;
  c.base_resolution = 4;
  c.growth_factor = 2.0;
  c.features_per_level = 2;
  c.table_size_log2 = 10;
  c.mlp_hidden = {16, 16};
  return c;
}

// A field whose output is `color` everywhere: zero features and weights, final
// bias set to the logit of the color.
inline texdistill::TextureField constant_field(const texdistill::Rgb& color,
                                               const texdistill::HashGridConfig& config = small_grid()) {
  std::vector<double> params(texdistill::TextureField::parameter_count_for(config), 0.0);
  for (int c = 0; c < 3; ++c) params[params.size() - 3 + c] = std::log(color[c] / (1.0 - color[c]));
  return texdistill::TextureField(config, std::move(params));
}

// Grid features scaled up so the encoding actually varies across space.
inline texdistill::TextureField lively_field(std::uint64_t seed, const texdistill::HashGridConfig& config = small_grid()) {
  texdistill::TextureField f(config, seed);
  std::mt19937_64 gen(seed * 7919 + 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto p = f.parameters();
  for (std::size_t i = 0; i < f.mlp_offset(); ++i) p[i] = u(gen);
  return f;
}

}  // namespace testing
