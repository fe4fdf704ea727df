#pragma once

#include <cstdint>
#include <vector>

#include "texdistill/mesh.hpp"

namespace texdistill {

// R x R, 8-bit RGB texture. Row 0 is the top of the image (v = 1).
struct TextureImage {
  int resolution = 0;
  std::vector<std::uint8_t> pixels;  // R * R * 3

  TextureImage() = default;
  explicit TextureImage(int r, std::uint8_t fill = 0);

  std::uint8_t* texel(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * resolution + x) * 3]; }
  const std::uint8_t* texel(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * resolution + x) * 3]; }
  bool empty() const { return pixels.empty(); }

  // Nearest texel containing `uv` (clamped to the texture).
  std::pair<int, int> nearest_texel(const Vec2& uv) const;
  bool operator==(const TextureImage&) const = default;
};

// Round-half-away-from-zero quantization of a [0,1] value to 8 bits.
std::uint8_t quantize_unit(double v);

}  // namespace texdistill
