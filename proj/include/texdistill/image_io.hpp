#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "texdistill/image.hpp"
#include "texdistill/render.hpp"
#include "texdistill/texture_image.hpp"

namespace texdistill {

struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // H * W * 3
};

// 8-bit RGB PNG, no timestamp or text chunks (bit-stable output).
void write_png(const std::filesystem::path& path, const Rgb8Image& img);
void write_png(const std::filesystem::path& path, const TextureImage& texture);
// Quantizes an H x W x 3 image in [0, 1].
void write_png(const std::filesystem::path& path, const Image& rgb);
// 16-bit grayscale of an H x W x 1 image in [0, 1].
void write_png_gray16(const std::filesystem::path& path, const Image& gray);
// Depth as 16-bit gray; normals mapped from [-1, 1] to [0, 1] as 8-bit RGB.
void write_geometry_maps(const std::filesystem::path& depth_path, const std::filesystem::path& normal_path,
                         const GeometryMaps& maps);

// PNG or JPEG, detected from the file signature. Gray, palette, alpha and
// 16-bit inputs are converted to 8-bit RGB. Throws std::runtime_error.
Rgb8Image read_image(const std::filesystem::path& path);
TextureImage read_texture_png(const std::filesystem::path& path);  // must be square

Image to_unit_image(const Rgb8Image& img);
Rgb8Image to_rgb8(const Image& rgb);

}  // namespace texdistill
