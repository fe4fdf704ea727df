#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace texdistill {

// Dense H x W x C tensor of doubles in row-major HWC order. Used both for
// rendered images and for diffusion-space tensors (x_t, noise predictions).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  bool empty() const { return data.empty(); }

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
};

// Throws std::invalid_argument naming `what` if shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image operator*(double s, const Image& a);
Image& operator+=(Image& a, const Image& b);
Image& operator-=(Image& a, const Image& b);
Image& operator*=(Image& a, double s);

// a + s * b
Image axpy(const Image& a, double s, const Image& b);

double l2_norm(const Image& a);
double max_abs_diff(const Image& a, const Image& b);
bool all_finite(const Image& a);

// Broadcast a per-channel constant to an h x w image.
Image solid_image(int h, int w, std::span<const double> color);

}  // namespace texdistill
