#include "texdistill/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace texdistill {

Image::Image(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
  if (h < 0 || w < 0 || c < 0) throw std::invalid_argument("Image: negative dimension");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " +
                                std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                                std::to_string(b.channels) + ")");
  }
}

Image operator+(const Image& a, const Image& b) {
  Image out = a;
  out += b;
  return out;
}

Image operator-(const Image& a, const Image& b) {
  Image out = a;
  out -= b;
  return out;
}

Image operator*(double s, const Image& a) {
  Image out = a;
  out *= s;
  return out;
}

Image& operator+=(Image& a, const Image& b) {
  require_same_shape(a, b, "Image +=");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

Image& operator-=(Image& a, const Image& b) {
  require_same_shape(a, b, "Image -=");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
  return a;
}

Image& operator*=(Image& a, double s) {
  for (double& v : a.data) v *= s;
  return a;
}

Image axpy(const Image& a, double s, const Image& b) {
  require_same_shape(a, b, "axpy");
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += s * b.data[i];
  return out;
}

double l2_norm(const Image& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  return std::sqrt(acc);
}

double max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

bool all_finite(const Image& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

Image solid_image(int h, int w, std::span<const double> color) {
  Image out(h, w, static_cast<int>(color.size()));
  for (std::size_t p = 0; p < out.pixel_count(); ++p)
    for (std::size_t c = 0; c < color.size(); ++c) out.data[p * color.size() + c] = color[c];
  return out;
}

}  // namespace texdistill
