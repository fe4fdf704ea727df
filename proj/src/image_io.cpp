#include "texdistill/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

namespace texdistill {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.string().c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

// rows: height pointers to `row_bytes` each
void write_png_rows(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
                    const std::vector<png_bytep>& rows) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian rows
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Rgb8Image read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  Rgb8Image out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Rgb8Image read_jpeg(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  Rgb8Image out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Rgb8Image& img) {
  if (img.width < 1 || img.height < 1 || img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("write_png: inconsistent image");
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3);
  write_png_rows(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png(const std::filesystem::path& path, const TextureImage& texture) {
  write_png(path, Rgb8Image{texture.resolution, texture.resolution, texture.pixels});
}

void write_png(const std::filesystem::path& path, const Image& rgb) { write_png(path, to_rgb8(rgb)); }

void write_png_gray16(const std::filesystem::path& path, const Image& gray) {
  if (gray.channels != 1 || gray.empty()) throw std::invalid_argument("write_png_gray16: expected H x W x 1");
  std::vector<std::uint16_t> data(gray.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<std::uint16_t>(std::lround(std::clamp(gray.data[i], 0.0, 1.0) * 65535.0));
  std::vector<png_bytep> rows(static_cast<std::size_t>(gray.height));
  for (int y = 0; y < gray.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * gray.width);
  write_png_rows(path, gray.width, gray.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_geometry_maps(const std::filesystem::path& depth_path, const std::filesystem::path& normal_path,
                         const GeometryMaps& maps) {
  write_png_gray16(depth_path, maps.depth);
  Image n = maps.normal;
  for (double& v : n.data) v = 0.5 * (v + 1.0);
  write_png(normal_path, n);
}

Rgb8Image read_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open image " + path.string());
  unsigned char sig[8] = {0};
  is.read(reinterpret_cast<char*>(sig), sizeof(sig));
  if (is.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (is.gcount() >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return read_jpeg(path);
  throw std::runtime_error("unsupported image format (expected PNG or JPEG): " + path.string());
}

TextureImage read_texture_png(const std::filesystem::path& path) {
  Rgb8Image img = read_image(path);
  if (img.width != img.height) throw std::runtime_error("texture must be square: " + path.string());
  TextureImage t(img.width);
  t.pixels = std::move(img.pixels);
  return t;
}

Image to_unit_image(const Rgb8Image& img) {
  Image out(img.height, img.width, 3);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = img.pixels[i] / 255.0;
  return out;
}

Rgb8Image to_rgb8(const Image& rgb) {
  if (rgb.channels != 3 || rgb.empty()) throw std::invalid_argument("expected an H x W x 3 image");
  Rgb8Image out{rgb.width, rgb.height, std::vector<std::uint8_t>(rgb.size())};
  for (std::size_t i = 0; i < rgb.data.size(); ++i) out.pixels[i] = quantize_unit(rgb.data[i]);
  return out;
}

}  // namespace texdistill
