#include "texdistill/baking.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

#include "texdistill/image_io.hpp"

namespace texdistill {

std::size_t CoverageMask::count() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), std::uint8_t{1}));
}

namespace {

void check_uv_output(const Mesh& in, const Mesh& out) {
  if (out.vertices.size() != in.vertices.size() || out.faces != in.faces)
    throw std::runtime_error("atlas hook changed the mesh topology");
  for (std::size_t i = 0; i < in.vertices.size(); ++i)
    if ((out.vertices[i] - in.vertices[i]).cwiseAbs().maxCoeff() > 1e-9)
      throw std::runtime_error("atlas hook moved vertices");
  if (out.corner_uvs.size() != 3 * in.faces.size()) throw std::runtime_error("atlas hook produced no per-corner UVs");
  for (const Vec2& uv : out.corner_uvs)
    if (!(uv.x() >= 0.0 && uv.x() <= 1.0 && uv.y() >= 0.0 && uv.y() <= 1.0))
      throw std::runtime_error("atlas hook produced UVs outside [0, 1]");
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

// Edge function form of the barycentric coordinates of p in (a, b, c).
bool barycentric_2d(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, Vec3& out) {
  const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
  if (area == 0.0) return false;
  const double w0 = ((b - p).x() * (c - p).y() - (b - p).y() * (c - p).x()) / area;
  const double w1 = ((c - p).x() * (a - p).y() - (c - p).y() * (a - p).x()) / area;
  out = Vec3(w0, w1, 1.0 - w0 - w1);
  return true;
}

}  // namespace

Mesh ensure_uv(const Mesh& mesh, const AtlasHook& hook) {
  mesh.validate();
  if (mesh.has_uv()) return mesh;
  if (!hook) throw std::invalid_argument("mesh has no UVs and no atlas hook is configured");
  Mesh out = hook(mesh);
  check_uv_output(mesh, out);
  return out;
}

AtlasHook triangle_packing_atlas(int resolution, int gutter_texels) {
  if (resolution < 1 || gutter_texels < 0) throw std::invalid_argument("invalid atlas packing parameters");
  return [resolution, gutter_texels](const Mesh& mesh) {
    Mesh out = mesh;
    const std::size_t n = mesh.faces.size();
    const int cells = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
    const double cell = 1.0 / cells;
    const double g = static_cast<double>(gutter_texels) / resolution;
    if (cell <= 2.0 * g + 1.0 / resolution)
      throw std::runtime_error("too many faces for the atlas resolution; raise the resolution");
    out.corner_uvs.resize(3 * n);
    for (std::size_t f = 0; f < n; ++f) {
      const double x0 = static_cast<double>(f % cells) * cell;
      const double y0 = static_cast<double>(f / cells) * cell;
      out.corner_uvs[3 * f + 0] = Vec2(x0 + g, y0 + g);
      out.corner_uvs[3 * f + 1] = Vec2(x0 + cell - g, y0 + g);
      out.corner_uvs[3 * f + 2] = Vec2(x0 + g, y0 + cell - g);
    }
    return out;
  };
}

AtlasHook subprocess_atlas(const std::string& command) {
  if (command.empty()) throw std::invalid_argument("atlas command must not be empty");
  return [command](const Mesh& mesh) {
    static std::atomic<unsigned> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("texdistill-atlas-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    const auto in = dir / "in.obj";
    const auto out = dir / "out.obj";
    save_obj(mesh, in);
    const std::string cmd = command + " " + shell_quote(in.string()) + " " + shell_quote(out.string());
    const int rc = std::system(cmd.c_str());
    Mesh result;
    try {
      if (rc != 0) throw std::runtime_error("atlas command failed with status " + std::to_string(rc) + ": " + cmd);
      std::ifstream is(out);
      if (!is) throw std::runtime_error("atlas command produced no output file: " + out.string());
      result = parse_obj(is);
    } catch (...) {
      std::filesystem::remove_all(dir);
      throw;
    }
    std::filesystem::remove_all(dir);
    return result;
  };
}

BakeResult bake(const TextureField& field, const Mesh& mesh, int resolution) {
  if (!mesh.has_uv()) throw std::invalid_argument("bake: mesh has no UVs");
  mesh.validate();
  const int R = resolution;
  BakeResult result{TextureImage(R), CoverageMask(R)};
  std::vector<Vec3> position(static_cast<std::size_t>(R) * R, Vec3::Zero());

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    std::array<Vec2, 3> p;
    for (int k = 0; k < 3; ++k) p[k] = Vec2(mesh.uv(f, k).x() * R, (1.0 - mesh.uv(f, k).y()) * R);
    const double minx = std::min({p[0].x(), p[1].x(), p[2].x()});
    const double maxx = std::max({p[0].x(), p[1].x(), p[2].x()});
    const double miny = std::min({p[0].y(), p[1].y(), p[2].y()});
    const double maxy = std::max({p[0].y(), p[1].y(), p[2].y()});
    const int x_lo = std::max(0, static_cast<int>(std::floor(minx - 0.5)));
    const int x_hi = std::min(R - 1, static_cast<int>(std::ceil(maxx - 0.5)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(miny - 0.5)));
    const int y_hi = std::min(R - 1, static_cast<int>(std::ceil(maxy - 0.5)));
    const Face& face = mesh.faces[f];
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        Vec3 b;
        if (!barycentric_2d(p[0], p[1], p[2], Vec2(x + 0.5, y + 0.5), b)) continue;
        if (b.minCoeff() < 0.0) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * R + x;
        result.mask.covered[idx] = 1;
        position[idx] = b[0] * mesh.vertices[face[0]] + b[1] * mesh.vertices[face[1]] + b[2] * mesh.vertices[face[2]];
      }
    }
  }

  std::vector<std::size_t> texels;
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < position.size(); ++i) {
    if (!result.mask.covered[i]) continue;
    texels.push_back(i);
    points.push_back(position[i]);
  }
  const std::vector<Rgb> colors = field.query(points);
  for (std::size_t k = 0; k < texels.size(); ++k)
    for (int c = 0; c < 3; ++c) result.texture.pixels[texels[k] * 3 + c] = quantize_unit(colors[k][c]);
  return result;
}

TextureImage edge_pad(const TextureImage& texture, const CoverageMask& mask, int iterations, CoverageMask* grown) {
  if (texture.resolution != mask.resolution) throw std::invalid_argument("edge_pad: texture and mask differ in size");
  if (iterations < 0) throw std::invalid_argument("edge_pad: iterations must be >= 0");
  const int R = texture.resolution;
  TextureImage cur = texture;
  CoverageMask cov = mask;
  for (int it = 0; it < iterations; ++it) {
    const TextureImage prev = cur;
    const CoverageMask prev_cov = cov;
    bool changed = false;
    for (int y = 0; y < R; ++y) {
      for (int x = 0; x < R; ++x) {
        if (prev_cov.at(x, y)) continue;
        int sum[3] = {0, 0, 0};
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= R || ny >= R || !prev_cov.at(nx, ny)) continue;
            const std::uint8_t* t = prev.texel(nx, ny);
            for (int c = 0; c < 3; ++c) sum[c] += t[c];
            ++n;
          }
        }
        if (n == 0) continue;
        std::uint8_t* out = cur.texel(x, y);
        for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::lround(static_cast<double>(sum[c]) / n));
        cov.covered[static_cast<std::size_t>(y) * R + x] = 1;
        changed = true;
      }
    }
    if (!changed) break;
  }
  if (grown) *grown = std::move(cov);
  return cur;
}

std::vector<std::filesystem::path> export_textured_mesh(const Mesh& mesh, const TextureImage& texture,
                                                        const std::filesystem::path& dir, const std::string& stem) {
  if (!mesh.has_uv()) throw std::invalid_argument("export: mesh has no UVs");
  std::filesystem::create_directories(dir);
  const auto png = dir / (stem + ".png");
  const auto mtl = dir / (stem + ".mtl");
  const auto obj = dir / (stem + ".obj");
  write_png(png, texture);
  save_mtl(mtl, "texture", png.filename().string());
  save_obj(mesh, obj, "texture");
  return {obj, mtl, png};
}

}  // namespace texdistill
