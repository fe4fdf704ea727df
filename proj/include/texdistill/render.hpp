#pragma once

#include <cstdint>
#include <vector>

#include "texdistill/camera.hpp"
#include "texdistill/image.hpp"
#include "texdistill/mesh.hpp"
#include "texdistill/texture_field.hpp"
#include "texdistill/texture_image.hpp"

namespace texdistill {

// Per-pixel visibility from the z-buffered rasterizer. Barycentrics are
// perspective-correct, so `position` is the exact point where the pixel-center
// ray meets the visible triangle.
struct RasterBuffer {
  int width = 0;
  int height = 0;
  std::vector<int> face_id;              // -1 where uncovered
  std::vector<Vec3> barycentric;
  std::vector<Vec3> position;            // world space
  std::vector<double> view_depth;        // distance along the view axis

  bool covered(std::size_t pixel) const { return face_id[pixel] >= 0; }
  std::size_t covered_count() const;
};

// Triangles with any vertex closer than this to the camera plane are dropped.
inline constexpr double kNearPlane = 1e-3;

RasterBuffer rasterize(const Mesh& mesh, const Camera& cam);

struct RenderedView {
  int width = 0;
  int height = 0;
  Image color;                        // H x W x 3
  std::vector<Vec3> surface_position;
  std::vector<std::uint8_t> mask;
  std::vector<int> face_id;
  std::vector<Vec3> barycentric;

  std::size_t covered_count() const;
};

inline const Rgb kDefaultBackground{0.5, 0.5, 0.5};

RenderedView render_color(const Mesh& mesh, const TextureField& field, const Camera& cam,
                          const Rgb& background = kDefaultBackground);

// Chain rule through the per-pixel field queries. Uncovered pixels contribute
// nothing; no gradient flows to geometry or camera.
ParameterGradient render_view_gradient(const RenderedView& view, const Image& d_color, const TextureField& field);

// Nearest-texel texture lookup at the interpolated corner UVs.
RenderedView render_textured(const Mesh& mesh, const TextureImage& texture, const Camera& cam,
                             const Rgb& background = kDefaultBackground);

// Depth: per-view min/max normalized view depth (0 = nearest covered,
// 1 = farthest, 0.5 when constant). Normals: camera-space face normals
// oriented toward the camera.
struct GeometryMaps {
  int width = 0;
  int height = 0;
  Image depth;   // H x W x 1
  Image normal;  // H x W x 3
  std::vector<std::uint8_t> mask;
};

inline constexpr double kDepthFill = 1.0;
inline const Vec3 kNormalFill{0.0, 0.0, 0.0};

GeometryMaps render_geometry_maps(const Mesh& mesh, const Camera& cam);

}  // namespace texdistill
