#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace texdistill {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

// Triangle mesh. UVs are stored per face corner (3 per face) so that seams
// can carry distinct coordinates for the same vertex.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec2> corner_uvs;      // empty, or 3 * faces.size()
  std::vector<Vec3> vertex_normals;  // empty, or vertices.size()

  bool has_uv() const { return !corner_uvs.empty(); }
  const Vec2& uv(std::size_t face, int corner) const { return corner_uvs[face * 3 + corner]; }

  // Throws std::invalid_argument on index/attribute inconsistencies.
  void validate() const;

  Vec3 face_normal(std::size_t face) const;  // unit, counter-clockwise winding
};

struct Aabb {
  Vec3 min;
  Vec3 max;
  Vec3 extent() const { return max - min; }
};

Aabb bounding_box(const Mesh& mesh);

// Centers the bounding box at the origin and scales the largest extent to 1.
// Throws std::runtime_error for an empty mesh or zero extent.
void normalize_mesh(Mesh& mesh);

// Reads OBJ (v / vt / vn / f, polygons fan-triangulated, negative indices
// allowed) or the JSON mesh format (see docs/formats.md) by extension, then
// normalizes. Throws std::runtime_error for unreadable or degenerate input.
Mesh load_mesh(const std::filesystem::path& path);

Mesh parse_obj(std::istream& in);
Mesh parse_json_mesh(const std::string& text);

// Writes OBJ with per-corner UVs when present. If `material` is non-empty an
// mtllib/usemtl pair referencing `<stem>.mtl` is emitted.
void save_obj(const Mesh& mesh, const std::filesystem::path& path, const std::string& material = {});
void save_mtl(const std::filesystem::path& path, const std::string& material, const std::string& texture_file);
std::string to_json_mesh(const Mesh& mesh);

namespace primitives {

// Axis-aligned unit cube centered at the origin. With `with_uv`, each face
// gets its own chart in a 3x2 atlas with a gutter between charts.
Mesh cube(bool with_uv);

// Latitude/longitude sphere of radius 0.5, no UVs.
Mesh uv_sphere(int segments, int rings);

// Square in the z = `z` plane spanning [-s/2, s/2]^2, facing +z, UVs covering [0,1]^2.
Mesh quad(double size = 1.0, double z = 0.0);

}  // namespace primitives

}  // namespace texdistill
