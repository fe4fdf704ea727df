#include "texdistill/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace texdistill {

void Mesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const Face& f : faces)
    for (int idx : f)
      if (idx < 0 || idx >= n) throw std::invalid_argument("mesh: face index out of range");
  if (!corner_uvs.empty()) {
    if (corner_uvs.size() != faces.size() * 3) throw std::invalid_argument("mesh: uv count != 3 * faces");
    for (const Vec2& uv : corner_uvs)
      if (!(uv.x() >= 0.0 && uv.x() <= 1.0 && uv.y() >= 0.0 && uv.y() <= 1.0))
        throw std::invalid_argument("mesh: uv outside [0,1]");
  }
  if (!vertex_normals.empty() && vertex_normals.size() != vertices.size())
    throw std::invalid_argument("mesh: normal count != vertex count");
}

Vec3 Mesh::face_normal(std::size_t face) const {
  const Face& f = faces[face];
  const Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

Aabb bounding_box(const Mesh& mesh) {
  Aabb box{Vec3::Constant(std::numeric_limits<double>::infinity()),
           Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const Vec3& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

void normalize_mesh(Mesh& mesh) {
  if (mesh.vertices.empty() || mesh.faces.empty()) throw std::runtime_error("mesh: empty mesh");
  const Aabb box = bounding_box(mesh);
  const double extent = box.extent().maxCoeff();
  if (!(extent > 0.0) || !std::isfinite(extent)) throw std::runtime_error("mesh: degenerate mesh (zero extent)");
  const Vec3 center = 0.5 * (box.min + box.max);
  for (Vec3& v : mesh.vertices) v = (v - center) / extent;
}

namespace {

// OBJ index -> 0-based; negative values are relative to the current count.
int resolve_index(long idx, std::size_t count) {
  if (idx > 0) return static_cast<int>(idx - 1);
  if (idx < 0) return static_cast<int>(static_cast<long>(count) + idx);
  throw std::runtime_error("obj: zero index");
}

}  // namespace

Mesh parse_obj(std::istream& in) {
  Mesh mesh;
  std::vector<Vec2> uvs;
  std::vector<Vec3> normals;
  bool any_missing_uv = false;
  std::vector<std::array<int, 3>> uv_faces;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw std::runtime_error("obj: malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "vt") {
      double u, v;
      if (!(ls >> u >> v)) throw std::runtime_error("obj: malformed texcoord");
      uvs.emplace_back(u, v);
    } else if (tag == "vn") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw std::runtime_error("obj: malformed normal");
      normals.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> vi, ti;
      std::string tok;
      while (ls >> tok) {
        long v = 0, t = 0;
        const auto s1 = tok.find('/');
        v = std::stol(tok.substr(0, s1));
        if (s1 != std::string::npos) {
          const auto s2 = tok.find('/', s1 + 1);
          const std::string ts = tok.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
          if (!ts.empty()) t = std::stol(ts);
        }
        vi.push_back(resolve_index(v, mesh.vertices.size()));
        ti.push_back(t == 0 ? -1 : resolve_index(t, uvs.size()));
      }
      if (vi.size() < 3) throw std::runtime_error("obj: face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.faces.push_back({vi[0], vi[k], vi[k + 1]});
        uv_faces.push_back({ti[0], ti[k], ti[k + 1]});
        if (ti[0] < 0 || ti[k] < 0 || ti[k + 1] < 0) any_missing_uv = true;
      }
    }
  }
  if (!uvs.empty() && !any_missing_uv) {
    mesh.corner_uvs.reserve(uv_faces.size() * 3);
    for (const auto& tf : uv_faces)
      for (int t : tf) {
        if (t < 0 || t >= static_cast<int>(uvs.size())) throw std::runtime_error("obj: texcoord index out of range");
        mesh.corner_uvs.push_back(uvs[t]);
      }
  }
  if (normals.size() == mesh.vertices.size()) {
    mesh.vertex_normals = normals;
    for (Vec3& n : mesh.vertex_normals)
      if (n.norm() > 0.0) n.normalize();
  }
  return mesh;
}

Mesh parse_json_mesh(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Mesh mesh;
  for (const auto& v : j.at("vertices")) mesh.vertices.emplace_back(v.at(0), v.at(1), v.at(2));
  for (const auto& f : j.at("faces")) {
    if (f.size() < 3) throw std::runtime_error("json mesh: face with fewer than 3 vertices");
    for (std::size_t k = 1; k + 1 < f.size(); ++k) mesh.faces.push_back({f[0].get<int>(), f[k].get<int>(), f[k + 1].get<int>()});
  }
  if (j.contains("uvs")) {
    std::vector<Vec2> uvs;
    for (const auto& t : j.at("uvs")) uvs.emplace_back(t.at(0), t.at(1));
    const auto& fu = j.at("face_uvs");
    for (const auto& f : fu) {
      for (std::size_t k = 1; k + 1 < f.size(); ++k)
        for (int idx : {f[0].get<int>(), f[k].get<int>(), f[k + 1].get<int>()}) {
          if (idx < 0 || idx >= static_cast<int>(uvs.size())) throw std::runtime_error("json mesh: uv index out of range");
          mesh.corner_uvs.push_back(uvs[idx]);
        }
    }
  }
  if (j.contains("normals")) {
    for (const auto& n : j.at("normals")) mesh.vertex_normals.emplace_back(Vec3(n.at(0), n.at(1), n.at(2)).normalized());
  }
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mesh: cannot read " + path.string());
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  Mesh mesh;
  try {
    if (ext == ".obj") {
      mesh = parse_obj(in);
    } else if (ext == ".json") {
      std::stringstream ss;
      ss << in.rdbuf();
      mesh = parse_json_mesh(ss.str());
    } else {
      throw std::runtime_error("unsupported mesh format '" + ext + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("mesh: " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("mesh: " + path.string() + ": " + e.what());
  }
  try {
    mesh.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("mesh: ") + e.what());
  }
  normalize_mesh(mesh);
  return mesh;
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path, const std::string& material) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  if (!material.empty()) out << "mtllib " << path.stem().string() << ".mtl\n";
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Vec2& t : mesh.corner_uvs) out << "vt " << t.x() << ' ' << t.y() << '\n';
  if (!material.empty()) out << "usemtl " << material << '\n';
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    out << 'f';
    for (int k = 0; k < 3; ++k) {
      out << ' ' << mesh.faces[f][k] + 1;
      if (mesh.has_uv()) out << '/' << f * 3 + k + 1;
    }
    out << '\n';
  }
}

void save_mtl(const std::filesystem::path& path, const std::string& material, const std::string& texture_file) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "newmtl " << material << "\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nillum 1\nmap_Kd " << texture_file << '\n';
}

std::string to_json_mesh(const Mesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec3& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["faces"] = mesh.faces;
  if (mesh.has_uv()) {
    j["uvs"] = nlohmann::json::array();
    j["face_uvs"] = nlohmann::json::array();
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      for (int k = 0; k < 3; ++k) j["uvs"].push_back({mesh.uv(f, k).x(), mesh.uv(f, k).y()});
      j["face_uvs"].push_back({3 * f, 3 * f + 1, 3 * f + 2});
    }
  }
  return j.dump();
}

namespace primitives {

Mesh cube(bool with_uv) {
  Mesh m;
  // One quad per face with outward counter-clockwise winding.
  struct FaceDef {
    Vec3 n, u, v;
  };
  const FaceDef defs[6] = {
      {Vec3(1, 0, 0), Vec3(0, 0, -1), Vec3(0, 1, 0)},  {Vec3(-1, 0, 0), Vec3(0, 0, 1), Vec3(0, 1, 0)},
      {Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, -1)},  {Vec3(0, -1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)},
      {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0)},   {Vec3(0, 0, -1), Vec3(-1, 0, 0), Vec3(0, 1, 0)},
  };
  // Shared corner vertices so the mesh has 8 vertices.
  auto vertex_index = [&m](const Vec3& p) {
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
      if ((m.vertices[i] - p).norm() < 1e-12) return static_cast<int>(i);
    m.vertices.push_back(p);
    return static_cast<int>(m.vertices.size() - 1);
  };
  const double gutter = 0.02;
  for (int f = 0; f < 6; ++f) {
    const FaceDef& d = defs[f];
    const Vec3 c = 0.5 * d.n;
    const int q[4] = {vertex_index(c - 0.5 * d.u - 0.5 * d.v), vertex_index(c + 0.5 * d.u - 0.5 * d.v),
                      vertex_index(c + 0.5 * d.u + 0.5 * d.v), vertex_index(c - 0.5 * d.u + 0.5 * d.v)};
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
    if (with_uv) {
      const double cw = 1.0 / 3.0, ch = 0.5;
      const double u0 = (f % 3) * cw + gutter, u1 = (f % 3 + 1) * cw - gutter;
      const double v0 = (f / 3) * ch + gutter, v1 = (f / 3 + 1) * ch - gutter;
      const Vec2 t[4] = {Vec2(u0, v0), Vec2(u1, v0), Vec2(u1, v1), Vec2(u0, v1)};
      for (int k : {0, 1, 2, 0, 2, 3}) m.corner_uvs.push_back(t[k]);
    }
  }
  return m;
}

Mesh uv_sphere(int segments, int rings) {
  if (segments < 3 || rings < 2) throw std::invalid_argument("uv_sphere: too few segments/rings");
  Mesh m;
  const double r = 0.5;
  m.vertices.emplace_back(0.0, r, 0.0);
  for (int i = 1; i < rings; ++i) {
    const double theta = std::numbers::pi * i / rings;
    for (int j = 0; j < segments; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / segments;
      m.vertices.emplace_back(r * std::sin(theta) * std::cos(phi), r * std::cos(theta), -r * std::sin(theta) * std::sin(phi));
    }
  }
  m.vertices.emplace_back(0.0, -r, 0.0);
  const int south = static_cast<int>(m.vertices.size() - 1);
  auto ring = [segments](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
  for (int j = 0; j < segments; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i + 1 < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      m.faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      m.faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < segments; ++j) m.faces.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
  return m;
}

Mesh quad(double size, double z) {
  Mesh m;
  const double h = 0.5 * size;
  m.vertices = {Vec3(-h, -h, z), Vec3(h, -h, z), Vec3(h, h, z), Vec3(-h, h, z)};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  const Vec2 t[4] = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  for (int k : {0, 1, 2, 0, 2, 3}) m.corner_uvs.push_back(t[k]);
  return m;
}

}  // namespace primitives

}  // namespace texdistill
