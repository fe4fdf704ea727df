#include "texdistill/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace texdistill {

TextureImage::TextureImage(int r, std::uint8_t fill) : resolution(r) {
  if (r < 1) throw std::invalid_argument("texture resolution must be >= 1");
  pixels.assign(static_cast<std::size_t>(r) * r * 3, fill);
}

std::pair<int, int> TextureImage::nearest_texel(const Vec2& uv) const {
  const int x = std::clamp(static_cast<int>(std::floor(uv.x() * resolution)), 0, resolution - 1);
  const int y = std::clamp(static_cast<int>(std::floor((1.0 - uv.y()) * resolution)), 0, resolution - 1);
  return {x, y};
}

std::uint8_t quantize_unit(double v) {
  const double c = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(c));
}

std::size_t RasterBuffer::covered_count() const {
  return static_cast<std::size_t>(std::count_if(face_id.begin(), face_id.end(), [](int f) { return f >= 0; }));
}

std::size_t RenderedView::covered_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

RasterBuffer rasterize(const Mesh& mesh, const Camera& cam) {
  cam.validate();
  const int W = cam.width, H = cam.height;
  const std::size_t n = static_cast<std::size_t>(W) * H;
  RasterBuffer rb;
  rb.width = W;
  rb.height = H;
  rb.face_id.assign(n, -1);
  rb.barycentric.assign(n, Vec3::Zero());
  rb.position.assign(n, Vec3::Zero());
  rb.view_depth.assign(n, std::numeric_limits<double>::infinity());

  const Eigen::Matrix3d R = cam.world_to_camera();
  const double tan_half = std::tan(0.5 * cam.fov_y_deg * std::numbers::pi / 180.0);
  const double aspect = static_cast<double>(W) / H;

  std::vector<Vec3> cam_pts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) cam_pts[i] = R * (mesh.vertices[i] - cam.position);

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    double sx[3], sy[3], w[3];
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      const Vec3& pc = cam_pts[face[k]];
      w[k] = -pc.z();
      if (w[k] <= kNearPlane) {
        behind = true;
        break;
      }
      const double ndc_x = pc.x() / (w[k] * tan_half * aspect);
      const double ndc_y = pc.y() / (w[k] * tan_half);
      sx[k] = 0.5 * (ndc_x + 1.0) * W;
      sy[k] = 0.5 * (1.0 - ndc_y) * H;
    }
    if (behind) continue;
    const double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0]);
    if (std::abs(area) < 1e-14) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sx[0], sx[1], sx[2]}))));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({sx[0], sx[1], sx[2]}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sy[0], sy[1], sy[2]}))));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({sy[0], sy[1], sy[2]}))));
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        // Screen-space barycentrics; the sign of `area` absorbs winding.
        const double l0 = ((sx[1] - px) * (sy[2] - py) - (sx[2] - px) * (sy[1] - py)) / area;
        const double l1 = ((sx[2] - px) * (sy[0] - py) - (sx[0] - px) * (sy[2] - py)) / area;
        const double l2 = 1.0 - l0 - l1;
        if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
        const double inv_w = l0 / w[0] + l1 / w[1] + l2 / w[2];
        const double depth = 1.0 / inv_w;
        const std::size_t idx = static_cast<std::size_t>(y) * W + x;
        if (depth >= rb.view_depth[idx]) continue;
        const Vec3 b(l0 / w[0] * depth, l1 / w[1] * depth, l2 / w[2] * depth);
        rb.view_depth[idx] = depth;
        rb.face_id[idx] = static_cast<int>(f);
        rb.barycentric[idx] = b;
        rb.position[idx] = b[0] * mesh.vertices[face[0]] + b[1] * mesh.vertices[face[1]] + b[2] * mesh.vertices[face[2]];
      }
    }
  }
  return rb;
}

namespace {

RenderedView view_from_raster(RasterBuffer&& rb, const Rgb& background) {
  RenderedView v;
  v.width = rb.width;
  v.height = rb.height;
  v.color = Image(rb.height, rb.width, 3);
  v.mask.assign(rb.face_id.size(), 0);
  for (std::size_t i = 0; i < rb.face_id.size(); ++i) {
    v.mask[i] = rb.covered(i) ? 1 : 0;
    for (int c = 0; c < 3; ++c) v.color.data[i * 3 + c] = background[c];
  }
  v.face_id = std::move(rb.face_id);
  v.barycentric = std::move(rb.barycentric);
  v.surface_position = std::move(rb.position);
  return v;
}

}  // namespace

RenderedView render_color(const Mesh& mesh, const TextureField& field, const Camera& cam, const Rgb& background) {
  RenderedView v = view_from_raster(rasterize(mesh, cam), background);
  std::vector<Vec3> pts;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.mask.size(); ++i)
    if (v.mask[i]) {
      pts.push_back(v.surface_position[i]);
      idx.push_back(i);
    }
  const std::vector<Rgb> colors = field.query(pts);
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (int c = 0; c < 3; ++c) v.color.data[idx[k] * 3 + c] = colors[k][c];
  return v;
}

ParameterGradient render_view_gradient(const RenderedView& view, const Image& d_color, const TextureField& field) {
  if (d_color.height != view.height || d_color.width != view.width || d_color.channels != 3)
    throw std::invalid_argument("render_view_gradient: d_color shape does not match the view");
  std::vector<Vec3> pts;
  std::vector<Rgb> grads;
  for (std::size_t i = 0; i < view.mask.size(); ++i) {
    if (!view.mask[i]) continue;
    pts.push_back(view.surface_position[i]);
    grads.emplace_back(d_color.data[i * 3], d_color.data[i * 3 + 1], d_color.data[i * 3 + 2]);
  }
  return field.backward(pts, grads);
}

RenderedView render_textured(const Mesh& mesh, const TextureImage& texture, const Camera& cam, const Rgb& background) {
  if (!mesh.has_uv()) throw std::invalid_argument("render_textured: mesh has no UVs");
  if (texture.empty()) throw std::invalid_argument("render_textured: empty texture");
  RenderedView v = view_from_raster(rasterize(mesh, cam), background);
  for (std::size_t i = 0; i < v.mask.size(); ++i) {
    if (!v.mask[i]) continue;
    const auto f = static_cast<std::size_t>(v.face_id[i]);
    const Vec3& b = v.barycentric[i];
    const Vec2 uv = b[0] * mesh.uv(f, 0) + b[1] * mesh.uv(f, 1) + b[2] * mesh.uv(f, 2);
    const auto [tx, ty] = texture.nearest_texel(uv);
    const std::uint8_t* t = texture.texel(tx, ty);
    for (int c = 0; c < 3; ++c) v.color.data[i * 3 + c] = t[c] / 255.0;
  }
  return v;
}

GeometryMaps render_geometry_maps(const Mesh& mesh, const Camera& cam) {
  const RasterBuffer rb = rasterize(mesh, cam);
  const Eigen::Matrix3d R = cam.world_to_camera();
  GeometryMaps g;
  g.width = rb.width;
  g.height = rb.height;
  g.depth = Image(rb.height, rb.width, 1, kDepthFill);
  g.normal = Image(rb.height, rb.width, 3);
  g.mask.assign(rb.face_id.size(), 0);
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (std::size_t i = 0; i < rb.face_id.size(); ++i) {
    if (!rb.covered(i)) continue;
    dmin = std::min(dmin, rb.view_depth[i]);
    dmax = std::max(dmax, rb.view_depth[i]);
  }
  for (std::size_t i = 0; i < rb.face_id.size(); ++i) {
    if (!rb.covered(i)) {
      for (int c = 0; c < 3; ++c) g.normal.data[i * 3 + c] = kNormalFill[c];
      continue;
    }
    g.mask[i] = 1;
    // Spreads at rounding level count as a flat depth range.
    const bool flat = dmax - dmin <= 1e-12 * std::max(1.0, std::abs(dmax));
    g.depth.data[i] = flat ? 0.5 : (rb.view_depth[i] - dmin) / (dmax - dmin);
    Vec3 n = R * mesh.face_normal(static_cast<std::size_t>(rb.face_id[i]));
    // Orient toward the camera: the view ray from the camera to the point.
    const Vec3 p_cam = R * (rb.position[i] - cam.position);
    if (n.dot(p_cam) > 0.0) n = -n;
    for (int c = 0; c < 3; ++c) g.normal.data[i * 3 + c] = n[c];
  }
  return g;
}

}  // namespace texdistill
