#include "texdistill/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace texdistill {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max)
    throw std::invalid_argument(std::string("camera policy: empty range for ") + name);
}

}  // namespace

void Camera::validate() const {
  const Vec3 dir = target - position;
  if (!(dir.norm() > 0.0)) throw std::invalid_argument("camera: position equals target");
  if (!(up.norm() > 0.0) || dir.normalized().cross(up.normalized()).norm() < 1e-9)
    throw std::invalid_argument("camera: up is parallel to the view direction");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
  if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw std::invalid_argument("camera: fov must be in (0, 180)");
}

Eigen::Matrix3d Camera::world_to_camera() const {
  const Vec3 back = (position - target).normalized();
  const Vec3 right = up.cross(back).normalized();
  const Vec3 true_up = back.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right;
  r.row(1) = true_up;
  r.row(2) = back;
  return r;
}

void CameraPolicy::validate() const {
  check_range(azimuth_deg, "azimuth");
  check_range(elevation_deg, "elevation");
  check_range(radius, "radius");
  check_range(fov_deg, "fov");
  if (elevation_deg.min <= -90.0 || elevation_deg.max >= 90.0)
    throw std::invalid_argument("camera policy: elevation must lie strictly inside (-90, 90)");
  if (radius.min <= 0.0) throw std::invalid_argument("camera policy: radius must be positive");
  if (fov_deg.min <= 0.0 || fov_deg.max >= 180.0) throw std::invalid_argument("camera policy: fov must be in (0, 180)");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera policy: image size must be positive");
}

Camera orbit_camera(double azimuth_deg, double elevation_deg, double radius, double fov_deg, int width, int height) {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  Camera cam;
  cam.position = radius * Vec3(std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az));
  cam.target = Vec3::Zero();
  cam.up = Vec3(0.0, 1.0, 0.0);
  cam.fov_y_deg = fov_deg;
  cam.width = width;
  cam.height = height;
  return cam;
}

Camera sample_camera(Rng& rng, const CameraPolicy& policy) {
  policy.validate();
  const double az = uniform(rng, policy.azimuth_deg.min, policy.azimuth_deg.max);
  const double el = uniform(rng, policy.elevation_deg.min, policy.elevation_deg.max);
  const double r = uniform(rng, policy.radius.min, policy.radius.max);
  const double fov = uniform(rng, policy.fov_deg.min, policy.fov_deg.max);
  return orbit_camera(az, el, r, fov, policy.width, policy.height);
}

}  // namespace texdistill
