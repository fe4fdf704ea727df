#pragma once

#include <Eigen/Core>

#include "texdistill/mesh.hpp"
#include "texdistill/rng.hpp"

namespace texdistill {

// Pinhole camera. Camera space follows the OpenGL convention: x right, y up,
// looking down -z.
struct Camera {
  Vec3 position{2.0, 0.0, 0.0};
  Vec3 target{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double fov_y_deg = 45.0;
  int width = 64;
  int height = 64;

  // Throws std::invalid_argument when position == target, up is parallel to
  // the view direction, or the image size / fov is invalid.
  void validate() const;

  // Rows are the camera x, y, z axes expressed in world space.
  Eigen::Matrix3d world_to_camera() const;
  Vec3 to_camera(const Vec3& world) const { return world_to_camera() * (world - position); }
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
};

struct CameraPolicy {
  Range azimuth_deg{0.0, 360.0};
  Range elevation_deg{-10.0, 45.0};
  Range radius{1.8, 2.2};
  Range fov_deg{40.0, 50.0};
  int width = 64;
  int height = 64;

  void validate() const;
};

// Camera on a sphere around the origin: azimuth rotates about +y starting at
// +x, elevation lifts toward +y.
Camera orbit_camera(double azimuth_deg, double elevation_deg, double radius, double fov_deg, int width, int height);

// Uniform draws of each policy range. Deterministic for a given generator state.
Camera sample_camera(Rng& rng, const CameraPolicy& policy);

}  // namespace texdistill
