#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pdmc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Pixel {
  double u = 0.0;  // column
  double v = 0.0;  // row
};

/// Pinhole camera. `rotation` and `translation` map world to camera
/// coordinates: X_cam = rotation * X_world + translation.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws InvalidArgument unless fx, fy > 0 and rotation is orthonormal.
  void validate() const;
  Vec3 center() const { return -rotation.transpose() * translation; }
  /// Camera-frame direction of the ray through a pixel, scaled to z = 1.
  Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

  bool operator==(const Camera& other) const = default;
};

/// Plane n . X = offset with unit normal and n_z >= 0.
struct Plane3D {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  /// Normalizes and flips the orientation so that n_z >= 0. For n_z == 0 the
  /// first non-zero of (n_y, n_x) is made positive.
  static Plane3D canonical(const Vec3& normal, double offset);
  static Plane3D fronto_parallel(double depth) { return {Vec3::UnitZ(), depth}; }

  double signed_distance(const Vec3& point) const { return normal.dot(point) - offset; }
  bool operator==(const Plane3D& other) const = default;
};

struct SphericalPlane {
  double theta = 0.0;  // polar angle of the normal, [0, pi/2]
  double phi = 0.0;    // azimuth of the normal, [0, 2 pi)
  double dist = 0.0;   // signed offset; equals the camera-to-plane distance when positive
};

struct RansacConfig {
  int max_iterations = 500;
  double inlier_threshold = 0.01;
  double min_inlier_fraction = 0.5;
  std::uint64_t rng_seed = 1;
  /// Adaptive stopping: stop once this confidence of having drawn an
  /// all-inlier sample is reached. 1.0 disables early stopping.
  double confidence = 0.999;

  void validate() const;
  /// Defaults with inlier threshold 1% of the depth range.
  static RansacConfig for_depth_range(double min_z, double max_z);
};

struct RansacResult {
  Plane3D plane;
  std::vector<std::uint8_t> inliers;
  std::size_t inlier_count = 0;
};

/// World-frame point on the ray through `pixel` whose camera-frame depth is
/// `depth`. Throws InvalidArgument for depth <= 0.
Vec3 unproject(Pixel pixel, double depth, const Camera& camera);

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

/// std::nullopt when the point is not in front of the camera.
std::optional<Projection> project(const Vec3& point, const Camera& camera);

/// Total least squares plane through the points. Throws DegenerateFit for
/// fewer than 3 points or (near) collinear sets.
Plane3D fit_plane_lsq(std::span<const Vec3> points);

/// Deterministic RANSAC followed by least-squares refinement on the inliers.
/// std::nullopt when no hypothesis reaches cfg.min_inlier_fraction.
std::optional<RansacResult> fit_plane_ransac(std::span<const Vec3> points, const RansacConfig& cfg);

/// Region plane as used by the hierarchy: RANSAC above `ransac_min_points`,
/// least squares below, and a plane fronto-parallel to `frame` at the median
/// of `camera_depths` when both fail. Returns a world-frame plane.
Plane3D fit_region_plane(std::span<const Vec3> points, std::span<const double> camera_depths,
                         const Camera& frame, const RansacConfig& cfg,
                         std::size_t ransac_min_points);

/// Camera-frame depth where the ray through `pixel` meets the plane, or
/// std::nullopt when the ray is parallel or the hit is behind the camera.
std::optional<double> plane_depth_at(const Plane3D& plane, Pixel pixel, const Camera& camera);

Plane3D to_camera_frame(const Plane3D& world_plane, const Camera& camera);
Plane3D to_world_frame(const Plane3D& camera_plane, const Camera& camera);

SphericalPlane plane_to_spherical(const Plane3D& plane);
Plane3D spherical_to_plane(const SphericalPlane& sph);

}  // namespace pdmc
