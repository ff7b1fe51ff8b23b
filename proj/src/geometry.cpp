#include "pdmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "pdmc/error.hpp"

namespace pdmc {

namespace {

constexpr double kParallelEps = 1e-12;

double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a;
}

}  // namespace

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("camera focal lengths must be positive");
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidArgument("camera rotation is not orthonormal");
  }
  if (!translation.allFinite()) throw InvalidArgument("camera translation is not finite");
}

Plane3D Plane3D::canonical(const Vec3& normal, double offset) {
  const double norm = normal.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("plane normal has zero length");
  Vec3 n = normal / norm;
  double d = offset / norm;
  bool flip = n.z() < 0.0;
  if (n.z() == 0.0) flip = n.y() < 0.0 || (n.y() == 0.0 && n.x() < 0.0);
  if (flip) {
    n = -n;
    d = -d;
  }
  if (n.z() == 0.0) n.z() = 0.0;  // drop negative zero
  return {n, d};
}

void RansacConfig::validate() const {
  if (max_iterations < 1) throw InvalidArgument("RANSAC needs at least one iteration");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("RANSAC inlier threshold must be positive");
  if (min_inlier_fraction < 0.0 || min_inlier_fraction > 1.0) {
    throw InvalidArgument("RANSAC min inlier fraction must lie in [0, 1]");
  }
}

RansacConfig RansacConfig::for_depth_range(double min_z, double max_z) {
  RansacConfig cfg;
  cfg.inlier_threshold = 0.01 * (max_z - min_z);
  return cfg;
}

Vec3 unproject(Pixel pixel, double depth, const Camera& camera) {
  if (!(depth > 0.0)) throw InvalidArgument("unproject needs a positive depth");
  const Vec3 cam_point = camera.ray(pixel.u, pixel.v) * depth;
  return camera.rotation.transpose() * (cam_point - camera.translation);
}

std::optional<Projection> project(const Vec3& point, const Camera& camera) {
  const Vec3 p = camera.rotation * point + camera.translation;
  if (!(p.z() > 0.0)) return std::nullopt;
  return Projection{{camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy},
                    p.z()};
}

Plane3D fit_plane_lsq(std::span<const Vec3> points) {
  if (points.size() < 3) throw DegenerateFit("plane fit needs at least 3 points");
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 q = p - centroid;
    cov.noalias() += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Eigen::Vector3d ev = solver.eigenvalues();
  // Second eigenvalue ~ 0 means every point lies on a line.
  const double scale = std::max(ev(2), 1e-300);
  if (ev(1) <= 1e-12 * scale || ev(2) <= 0.0) {
    throw DegenerateFit("points are collinear or coincident");
  }
  const Vec3 normal = solver.eigenvectors().col(0);
  return Plane3D::canonical(normal, normal.dot(centroid));
}

std::optional<RansacResult> fit_plane_ransac(std::span<const Vec3> points,
                                             const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = points.size();
  if (n < 3) throw DegenerateFit("RANSAC needs at least 3 points");

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::size_t best_count = 0;
  Plane3D best_plane;
  bool have_model = false;
  long long needed = cfg.max_iterations;

  for (long long it = 0; it < needed && it < cfg.max_iterations; ++it) {
    const std::size_t i0 = pick(rng);
    const std::size_t i1 = pick(rng);
    const std::size_t i2 = pick(rng);
    if (i0 == i1 || i1 == i2 || i0 == i2) continue;
    const Vec3 normal = (points[i1] - points[i0]).cross(points[i2] - points[i0]);
    if (normal.norm() < 1e-12) continue;
    const Plane3D hypothesis = Plane3D::canonical(normal, normal.dot(points[i0]));

    std::size_t count = 0;
    for (const Vec3& p : points) {
      if (std::abs(hypothesis.signed_distance(p)) <= cfg.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_plane = hypothesis;
      have_model = true;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      if (cfg.confidence < 1.0) {
        const double all_inlier = w * w * w;
        if (all_inlier >= 1.0) {
          needed = it + 1;
        } else if (all_inlier > 0.0) {
          const double k = std::log(1.0 - cfg.confidence) / std::log(1.0 - all_inlier);
          needed = std::min<long long>(cfg.max_iterations, static_cast<long long>(std::ceil(k)));
        }
      }
    }
  }
  if (!have_model) return std::nullopt;
  if (static_cast<double>(best_count) < cfg.min_inlier_fraction * static_cast<double>(n)) {
    return std::nullopt;
  }

  RansacResult result;
  std::vector<Vec3> inlier_points;
  inlier_points.reserve(best_count);
  for (const Vec3& p : points) {
    if (std::abs(best_plane.signed_distance(p)) <= cfg.inlier_threshold) inlier_points.push_back(p);
  }
  try {
    result.plane = fit_plane_lsq(inlier_points);
  } catch (const DegenerateFit&) {
    result.plane = best_plane;
  }
  result.inliers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool in = std::abs(result.plane.signed_distance(points[i])) <= cfg.inlier_threshold;
    result.inliers[i] = in ? 1 : 0;
    result.inlier_count += in ? 1 : 0;
  }
  return result;
}

Plane3D fit_region_plane(std::span<const Vec3> points, std::span<const double> camera_depths,
                         const Camera& frame, const RansacConfig& cfg,
                         std::size_t ransac_min_points) {
  if (points.size() > ransac_min_points) {
    try {
      if (auto fit = fit_plane_ransac(points, cfg)) return fit->plane;
    } catch (const DegenerateFit&) {
    }
  }
  try {
    return fit_plane_lsq(points);
  } catch (const DegenerateFit&) {
  }
  // Median depth fallback keeps every region representable.
  std::vector<double> depths(camera_depths.begin(), camera_depths.end());
  double median = 1.0;
  if (!depths.empty()) {
    const auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
    std::nth_element(depths.begin(), mid, depths.end());
    median = *mid;
  }
  return to_world_frame(Plane3D::fronto_parallel(median), frame);
}

std::optional<double> plane_depth_at(const Plane3D& plane, Pixel pixel, const Camera& camera) {
  const Plane3D local = to_camera_frame(plane, camera);
  const double denom = local.normal.dot(camera.ray(pixel.u, pixel.v));
  if (std::abs(denom) < kParallelEps) return std::nullopt;
  const double z = local.offset / denom;
  if (!(z > 0.0) || !std::isfinite(z)) return std::nullopt;
  return z;
}

Plane3D to_camera_frame(const Plane3D& world_plane, const Camera& camera) {
  const Vec3 n = camera.rotation * world_plane.normal;
  return Plane3D::canonical(n, world_plane.offset + n.dot(camera.translation));
}

Plane3D to_world_frame(const Plane3D& camera_plane, const Camera& camera) {
  const Vec3 n = camera.rotation.transpose() * camera_plane.normal;
  return Plane3D::canonical(n, camera_plane.offset - camera_plane.normal.dot(camera.translation));
}

SphericalPlane plane_to_spherical(const Plane3D& plane) {
  const Vec3& n = plane.normal;
  SphericalPlane s;
  s.theta = std::acos(std::clamp(n.z() / n.norm(), -1.0, 1.0));
  s.phi = (n.x() == 0.0 && n.y() == 0.0) ? 0.0 : wrap_two_pi(std::atan2(n.y(), n.x()));
  s.dist = plane.offset;
  return s;
}

Plane3D spherical_to_plane(const SphericalPlane& sph) {
  const double st = std::sin(sph.theta);
  const Vec3 n{st * std::cos(sph.phi), st * std::sin(sph.phi), std::cos(sph.theta)};
  return Plane3D::canonical(n, sph.dist);
}

}  // namespace pdmc
