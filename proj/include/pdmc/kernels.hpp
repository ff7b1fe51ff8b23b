#pragma once

// Pixel-level kernels shared by the segmenters, the hierarchy and the codec.
// Every parallel kernel has a serial twin with identical results; the serial
// versions are kept as the reference for tests and the benchmark.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdmc/geometry.hpp"
#include "pdmc/scene_io.hpp"

namespace pdmc::kernels {

/// Per-pixel camera rays, observed depths and world points of one view.
struct ViewGeometry {
  int width = 0;
  int height = 0;
  Camera camera;
  double min_z = 1.0;
  double max_z = 2.0;
  std::vector<Vec3> rays;          // camera frame, z = 1
  std::vector<double> depth;       // observed camera-frame depth g(n)
  std::vector<Vec3> world_points;  // unprojected pixels

  ViewGeometry() = default;
  ViewGeometry(const DepthMap& depth_map, const Camera& cam);
  std::size_t size() const { return depth.size(); }
};

/// Camera-frame plane depth along `ray`, clamped to max_z when the ray misses.
inline double plane_depth_clamped(const Plane3D& cam_plane, const Vec3& ray, double max_z) {
  const double denom = cam_plane.normal.dot(ray);
  if (std::abs(denom) < 1e-12) return max_z;
  const double z = cam_plane.offset / denom;
  return (z > 0.0 && std::isfinite(z)) ? z : max_z;
}

/// Squared depth error of one plane over a pixel list, summed in list order.
double region_sse(const Plane3D& world_plane, std::span<const std::int32_t> pixels,
                  const ViewGeometry& view);

/// Running first and second moments of 3D points.
struct PointMoments {
  double n = 0.0;
  Vec3 sum = Vec3::Zero();
  Mat3 sum_sq = Mat3::Zero();

  void add(const Vec3& p) {
    n += 1.0;
    sum += p;
    sum_sq.noalias() += p * p.transpose();
  }
  PointMoments& operator+=(const PointMoments& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
    return *this;
  }
  /// Total least squares plane, or a fronto-parallel plane at the mean z when
  /// the points are degenerate.
  Plane3D fit() const;
};

/// Squared error per node. `node_pixels[k]` lists the pixels of node k.
void node_sse_serial(std::span<const Plane3D> world_planes,
                     std::span<const std::vector<std::int32_t>> node_pixels,
                     const ViewGeometry& view, std::span<double> out);
void node_sse_parallel(std::span<const Plane3D> world_planes,
                       std::span<const std::vector<std::int32_t>> node_pixels,
                       const ViewGeometry& view, std::span<double> out);

/// Fills a depth raster from a label map and one world plane per label;
/// values are clamped to [min_z, max_z].
void render_planes_serial(std::span<const std::int32_t> labels, std::span<const Plane3D> world_planes,
                          const Camera& camera, double min_z, double max_z, std::span<float> out,
                          int width);
void render_planes_parallel(std::span<const std::int32_t> labels,
                            std::span<const Plane3D> world_planes, const Camera& camera,
                            double min_z, double max_z, std::span<float> out, int width);

/// Forward projection of every pixel of a source view into a destination
/// camera: rounded target pixel index (-1 when outside or behind) and depth.
struct WarpTarget {
  std::int32_t index = -1;
  double depth = 0.0;
};
void warp_serial(const DepthMap& depth, const Camera& src, const Camera& dst, int dst_width,
                 int dst_height, std::span<WarpTarget> out);
void warp_parallel(const DepthMap& depth, const Camera& src, const Camera& dst, int dst_width,
                   int dst_height, std::span<WarpTarget> out);

void set_thread_count(int threads);

}  // namespace pdmc::kernels
