#include "pdmc/kernels.hpp"

#include <cmath>

#include <omp.h>

#include <Eigen/Eigenvalues>

namespace pdmc::kernels {

ViewGeometry::ViewGeometry(const DepthMap& depth_map, const Camera& cam)
    : width(depth_map.width),
      height(depth_map.height),
      camera(cam),
      min_z(depth_map.min_z),
      max_z(depth_map.max_z) {
  const std::size_t n = depth_map.size();
  rays.resize(n);
  depth.resize(n);
  world_points.resize(n);
  const Mat3 rt = cam.rotation.transpose();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      rays[i] = cam.ray(c, r);
      depth[i] = depth_map.values[i];
      world_points[i] = rt * (rays[i] * depth[i] - cam.translation);
    }
  }
}

double region_sse(const Plane3D& world_plane, std::span<const std::int32_t> pixels,
                  const ViewGeometry& view) {
  const Plane3D local = to_camera_frame(world_plane, view.camera);
  double sse = 0.0;
  for (const std::int32_t p : pixels) {
    const double e = plane_depth_clamped(local, view.rays[static_cast<std::size_t>(p)], view.max_z) -
                     view.depth[static_cast<std::size_t>(p)];
    sse += e * e;
  }
  return sse;
}

Plane3D PointMoments::fit() const {
  if (n < 3.0) return Plane3D::fronto_parallel(n > 0.0 ? sum.z() / n : 1.0);
  const Vec3 mean = sum / n;
  const Mat3 cov = sum_sq / n - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 ev = solver.eigenvalues();
  if (!(ev(1) > 1e-14 * std::max(ev(2), 1e-300))) return Plane3D::fronto_parallel(mean.z());
  const Vec3 normal = solver.eigenvectors().col(0);
  return Plane3D::canonical(normal, normal.dot(mean));
}

void node_sse_serial(std::span<const Plane3D> world_planes,
                     std::span<const std::vector<std::int32_t>> node_pixels,
                     const ViewGeometry& view, std::span<double> out) {
  for (std::size_t k = 0; k < node_pixels.size(); ++k) {
    out[k] = region_sse(world_planes[k], node_pixels[k], view);
  }
}

void node_sse_parallel(std::span<const Plane3D> world_planes,
                       std::span<const std::vector<std::int32_t>> node_pixels,
                       const ViewGeometry& view, std::span<double> out) {
  const auto count = static_cast<std::ptrdiff_t>(node_pixels.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out[i] = region_sse(world_planes[i], node_pixels[i], view);
  }
}

namespace {

void render_row(int r, std::span<const std::int32_t> labels, std::span<const Plane3D> cam_planes,
                const Camera& camera, double min_z, double max_z, std::span<float> out, int width) {
  for (int c = 0; c < width; ++c) {
    const std::size_t i = static_cast<std::size_t>(r) * width + c;
    const Plane3D& pl = cam_planes[static_cast<std::size_t>(labels[i])];
    const double z = plane_depth_clamped(pl, camera.ray(c, r), max_z);
    out[i] = static_cast<float>(std::clamp(z, min_z, max_z));
  }
}

std::vector<Plane3D> camera_planes(std::span<const Plane3D> world_planes, const Camera& camera) {
  std::vector<Plane3D> local;
  local.reserve(world_planes.size());
  for (const Plane3D& p : world_planes) local.push_back(to_camera_frame(p, camera));
  return local;
}

WarpTarget warp_pixel(const DepthMap& depth, const Camera& src, const Camera& dst, int dst_width,
                      int dst_height, int r, int c) {
  const double z = depth.at(r, c);
  if (!(z > 0.0)) return {};
  const auto proj = project(unproject({static_cast<double>(c), static_cast<double>(r)}, z, src), dst);
  if (!proj) return {};
  const double col = std::nearbyint(proj->pixel.u);
  const double row = std::nearbyint(proj->pixel.v);
  if (col < 0 || row < 0 || col >= dst_width || row >= dst_height) return {};
  return {static_cast<std::int32_t>(row * dst_width + col), proj->depth};
}

}  // namespace

void render_planes_serial(std::span<const std::int32_t> labels, std::span<const Plane3D> world_planes,
                          const Camera& camera, double min_z, double max_z, std::span<float> out,
                          int width) {
  const auto local = camera_planes(world_planes, camera);
  const int height = static_cast<int>(labels.size()) / width;
  for (int r = 0; r < height; ++r) render_row(r, labels, local, camera, min_z, max_z, out, width);
}

void render_planes_parallel(std::span<const std::int32_t> labels,
                            std::span<const Plane3D> world_planes, const Camera& camera,
                            double min_z, double max_z, std::span<float> out, int width) {
  const auto local = camera_planes(world_planes, camera);
  const int height = static_cast<int>(labels.size()) / width;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) render_row(r, labels, local, camera, min_z, max_z, out, width);
}

void warp_serial(const DepthMap& depth, const Camera& src, const Camera& dst, int dst_width,
                 int dst_height, std::span<WarpTarget> out) {
  for (int r = 0; r < depth.height; ++r) {
    for (int c = 0; c < depth.width; ++c) {
      out[static_cast<std::size_t>(r) * depth.width + c] =
          warp_pixel(depth, src, dst, dst_width, dst_height, r, c);
    }
  }
}

void warp_parallel(const DepthMap& depth, const Camera& src, const Camera& dst, int dst_width,
                   int dst_height, std::span<WarpTarget> out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < depth.height; ++r) {
    for (int c = 0; c < depth.width; ++c) {
      out[static_cast<std::size_t>(r) * depth.width + c] =
          warp_pixel(depth, src, dst, dst_width, dst_height, r, c);
    }
  }
}

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace pdmc::kernels
