#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pdmc/kernels.hpp"

namespace pdmc::detail {

// Merge model whose cost is the increase of squared depth error when two
// regions share one least-squares plane (fitted from running moments).
struct PlanarModel {
  const kernels::ViewGeometry* view = nullptr;

  struct Region {
    std::vector<std::int32_t> pixels;
    kernels::PointMoments moments;  // camera-frame points
    double sse = 0.0;
  };

  void add_pixel(Region& r, std::int32_t p) const {
    r.pixels.push_back(p);
    const auto i = static_cast<std::size_t>(p);
    r.moments.add(view->rays[i] * view->depth[i]);
  }
  void finalize(Region& r) const { r.sse = sse_under(r.moments.fit(), r); }

  double sse_under(const Plane3D& cam_plane, const Region& r) const {
    double s = 0.0;
    for (const std::int32_t p : r.pixels) {
      const auto i = static_cast<std::size_t>(p);
      const double e =
          kernels::plane_depth_clamped(cam_plane, view->rays[i], view->max_z) - view->depth[i];
      s += e * e;
    }
    return s;
  }
  double cost(const Region& a, const Region& b) const {
    kernels::PointMoments m = a.moments;
    m += b.moments;
    const Plane3D plane = m.fit();
    return sse_under(plane, a) + sse_under(plane, b) - a.sse - b.sse;
  }
  Region merge(Region&& a, Region&& b) const {
    if (a.pixels.size() < b.pixels.size()) std::swap(a, b);
    Region r;
    r.pixels = std::move(a.pixels);
    r.pixels.insert(r.pixels.end(), b.pixels.begin(), b.pixels.end());
    r.moments = a.moments;
    r.moments += b.moments;
    finalize(r);
    return r;
  }
  std::size_t size(const Region& r) const { return r.pixels.size(); }
};

}  // namespace pdmc::detail
