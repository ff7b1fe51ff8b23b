#include "pdmc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "merge_engine.hpp"
#include "planar_model.hpp"
#include "pdmc/error.hpp"
#include "pdmc/kernels.hpp"

namespace pdmc {

namespace {

// Labels 4-connected components under an arbitrary "same region" predicate.
template <class Same>
Partition label_components(int width, int height, Same same) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::int32_t> out(n, -1);
  std::vector<std::int32_t> stack;
  std::int32_t next = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (out[seed] >= 0) continue;
    out[seed] = next;
    stack.push_back(static_cast<std::int32_t>(seed));
    while (!stack.empty()) {
      const std::int32_t p = stack.back();
      stack.pop_back();
      const int r = p / width;
      const int c = p % width;
      auto visit = [&](int q) {
        if (out[static_cast<std::size_t>(q)] < 0 && same(p, q)) {
          out[static_cast<std::size_t>(q)] = next;
          stack.push_back(q);
        }
      };
      if (c > 0) visit(p - 1);
      if (c + 1 < width) visit(p + 1);
      if (r > 0) visit(p - width);
      if (r + 1 < height) visit(p + width);
    }
    ++next;
  }
  return connected_components(width, height, out);
}

std::uint64_t morton(std::uint32_t row, std::uint32_t col) {
  auto spread = [](std::uint64_t x) {
    x &= 0xffffffffULL;
    x = (x | (x << 16)) & 0x0000ffff0000ffffULL;
    x = (x | (x << 8)) & 0x00ff00ff00ff00ffULL;
    x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0fULL;
    x = (x | (x << 2)) & 0x3333333333333333ULL;
    x = (x | (x << 1)) & 0x5555555555555555ULL;
    return x;
  };
  return (spread(row) << 1) | spread(col);
}

// Final region of every initial unit after a merge run.
std::vector<int> resolve_units(std::size_t units, const std::vector<detail::MergeStep>& steps) {
  std::vector<int> parent(units + steps.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& s : steps) {
    parent[static_cast<std::size_t>(s.a)] = s.merged;
    parent[static_cast<std::size_t>(s.b)] = s.merged;
  }
  std::vector<int> root(units);
  for (std::size_t u = 0; u < units; ++u) {
    int x = static_cast<int>(u);
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    root[u] = x;
  }
  return root;
}

struct ColorModel {
  struct Region {
    double count = 0.0;
    std::array<double, 3> sum{};
  };

  // Ward criterion: squared distance of the colour means weighted by
  // n_a n_b / (n_a + n_b).
  double cost(const Region& a, const Region& b) const {
    double d2 = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = a.sum[ch] / a.count - b.sum[ch] / b.count;
      d2 += d * d;
    }
    return d2 * a.count * b.count / (a.count + b.count);
  }
  Region merge(Region&& a, Region&& b) const {
    Region r;
    r.count = a.count + b.count;
    for (int ch = 0; ch < 3; ++ch) r.sum[ch] = a.sum[ch] + b.sum[ch];
    return r;
  }
  std::size_t size(const Region& r) const { return static_cast<std::size_t>(r.count); }
};

void check_same_raster(const Partition& a, const Partition& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("partitions have different dimensions");
  }
}

}  // namespace

Partition connected_components(int width, int height, std::span<const std::int32_t> labels) {
  if (width <= 0 || height <= 0) throw InvalidArgument("label map has no pixels");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (labels.size() != n) throw InvalidArgument("label map size does not match its dimensions");

  Partition p;
  p.width_ = width;
  p.height_ = height;
  p.labels_.assign(n, -1);
  std::vector<std::int32_t> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (p.labels_[seed] >= 0) continue;
    const auto id = static_cast<std::int32_t>(p.regions_.size());
    RegionInfo info;
    info.min_row = info.max_row = static_cast<int>(seed) / width;
    info.min_col = info.max_col = static_cast<int>(seed) % width;
    p.labels_[seed] = id;
    stack.push_back(static_cast<std::int32_t>(seed));
    while (!stack.empty()) {
      const std::int32_t q = stack.back();
      stack.pop_back();
      const int r = q / width;
      const int c = q % width;
      ++info.pixel_count;
      info.min_row = std::min(info.min_row, r);
      info.max_row = std::max(info.max_row, r);
      info.min_col = std::min(info.min_col, c);
      info.max_col = std::max(info.max_col, c);
      const std::int32_t lab = labels[static_cast<std::size_t>(q)];
      auto visit = [&](std::int32_t x) {
        const auto xi = static_cast<std::size_t>(x);
        if (p.labels_[xi] < 0 && labels[xi] == lab) {
          p.labels_[xi] = id;
          stack.push_back(x);
        }
      };
      if (c > 0) visit(q - 1);
      if (c + 1 < width) visit(q + 1);
      if (r > 0) visit(q - width);
      if (r + 1 < height) visit(q + width);
    }
    p.regions_.push_back(info);
  }
  return p;
}

std::vector<BoundaryElement> boundary_elements(const Partition& p) {
  std::vector<BoundaryElement> out;
  const int w = p.width();
  const int h = p.height();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::int32_t i = r * w + c;
      if (c + 1 < w && p[static_cast<std::size_t>(i)] != p[static_cast<std::size_t>(i + 1)]) {
        out.push_back({i, i + 1});
      }
      if (r + 1 < h && p[static_cast<std::size_t>(i)] != p[static_cast<std::size_t>(i + w)]) {
        out.push_back({i, i + w});
      }
    }
  }
  return out;
}

Partition leaf_color_partition(const ColorImage& image, int n_regions) {
  if (n_regions < 1) throw InvalidArgument("colour partition needs at least one region");
  if (image.width <= 0 || image.height <= 0) throw InvalidArgument("colour image has no pixels");
  const int w = image.width;
  const int h = image.height;
  const std::size_t n = image.size();

  // Units are numbered in Morton order so that equal-cost merges grow
  // quadtree-like blocks.
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> code(n);
  for (std::size_t i = 0; i < n; ++i) {
    code[i] = morton(static_cast<std::uint32_t>(i / w), static_cast<std::uint32_t>(i % w));
  }
  std::sort(order.begin(), order.end(),
            [&](std::int32_t a, std::int32_t b) { return code[static_cast<std::size_t>(a)] < code[static_cast<std::size_t>(b)]; });
  std::vector<int> unit_of(n);
  for (std::size_t u = 0; u < n; ++u) unit_of[static_cast<std::size_t>(order[u])] = static_cast<int>(u);

  std::vector<ColorModel::Region> units(n);
  for (std::size_t u = 0; u < n; ++u) {
    const Rgb& px = image.values[static_cast<std::size_t>(order[u])];
    units[u].count = 1.0;
    for (int ch = 0; ch < 3; ++ch) units[u].sum[ch] = px[ch];
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(2 * n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (c + 1 < w) edges.emplace_back(unit_of[i], unit_of[i + 1]);
      if (r + 1 < h) edges.emplace_back(unit_of[i], unit_of[i + w]);
    }
  }
  ColorModel model;
  detail::GreedyMerger<ColorModel> merger(model, std::move(units), edges);
  const auto steps = merger.run(static_cast<std::size_t>(n_regions));
  const auto root = resolve_units(n, steps);
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = root[static_cast<std::size_t>(unit_of[i])];
  return connected_components(w, h, labels);
}

Partition leaf_depth_partition(const DepthMap& depth, const Camera& camera, int n_regions) {
  if (n_regions < 1) throw InvalidArgument("depth partition needs at least one region");
  depth.validate();
  const int w = depth.width;
  const int h = depth.height;
  const kernels::ViewGeometry view(depth, camera);

  const double area = static_cast<double>(w) * h;
  const int block = std::max(1, static_cast<int>(std::floor(std::sqrt(area / (16.0 * n_regions)))));
  const int bw = (w + block - 1) / block;
  const int bh = (h + block - 1) / block;
  const std::size_t n_blocks = static_cast<std::size_t>(bw) * bh;

  std::vector<int> block_order(n_blocks);
  std::iota(block_order.begin(), block_order.end(), 0);
  std::sort(block_order.begin(), block_order.end(), [&](int a, int b) {
    return morton(static_cast<std::uint32_t>(a / bw), static_cast<std::uint32_t>(a % bw)) <
           morton(static_cast<std::uint32_t>(b / bw), static_cast<std::uint32_t>(b % bw));
  });
  std::vector<int> unit_of_block(n_blocks);
  for (std::size_t u = 0; u < n_blocks; ++u) unit_of_block[static_cast<std::size_t>(block_order[u])] = static_cast<int>(u);

  detail::PlanarModel model{&view};
  std::vector<detail::PlanarModel::Region> units(n_blocks);
  std::vector<int> unit_of_pixel(view.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const int u = unit_of_block[static_cast<std::size_t>((r / block) * bw + c / block)];
      unit_of_pixel[i] = u;
      model.add_pixel(units[static_cast<std::size_t>(u)], static_cast<std::int32_t>(i));
    }
  }
  for (auto& u : units) model.finalize(u);

  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      const int u = unit_of_block[static_cast<std::size_t>(r * bw + c)];
      if (c + 1 < bw) edges.emplace_back(u, unit_of_block[static_cast<std::size_t>(r * bw + c + 1)]);
      if (r + 1 < bh) edges.emplace_back(u, unit_of_block[static_cast<std::size_t>((r + 1) * bw + c)]);
    }
  }
  detail::GreedyMerger<detail::PlanarModel> merger(model, std::move(units), edges);
  const auto steps = merger.run(static_cast<std::size_t>(n_regions));
  const auto root = resolve_units(n_blocks, steps);
  std::vector<std::int32_t> labels(view.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = root[static_cast<std::size_t>(unit_of_pixel[i])];
  return connected_components(w, h, labels);
}

Partition intersect(const Partition& a, const Partition& b) {
  check_same_raster(a, b);
  return label_components(a.width(), a.height(), [&](std::int32_t p, std::int32_t q) {
    const auto pi = static_cast<std::size_t>(p);
    const auto qi = static_cast<std::size_t>(q);
    return a[pi] == a[qi] && b[pi] == b[qi];
  });
}

std::int64_t common_boundary_count(const Partition& p, int r1, int r2) {
  if (r1 < 0 || r2 < 0 || r1 >= p.region_count() || r2 >= p.region_count() || r1 == r2) {
    throw InvalidArgument("invalid region pair for boundary count");
  }
  std::int64_t count = 0;
  for (const auto& e : boundary_elements(p)) {
    const int la = p[static_cast<std::size_t>(e.first)];
    const int lb = p[static_cast<std::size_t>(e.second)];
    if ((la == r1 && lb == r2) || (la == r2 && lb == r1)) ++count;
  }
  return count;
}

std::map<std::pair<int, int>, std::int64_t> boundary_counts(const Partition& p) {
  std::map<std::pair<int, int>, std::int64_t> counts;
  for (const auto& e : boundary_elements(p)) {
    const int la = p[static_cast<std::size_t>(e.first)];
    const int lb = p[static_cast<std::size_t>(e.second)];
    ++counts[{std::min(la, lb), std::max(la, lb)}];
  }
  return counts;
}

bool refines(const Partition& fine, const Partition& coarse) {
  check_same_raster(fine, coarse);
  std::vector<std::int32_t> image(static_cast<std::size_t>(fine.region_count()), -1);
  for (std::size_t i = 0; i < fine.pixel_count(); ++i) {
    auto& slot = image[static_cast<std::size_t>(fine[i])];
    if (slot < 0) {
      slot = coarse[i];
    } else if (slot != coarse[i]) {
      return false;
    }
  }
  return true;
}

std::vector<TaggedBoundary> boundary_provenance(const Partition& p_cd, const Partition& lp_color,
                                                const Partition& lp_depth) {
  if (!refines(p_cd, lp_color) || !refines(p_cd, lp_depth)) {
    throw InvalidArgument("partition does not refine both leaf partitions");
  }
  std::vector<TaggedBoundary> out;
  for (const auto& e : boundary_elements(p_cd)) {
    const bool color = lp_color[static_cast<std::size_t>(e.first)] != lp_color[static_cast<std::size_t>(e.second)];
    out.push_back({e, color ? BoundaryTag::kColor : BoundaryTag::kDepth});
  }
  return out;
}

Gray16 partition_to_pgm(const Partition& p) {
  if (p.region_count() > 65536) throw InvalidArgument("too many regions for a 16-bit label map");
  Gray16 g{p.width(), p.height(), std::vector<std::uint16_t>(p.pixel_count())};
  for (std::size_t i = 0; i < p.pixel_count(); ++i) g.values[i] = static_cast<std::uint16_t>(p[i]);
  return g;
}

Partition partition_from_pgm(const Gray16& image) {
  std::vector<std::int32_t> labels(image.values.begin(), image.values.end());
  return connected_components(image.width, image.height, labels);
}

}  // namespace pdmc
