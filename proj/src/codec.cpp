#include "pdmc/codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <zlib.h>

#include "pdmc/bitio.hpp"
#include "pdmc/error.hpp"

namespace pdmc {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr int kMaxQuantBits = 24;

void check_same_raster(const Partition& a, const Partition& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("partitions are on different rasters");
  }
}

std::uint32_t max_code(int bits) { return (1U << bits) - 1U; }

}  // namespace

void QuantConfig::validate() const {
  for (int b : {bits_theta, bits_phi, n_dist}) {
    if (b < 1 || b > kMaxQuantBits) throw InvalidArgument("quantizer bit counts must be in [1, 24]");
  }
}

double theta_step(const QuantConfig& cfg) { return (std::numbers::pi / 2.0) / static_cast<double>(1U << cfg.bits_theta); }
double phi_step(const QuantConfig& cfg) { return (2.0 * std::numbers::pi) / static_cast<double>(1U << cfg.bits_phi); }

double dist_from_code(std::uint32_t code, double min_z, double max_z, int n_dist) {
  const double levels = static_cast<double>(max_code(n_dist));
  return 1.0 / ((static_cast<double>(code) / levels) * (1.0 / min_z - 1.0 / max_z) + 1.0 / max_z);
}

std::uint32_t code_from_dist(double dist, double min_z, double max_z, int n_dist) {
  if (!(dist > 0.0) || !std::isfinite(dist)) throw InvalidArgument("plane distance must be positive");
  const double t = std::clamp((1.0 / dist - 1.0 / max_z) / (1.0 / min_z - 1.0 / max_z), 0.0, 1.0);
  return static_cast<std::uint32_t>(std::lround(t * static_cast<double>(max_code(n_dist))));
}

PlaneCode quantize_plane(const Plane3D& world_plane, const Camera& camera, double min_z, double max_z,
                         const QuantConfig& cfg) {
  cfg.validate();
  if (!(min_z > 0.0) || !(max_z > min_z)) throw InvalidArgument("invalid depth range");
  const Plane3D cam = to_camera_frame(world_plane, camera);
  if (!(cam.offset > 0.0)) throw InvalidArgument("plane passes behind or through the camera centre");
  const SphericalPlane s = plane_to_spherical(cam);
  PlaneCode code;
  code.theta_code = std::min(static_cast<std::uint32_t>(std::floor(s.theta / theta_step(cfg))), max_code(cfg.bits_theta));
  code.phi_code = static_cast<std::uint32_t>(std::floor(s.phi / phi_step(cfg))) & max_code(cfg.bits_phi);
  code.dist_code = code_from_dist(s.dist, min_z, max_z, cfg.n_dist);
  code.mode = PlaneMode::kIntra;
  return code;
}

Plane3D dequantize_plane(const PlaneCode& code, const Camera& camera, double min_z, double max_z,
                         const QuantConfig& cfg) {
  cfg.validate();
  if (code.mode != PlaneMode::kIntra) throw InvalidArgument("only INTRA codes carry coefficients");
  if (code.theta_code > max_code(cfg.bits_theta) || code.phi_code > max_code(cfg.bits_phi) ||
      code.dist_code > max_code(cfg.n_dist)) {
    throw InvalidArgument("plane code out of range");
  }
  SphericalPlane s;
  s.theta = (static_cast<double>(code.theta_code) + 0.5) * theta_step(cfg);
  s.phi = (static_cast<double>(code.phi_code) + 0.5) * phi_step(cfg);
  s.dist = dist_from_code(code.dist_code, min_z, max_z, cfg.n_dist);
  return to_world_frame(spherical_to_plane(s), camera);
}

std::vector<BoundaryElement> added_depth_elements(const Partition& p_cod, const Partition& lp_color) {
  check_same_raster(p_cod, lp_color);
  std::vector<BoundaryElement> out;
  for (const auto& e : boundary_elements(p_cod)) {
    if (lp_color[static_cast<std::size_t>(e.first)] == lp_color[static_cast<std::size_t>(e.second)]) out.push_back(e);
  }
  return out;
}

namespace {

// Crack edges between pixel corners. Corners are (row, col) with
// 0 <= row <= H and 0 <= col <= W.
class EdgeGrid {
 public:
  EdgeGrid(int width, int height)
      : w_(width), h_(height),
        vertical_(static_cast<std::size_t>(height) * (width + 1), 0),
        horizontal_(static_cast<std::size_t>(height + 1) * width, 0) {}

  // Edge slot leaving corner (r, c) in direction d (0 E, 1 S, 2 W, 3 N), or
  // nullptr when it leaves the corner grid.
  std::uint8_t* slot(int r, int c, int d) {
    switch (d) {
      case 0: return (r >= 0 && r <= h_ && c >= 0 && c < w_) ? &horizontal_[idx_h(r, c)] : nullptr;
      case 1: return (r >= 0 && r < h_ && c >= 0 && c <= w_) ? &vertical_[idx_v(r, c)] : nullptr;
      case 2: return (r >= 0 && r <= h_ && c >= 1 && c <= w_) ? &horizontal_[idx_h(r, c - 1)] : nullptr;
      default: return (r >= 1 && r <= h_ && c >= 0 && c <= w_) ? &vertical_[idx_v(r - 1, c)] : nullptr;
    }
  }
  // Interior edges are the only ones that separate two pixels.
  bool interior(int r, int c, int d) const {
    switch (d) {
      case 0: return r >= 1 && r < h_ && c >= 0 && c < w_;
      case 1: return c >= 1 && c < w_ && r >= 0 && r < h_;
      case 2: return r >= 1 && r < h_ && c >= 1 && c <= w_;
      default: return c >= 1 && c < w_ && r >= 1 && r <= h_;
    }
  }
  void set(const BoundaryElement& e) {
    const int r = e.first / w_;
    const int c = e.first % w_;
    if (e.second == e.first + 1 && c + 1 < w_) {
      vertical_[idx_v(r, c + 1)] = 1;
    } else if (e.second == e.first + w_) {
      horizontal_[idx_h(r + 1, c)] = 1;
    } else {
      throw InvalidArgument("boundary element does not join 4-adjacent pixels");
    }
  }
  std::vector<BoundaryElement> elements() const {
    std::vector<BoundaryElement> out;
    for (int r = 0; r < h_; ++r) {
      for (int c = 1; c < w_; ++c) {
        if (vertical_[idx_v(r, c)]) out.push_back({r * w_ + c - 1, r * w_ + c});
      }
    }
    for (int r = 1; r < h_; ++r) {
      for (int c = 0; c < w_; ++c) {
        if (horizontal_[idx_h(r, c)]) out.push_back({(r - 1) * w_ + c, r * w_ + c});
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t idx_v(int r, int c) const { return static_cast<std::size_t>(r) * (w_ + 1) + c; }
  std::size_t idx_h(int r, int c) const { return static_cast<std::size_t>(r) * w_ + c; }
  int w_;
  int h_;
  std::vector<std::uint8_t> vertical_;
  std::vector<std::uint8_t> horizontal_;
};

constexpr int kDr[4] = {0, 1, 0, -1};
constexpr int kDc[4] = {1, 0, -1, 0};
constexpr std::size_t kMinChainBits = 16 + 16 + 2 + 3;

void check_dims(int width, int height) {
  if (width < 1 || height < 1 || width > 65535 || height > 65535) {
    throw InvalidArgument("raster dimensions must be in [1, 65535]");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_chains(std::span<const BoundaryElement> elements, int width, int height) {
  check_dims(width, height);
  EdgeGrid grid(width, height);
  for (const auto& e : elements) {
    if (e.first < 0 || e.second >= width * height) throw InvalidArgument("boundary element outside raster");
    grid.set(e);
  }
  BitWriter bw;
  int cr = 0;
  int cc = 0;
  while (cr <= height) {
    int start_dir = -1;
    for (int d = 0; d < 4 && start_dir < 0; ++d) {
      const std::uint8_t* s = grid.slot(cr, cc, d);
      if (s != nullptr && *s) start_dir = d;
    }
    if (start_dir < 0) {
      if (++cc > width) {
        cc = 0;
        ++cr;
      }
      continue;
    }
    bw.put(static_cast<std::uint64_t>(cr), 16);
    bw.put(static_cast<std::uint64_t>(cc), 16);
    bw.put(static_cast<std::uint64_t>(start_dir), 2);
    int r = cr;
    int c = cc;
    int d = start_dir;
    *grid.slot(r, c, d) = 0;
    r += kDr[d];
    c += kDc[d];
    for (;;) {
      const int forward = d;
      const int left = (d + 3) % 4;
      const int right = (d + 1) % 4;
      std::uint8_t* s = nullptr;
      if ((s = grid.slot(r, c, forward)) && *s) {
        bw.put(0b0, 1);
        d = forward;
      } else if ((s = grid.slot(r, c, left)) && *s) {
        bw.put(0b10, 2);
        d = left;
      } else if ((s = grid.slot(r, c, right)) && *s) {
        bw.put(0b110, 3);
        d = right;
      } else {
        bw.put(0b111, 3);
        break;
      }
      *s = 0;
      r += kDr[d];
      c += kDc[d];
    }
  }
  return bw.finish();
}

std::vector<BoundaryElement> decode_chains(std::span<const std::uint8_t> bytes, int width, int height) {
  check_dims(width, height);
  EdgeGrid grid(width, height);
  BitReader br(bytes);
  const auto take_edge = [&](int r, int c, int d) {
    std::uint8_t* s = grid.slot(r, c, d);
    if (s == nullptr || !grid.interior(r, c, d)) throw DecodeError("chain leaves the image interior");
    if (*s) throw DecodeError("chain repeats an edge");
    *s = 1;
  };
  while (br.remaining() >= kMinChainBits) {
    int r = static_cast<int>(br.get(16));
    int c = static_cast<int>(br.get(16));
    int d = static_cast<int>(br.get(2));
    if (r > height || c > width) throw DecodeError("chain anchor outside the raster");
    take_edge(r, c, d);
    r += kDr[d];
    c += kDc[d];
    for (;;) {
      if (!br.get_bit()) {
        // forward
      } else if (!br.get_bit()) {
        d = (d + 3) % 4;
      } else if (!br.get_bit()) {
        d = (d + 1) % 4;
      } else {
        break;
      }
      take_edge(r, c, d);
      r += kDr[d];
      c += kDc[d];
    }
  }
  br.expect_zero_padding();
  return grid.elements();
}

std::vector<std::uint8_t> encode_depth_contours(const Partition& p_cod, const Partition& lp_color) {
  const auto added = added_depth_elements(p_cod, lp_color);
  return encode_chains(added, p_cod.width(), p_cod.height());
}

std::vector<BoundaryElement> decode_depth_contours(std::span<const std::uint8_t> bytes,
                                                   const Partition& lp_color) {
  auto elements = decode_chains(bytes, lp_color.width(), lp_color.height());
  for (const auto& e : elements) {
    if (lp_color[static_cast<std::size_t>(e.first)] != lp_color[static_cast<std::size_t>(e.second)]) {
      throw DecodeError("depth chain runs along a colour boundary");
    }
  }
  return elements;
}

std::vector<std::pair<int, int>> color_pairs(const Partition& lp_color) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [pair, count] : boundary_counts(lp_color)) out.push_back(pair);
  return out;
}

std::vector<std::uint8_t> active_flags(const Partition& p_cod, const Partition& lp_color) {
  check_same_raster(p_cod, lp_color);
  const auto pairs = color_pairs(lp_color);
  std::vector<std::uint8_t> flags(pairs.size(), 0);
  for (const auto& e : boundary_elements(lp_color)) {
    const auto i = static_cast<std::size_t>(e.first);
    const auto j = static_cast<std::size_t>(e.second);
    if (p_cod[i] == p_cod[j]) continue;
    const std::pair<int, int> key{std::min(lp_color[i], lp_color[j]), std::max(lp_color[i], lp_color[j])};
    const auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
    flags[static_cast<std::size_t>(it - pairs.begin())] = 1;
  }
  return flags;
}

std::vector<std::uint8_t> encode_active_boundaries(const Partition& p_cod, const Partition& lp_color) {
  BitWriter bw;
  for (std::uint8_t f : active_flags(p_cod, lp_color)) bw.put_bit(f != 0);
  return bw.finish();
}

std::vector<std::uint8_t> decode_active_boundaries(std::span<const std::uint8_t> bytes,
                                                   const Partition& lp_color) {
  const std::size_t n = color_pairs(lp_color).size();
  if (bytes.size() != (n + 7) / 8) throw DecodeError("active-boundary section has the wrong length");
  BitReader br(bytes);
  std::vector<std::uint8_t> flags(n);
  for (auto& f : flags) f = br.get_bit() ? 1 : 0;
  br.expect_zero_padding();
  return flags;
}

Partition reconstruct_partition(const Partition& lp_color, std::span<const std::uint8_t> active,
                                std::span<const BoundaryElement> depth_elements) {
  const int w = lp_color.width();
  const int h = lp_color.height();
  const auto pairs = color_pairs(lp_color);
  if (active.size() != pairs.size()) throw InvalidArgument("one active flag per colour pair is required");

  const std::size_t n = lp_color.pixel_count();
  std::vector<std::uint8_t> cut_right(n, 0);
  std::vector<std::uint8_t> cut_down(n, 0);
  for (const auto& e : depth_elements) {
    const auto i = static_cast<std::size_t>(e.first);
    if (e.second == e.first + 1) {
      cut_right[i] = 1;
    } else if (e.second == e.first + w) {
      cut_down[i] = 1;
    } else {
      throw InvalidArgument("boundary element does not join 4-adjacent pixels");
    }
  }
  const auto color_cut = [&](std::size_t i, std::size_t j) {
    const int a = lp_color[i];
    const int b = lp_color[j];
    if (a == b) return false;
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    const auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
    return active[static_cast<std::size_t>(it - pairs.begin())] != 0;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto i = static_cast<std::size_t>(r) * w + c;
      if (c + 1 < w && color_cut(i, i + 1)) cut_right[i] = 1;
      if (r + 1 < h && color_cut(i, i + static_cast<std::size_t>(w))) cut_down[i] = 1;
    }
  }

  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::size_t> stack;
  std::int32_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(i / static_cast<std::size_t>(w));
      const int c = static_cast<int>(i % static_cast<std::size_t>(w));
      const auto visit = [&](std::size_t j) {
        if (comp[j] < 0) {
          comp[j] = next;
          stack.push_back(j);
        }
      };
      if (c + 1 < w && !cut_right[i]) visit(i + 1);
      if (c > 0 && !cut_right[i - 1]) visit(i - 1);
      if (r + 1 < h && !cut_down[i]) visit(i + static_cast<std::size_t>(w));
      if (r > 0 && !cut_down[i - static_cast<std::size_t>(w)]) visit(i - static_cast<std::size_t>(w));
    }
    ++next;
  }
  return connected_components(w, h, comp);
}

ModeDecision choose_mode(std::span<const std::int32_t> pixels, const kernels::ViewGeometry& view,
                         const Plane3D& intra_plane, const std::optional<Plane3D>& predicted,
                         double lambda, const QuantConfig& cfg) {
  ModeDecision m;
  m.sse_intra = kernels::region_sse(intra_plane, pixels, view);
  if (!predicted) return m;
  m.sse_predicted = kernels::region_sse(*predicted, pixels, view);
  const double intra_cost = m.sse_intra + lambda * (1.0 + cfg.coefficient_bits());
  const double skip_cost = m.sse_predicted + lambda * 1.0;
  if (skip_cost <= intra_cost) m.mode = PlaneMode::kSkip;
  return m;
}

std::vector<int> coding_order(std::span<const std::int32_t> ref_labels) {
  std::vector<int> order(ref_labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ra = ref_labels[static_cast<std::size_t>(a)];
    const auto rb = ref_labels[static_cast<std::size_t>(b)];
    if ((ra < 0) != (rb < 0)) return rb < 0;
    return ra < rb;
  });
  return order;
}

std::vector<std::uint8_t> encode_texture(const TextureSection& t, const QuantConfig& cfg) {
  cfg.validate();
  if (t.ref_labels.size() != t.codes.size()) throw InvalidArgument("texture section arrays differ in length");
  ByteWriter out;
  out.varint(t.ref_labels.size());
  for (const auto ref : t.ref_labels) out.varint(ref < 0 ? 0 : static_cast<std::uint64_t>(ref) + 1);
  BitWriter bw;
  for (int region : coding_order(t.ref_labels)) {
    const PlaneCode& code = t.codes[static_cast<std::size_t>(region)];
    bw.put_bit(code.mode == PlaneMode::kSkip);
    if (code.mode == PlaneMode::kIntra) {
      bw.put(code.theta_code, cfg.bits_theta);
      bw.put(code.phi_code, cfg.bits_phi);
      bw.put(code.dist_code, cfg.n_dist);
    }
  }
  out.append(bw.finish());
  return out.take();
}

TextureSection decode_texture(std::span<const std::uint8_t> bytes, const QuantConfig& cfg) {
  ByteReader in(bytes);
  const std::uint64_t count = in.varint();
  if (count > in.remaining()) throw DecodeError("texture region count exceeds section size");
  TextureSection t;
  t.ref_labels.resize(count);
  t.codes.resize(count);
  for (auto& ref : t.ref_labels) {
    const std::uint64_t v = in.varint();
    if (v > static_cast<std::uint64_t>(INT32_MAX)) throw DecodeError("ref label out of range");
    ref = static_cast<std::int32_t>(v) - 1;
  }
  BitReader br(in.take(in.remaining()));
  for (int region : coding_order(t.ref_labels)) {
    PlaneCode& code = t.codes[static_cast<std::size_t>(region)];
    if (br.get_bit()) {
      code.mode = PlaneMode::kSkip;
    } else {
      code.theta_code = static_cast<std::uint32_t>(br.get(cfg.bits_theta));
      code.phi_code = static_cast<std::uint32_t>(br.get(cfg.bits_phi));
      code.dist_code = static_cast<std::uint32_t>(br.get(cfg.n_dist));
    }
  }
  br.expect_zero_padding();
  return t;
}

std::vector<std::uint8_t> serialize_stream(const StreamHeader& header, std::span<const ViewSections> views) {
  header.quant.validate();
  if (header.n_views < 1 || header.n_views > 255 || static_cast<std::size_t>(header.n_views) != views.size()) {
    throw InvalidArgument("view count must match the sections and fit in one byte");
  }
  if (header.n_regs_color < 1 || header.n_regs_color > 65535) throw InvalidArgument("n_regs_color out of range");
  if (header.ref_view < 0 || header.ref_view >= header.n_views) throw InvalidArgument("reference view out of range");
  check_dims(header.width, header.height);
  ByteWriter out;
  for (char ch : {'P', 'D', 'M', 'C'}) out.u8(static_cast<std::uint8_t>(ch));
  out.u8(kVersion);
  out.u8(static_cast<std::uint8_t>(header.n_views));
  out.u8(static_cast<std::uint8_t>(header.ref_view));
  out.u16(static_cast<std::uint16_t>(header.n_regs_color));
  out.u8(static_cast<std::uint8_t>(header.quant.bits_theta));
  out.u8(static_cast<std::uint8_t>(header.quant.bits_phi));
  out.u8(static_cast<std::uint8_t>(header.quant.n_dist));
  out.u16(static_cast<std::uint16_t>(header.width));
  out.u16(static_cast<std::uint16_t>(header.height));
  for (const ViewSections& v : views) {
    for (const auto* section : {&v.chains, &v.active, &v.texture}) {
      out.u32(static_cast<std::uint32_t>(section->size()));
      out.append(*section);
    }
  }
  const auto& body = out.bytes();
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), body.data(), static_cast<uInt>(body.size()));
  out.u32(static_cast<std::uint32_t>(crc));
  return out.take();
}

std::vector<int> view_coding_order(int n_views, int ref_view) {
  std::vector<int> order{ref_view};
  for (int v = 0; v < n_views; ++v) {
    if (v != ref_view) order.push_back(v);
  }
  return order;
}

ParsedStream parse_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + kTrailerBytes) throw DecodeError("stream shorter than its header");
  const auto body = bytes.first(bytes.size() - kTrailerBytes);
  ByteReader trailer(bytes.last(kTrailerBytes));
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), body.data(), static_cast<uInt>(body.size()));
  if (trailer.u32() != static_cast<std::uint32_t>(crc)) throw DecodeError("checksum mismatch");

  ByteReader in(body);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), "PDMC")) throw DecodeError("bad magic");
  if (in.u8() != kVersion) throw DecodeError("unsupported version");
  ParsedStream ps;
  ps.header.n_views = in.u8();
  ps.header.ref_view = in.u8();
  ps.header.n_regs_color = in.u16();
  ps.header.quant.bits_theta = in.u8();
  ps.header.quant.bits_phi = in.u8();
  ps.header.quant.n_dist = in.u8();
  ps.header.width = in.u16();
  ps.header.height = in.u16();
  if (ps.header.n_views < 1) throw DecodeError("stream has no views");
  if (ps.header.ref_view >= ps.header.n_views) throw DecodeError("reference view out of range");
  if (ps.header.n_regs_color < 1) throw DecodeError("n_regs_color must be positive");
  if (ps.header.width < 1 || ps.header.height < 1) throw DecodeError("empty raster");
  try {
    ps.header.quant.validate();
  } catch (const InvalidArgument&) {
    throw DecodeError("quantizer bit counts out of range");
  }
  for (int v = 0; v < ps.header.n_views; ++v) {
    ViewSections s;
    for (auto* section : {&s.chains, &s.active, &s.texture}) {
      const std::uint32_t len = in.u32();
      const auto data = in.take(len);
      section->assign(data.begin(), data.end());
    }
    ps.views.push_back(std::move(s));
  }
  if (in.remaining() != 0) throw DecodeError("trailing bytes after the last view");
  return ps;
}

}  // namespace pdmc
