#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pdmc/geometry.hpp"
#include "pdmc/kernels.hpp"
#include "pdmc/partition.hpp"

namespace pdmc {

struct QuantConfig {
  int bits_theta = 8;
  int bits_phi = 8;
  int n_dist = 12;

  void validate() const;
  /// Coefficient payload of one INTRA plane.
  int coefficient_bits() const { return bits_theta + bits_phi + n_dist; }
  bool operator==(const QuantConfig&) const = default;
};

enum class PlaneMode : std::uint8_t { kIntra = 0, kSkip = 1 };

struct PlaneCode {
  std::uint32_t theta_code = 0;
  std::uint32_t phi_code = 0;
  std::uint32_t dist_code = 0;
  PlaneMode mode = PlaneMode::kIntra;

  bool operator==(const PlaneCode&) const = default;
};

/// Quantizes a world-frame plane in the frame of `camera`. Throws
/// InvalidArgument when the camera centre is not strictly on the side the
/// normal points away from (offset <= 0 after canonicalisation).
PlaneCode quantize_plane(const Plane3D& world_plane, const Camera& camera, double min_z, double max_z,
                         const QuantConfig& cfg);
/// World-frame plane of an INTRA code. Throws InvalidArgument on out-of-range codes.
Plane3D dequantize_plane(const PlaneCode& code, const Camera& camera, double min_z, double max_z,
                         const QuantConfig& cfg);

/// Quantizer steps and reconstruction levels.
double theta_step(const QuantConfig& cfg);
double phi_step(const QuantConfig& cfg);
double dist_from_code(std::uint32_t code, double min_z, double max_z, int n_dist);
std::uint32_t code_from_dist(double dist, double min_z, double max_z, int n_dist);

/// Boundary elements of `p_cod` whose pixels lie in one colour region.
std::vector<BoundaryElement> added_depth_elements(const Partition& p_cod, const Partition& lp_color);

/// Crack-edge chain coding of a set of interior boundary elements.
std::vector<std::uint8_t> encode_chains(std::span<const BoundaryElement> elements, int width, int height);
/// Inverse of encode_chains; the result is sorted. Throws DecodeError on malformed input.
std::vector<BoundaryElement> decode_chains(std::span<const std::uint8_t> bytes, int width, int height);

std::vector<std::uint8_t> encode_depth_contours(const Partition& p_cod, const Partition& lp_color);
/// Decoded elements, checked to lie inside colour regions of `lp_color`.
std::vector<BoundaryElement> decode_depth_contours(std::span<const std::uint8_t> bytes,
                                                   const Partition& lp_color);

/// Adjacent colour region pairs in ascending (min, max) order.
std::vector<std::pair<int, int>> color_pairs(const Partition& lp_color);
/// One flag per colour pair: 1 when any element between the pair survives in p_cod.
std::vector<std::uint8_t> active_flags(const Partition& p_cod, const Partition& lp_color);
std::vector<std::uint8_t> encode_active_boundaries(const Partition& p_cod, const Partition& lp_color);
std::vector<std::uint8_t> decode_active_boundaries(std::span<const std::uint8_t> bytes,
                                                   const Partition& lp_color);

/// Decoder-side partition: colour boundaries of active pairs plus the depth
/// elements, closed by connected components.
Partition reconstruct_partition(const Partition& lp_color, std::span<const std::uint8_t> active,
                                std::span<const BoundaryElement> depth_elements);

struct ModeDecision {
  PlaneMode mode = PlaneMode::kIntra;
  double sse_intra = 0.0;
  double sse_predicted = 0.0;
};

/// SKIP when sse(predicted) + lambda * 1 <= sse(intra) + lambda * (1 + coefficient bits).
ModeDecision choose_mode(std::span<const std::int32_t> pixels, const kernels::ViewGeometry& view,
                         const Plane3D& intra_plane, const std::optional<Plane3D>& predicted,
                         double lambda, const QuantConfig& cfg);

/// Per-region texture data of one view. Regions are indexed by partition label.
struct TextureSection {
  std::vector<std::int32_t> ref_labels;  // -1 for occluded regions
  std::vector<PlaneCode> codes;

  bool operator==(const TextureSection&) const = default;
};

/// Coding order: ascending ref label (ties by region label), occluded regions last.
std::vector<int> coding_order(std::span<const std::int32_t> ref_labels);
std::vector<std::uint8_t> encode_texture(const TextureSection& t, const QuantConfig& cfg);
TextureSection decode_texture(std::span<const std::uint8_t> bytes, const QuantConfig& cfg);

struct StreamHeader {
  int n_views = 0;
  int n_regs_color = 0;
  int ref_view = 0;  // predicted first
  QuantConfig quant;
  int width = 0;
  int height = 0;

  bool operator==(const StreamHeader&) const = default;
};

struct ViewSections {
  std::vector<std::uint8_t> chains;
  std::vector<std::uint8_t> active;
  std::vector<std::uint8_t> texture;

  bool operator==(const ViewSections&) const = default;
};

inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr std::size_t kSectionPrefixBytes = 4;
inline constexpr std::size_t kTrailerBytes = 4;

std::vector<std::uint8_t> serialize_stream(const StreamHeader& header, std::span<const ViewSections> views);

struct ParsedStream {
  StreamHeader header;
  std::vector<ViewSections> views;
};
/// Order in which views are predicted: the reference view, then the others ascending.
std::vector<int> view_coding_order(int n_views, int ref_view);
/// Throws DecodeError on any framing, length or checksum problem.
ParsedStream parse_stream(std::span<const std::uint8_t> bytes);

}  // namespace pdmc
