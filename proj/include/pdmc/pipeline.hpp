#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdmc/codec.hpp"
#include "pdmc/hierarchy.hpp"
#include "pdmc/multiview.hpp"
#include "pdmc/rdopt.hpp"

namespace pdmc {

enum class LeafMode : std::uint8_t { kColorPlusDepth, kColorOnly, kDepthOnly };

struct EncoderConfig {
  int n_regs_color = 300;
  int n_regs_depth = 300;
  RateModel rate;
  QuantConfig quant;
  HierarchyConfig hierarchy;
  /// Replace the RANSAC inlier threshold by 1% of each view's depth range.
  bool auto_ransac_threshold = true;
  /// Reference view index; negative selects n_views / 2.
  int ref_view = -1;
  /// When non-empty, replaces the depth leaf partition of every view.
  std::vector<Partition> depth_leaf_override;

  void validate() const;
};

/// Either a fixed lambda or a bit budget on the optimizer's modelled rate.
struct RateTarget {
  double lambda = 0.0;
  std::optional<double> budget_bits;
};

/// Leaf partitions of one view.
struct ViewLeaves {
  Partition lp_color;
  Partition lp_depth;
  Partition p_cd;
};
ViewLeaves view_leaves(const ViewBundle& view, const EncoderConfig& cfg, std::size_t view_index);

/// A hierarchy with its RD records.
struct RdHierarchy {
  Hierarchy hierarchy;
  std::vector<LeafEdge> edges;
  std::vector<RdRecord> records;
};
RdHierarchy rd_hierarchy(const Partition& leaves, const ViewBundle& view, const Partition& lp_color,
                         const EncoderConfig& cfg);

HierarchyConfig view_hierarchy_config(const EncoderConfig& cfg, const DepthMap& depth);

/// Leaf partitions and the hierarchy over the chosen leaf partition of one
/// view, reusable across rate targets.
struct PreparedView {
  LeafMode mode = LeafMode::kColorPlusDepth;
  ViewLeaves leaves;
  RdHierarchy rd;
};
PreparedView prepare_view(const ViewBundle& view, const EncoderConfig& cfg, std::size_t view_index,
                          LeafMode mode = LeafMode::kColorPlusDepth);

/// One view's partition to be coded, with a ref label and a world plane per region.
struct CodingView {
  Partition partition;
  std::vector<std::int32_t> ref_labels;  // -1 for regions coded independently
  std::vector<Plane3D> planes;
};

/// Encoder-side reconstruction of one view; the decoder must reproduce it.
struct ViewReconstruction {
  Partition lp_color;
  Partition partition;
  TextureSection texture;
  std::vector<Plane3D> planes;  // world frame, per region
  DepthMap depth;
  std::size_t added_depth_elements = 0;
};

struct EncodeResult {
  std::vector<std::uint8_t> stream;
  StreamHeader header;
  std::vector<ViewSections> sections;
  std::vector<ViewReconstruction> views;
  double lambda = 0.0;
  int ref_view = 0;
  /// Modelled rate of the selected cut in the final optimisation.
  double model_rate = 0.0;
};

/// Quantizes, predicts and serialises already optimised coding partitions.
/// Planes are predicted in view_coding_order(n, ref_view).
EncodeResult encode_coding_views(std::span<const ViewBundle> views, std::span<const Partition> lp_colors,
                                 std::span<const CodingView> coding, const EncoderConfig& cfg, double lambda,
                                 int ref_view = 0);

/// Two-stage single-view path: Opt on the colour+depth hierarchy, then Opt on
/// a hierarchy rebuilt over that result.
EncodeResult encode_single_view(const ViewBundle& view, const EncoderConfig& cfg, const RateTarget& target);
EncodeResult encode_single_view(const ViewBundle& view, const PreparedView& prepared, const EncoderConfig& cfg,
                                const RateTarget& target);

/// Joint path: per-view optimisation, fusion in the reference view, joint
/// optimisation and back-projection.
EncodeResult encode_multiview(std::span<const ViewBundle> views, const EncoderConfig& cfg,
                              const RateTarget& target);
EncodeResult encode_multiview(std::span<const ViewBundle> views, std::span<const PreparedView> prepared,
                              const EncoderConfig& cfg, const RateTarget& target);

/// One-stage optimisation of a single view over the chosen leaf partition.
EncodeResult encode_leaf_mode(const ViewBundle& view, LeafMode mode, const EncoderConfig& cfg,
                              const RateTarget& target);
EncodeResult encode_leaf_mode(const ViewBundle& view, const PreparedView& prepared, const EncoderConfig& cfg,
                              const RateTarget& target);

/// Merging-sequence baseline: the partition after the first L-k merges of the
/// prepared hierarchy (colour+depth when not given).
EncodeResult encode_merging_sequence(const ViewBundle& view, int k, const EncoderConfig& cfg);
EncodeResult encode_merging_sequence(const ViewBundle& view, const PreparedView& prepared, int k,
                                     const EncoderConfig& cfg);

/// Decoder-side calibration of one view.
struct ViewCalibration {
  Camera camera;
  double min_z = 1.0;
  double max_z = 2.0;
};

struct DecodeResult {
  StreamHeader header;
  std::vector<ViewReconstruction> views;
};

/// Throws DecodeError on malformed streams or colour/partition disagreement.
DecodeResult decode(std::span<const std::uint8_t> stream, std::span<const ColorImage> colors,
                    std::span<const ViewCalibration> calibrations);

}  // namespace pdmc
