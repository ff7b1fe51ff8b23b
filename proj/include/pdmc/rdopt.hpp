#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pdmc/hierarchy.hpp"

namespace pdmc {

/// Contour and texture rate model. Defaults: 1.2 bits per depth contour
/// element, colour contours free, 29 bits per plane (12 + 8 + 8 + 1 mode bit).
struct RateModel {
  double c_a = 1.2;
  double c_a_color = 0.0;
  double r_texture = 29.0;

  void validate() const;
};

/// Rate and distortion of coding one hierarchy node as a single region.
/// The contour rate charges half of every boundary element on the node's
/// perimeter, so that summing over a cut counts each active element once.
struct RdRecord {
  int node = 0;
  double distortion = 0.0;
  double rate_texture = 0.0;
  double rate_contour = 0.0;

  double rate() const { return rate_texture + rate_contour; }
  double cost(double lambda) const { return distortion + lambda * rate(); }
};

/// Boundary elements between two leaves, split by provenance.
struct LeafEdge {
  int a = 0;
  int b = 0;
  std::int64_t depth_elements = 0;
  std::int64_t color_elements = 0;
};

/// Boundary elements between the two children of every internal node.
struct NodeBoundary {
  std::int64_t depth_elements = 0;
  std::int64_t color_elements = 0;
};

/// Leaf adjacency of a partition tagged against the colour partition.
std::vector<LeafEdge> leaf_edges(const Partition& leaves, const Partition& lp_color);

/// Per internal node, the elements between its children (leaves stay zero).
std::vector<NodeBoundary> node_boundaries(const MergeTree& tree, std::span<const LeafEdge> edges);

std::vector<RdRecord> compute_records(const MergeTree& tree, std::span<const double> distortion,
                                      std::span<const LeafEdge> edges, const RateModel& model);

struct NodeDelta {
  double delta_d = 0.0;
  double delta_r = 0.0;
};

/// Distortion and rate increments of merging two children into their parent.
NodeDelta node_delta(const RdRecord& ch1, const RdRecord& ch2, const RdRecord& parent,
                     const NodeBoundary& boundary, const RateModel& model);

/// J(parent) - J(ch1) - J(ch2).
double q_value(const RdRecord& parent, const RdRecord& ch1, const RdRecord& ch2, double lambda);

/// Sum of record costs over the cut, accumulated in ascending node order.
double cut_cost(std::span<const RdRecord> records, const Cut& cut, double lambda);
double cut_rate(std::span<const RdRecord> records, const Cut& cut);
double cut_distortion(std::span<const RdRecord> records, const Cut& cut);

/// Bottom-up dynamic program; ties keep the parent.
Cut opt_lambda(const MergeTree& tree, std::span<const RdRecord> records, double lambda);

/// Exhaustive search over all cuts (at most 20 leaves). Ties prefer fewer
/// regions, then the lexicographically smaller node list.
Cut brute_force_opt(const MergeTree& tree, std::span<const RdRecord> records, double lambda);
/// Every cut of the tree (at most 20 leaves).
std::vector<Cut> enumerate_cuts(const MergeTree& tree);

/// Boundary-variable formulation over adjacent leaf pairs.
struct QsapProblem {
  std::vector<std::pair<int, int>> pairs;  // adjacent leaves, first < second
  std::vector<double> q;                   // objective weight per pair

  /// Pair variables that must share one value (the children's common boundary).
  struct SiblingGroup {
    int node = 0;
    std::vector<int> vars;  // N_c = vars.size()
  };
  /// Sum of inner variables <= N_m * sibling_var.
  struct MergeImplication {
    int node = 0;
    std::vector<int> inner_vars;  // N_m = inner_vars.size()
    int sibling_var = 0;
  };
  std::vector<SiblingGroup> sibling_groups;
  std::vector<MergeImplication> implications;

  /// sum_i q_i b_i.
  double objective(std::span<const std::uint8_t> active) const;
  /// objective(B) minus objective of the all-active (all leaves) matrix.
  double relative_objective(std::span<const std::uint8_t> active) const;
  bool feasible(std::span<const std::uint8_t> active) const;
  /// Active flag per pair for the partition described by a cut.
  std::vector<std::uint8_t> boundary_vector(const MergeTree& tree, const Cut& cut) const;
};

QsapProblem build_qsap(const MergeTree& tree, std::span<const RdRecord> records,
                       std::span<const LeafEdge> edges, double lambda);

struct LambdaSearchResult {
  double lambda = 0.0;
  Cut cut;
};

/// Smallest lambda (to bisection precision) whose optimal cut fits the bit
/// budget. Throws InvalidArgument when no lambda reaches the budget.
LambdaSearchResult lambda_search(const MergeTree& tree, std::span<const RdRecord> records,
                                 double budget_bits);

}  // namespace pdmc
