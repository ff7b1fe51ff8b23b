#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pdmc/hierarchy.hpp"
#include "pdmc/rdopt.hpp"
#include "pdmc/scene_io.hpp"

namespace pdmc::testing {

/// Small scene for fast tests.
SceneSpec small_spec(int width = 64, int height = 48, int n_views = 3, std::uint64_t seed = 3);

/// Random binary tree over `leaves` leaves built by merging random roots.
MergeTree random_tree(std::mt19937_64& rng, int leaves);

/// Random records with integer D and R for every node.
std::vector<RdRecord> random_records(std::mt19937_64& rng, const MergeTree& tree);

/// A connected random partition of a small grid and a tree built by merging
/// random adjacent regions, with integer distortions.
struct GridHierarchy {
  Partition leaves;
  Partition lp_color;
  Hierarchy hierarchy;
  std::vector<LeafEdge> edges;
  std::vector<RdRecord> records;
};
GridHierarchy random_grid_hierarchy(std::mt19937_64& rng, int max_leaves, const RateModel& model);

/// Partition from a label map given row by row.
Partition make_partition(int width, int height, const std::vector<std::int32_t>& labels);

}  // namespace pdmc::testing
