#include "pdmc/rdopt.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pdmc/error.hpp"

namespace pdmc {

void RateModel::validate() const {
  if (!(c_a > 0.0)) throw InvalidArgument("contour cost c_a must be positive");
  if (c_a_color < 0.0) throw InvalidArgument("colour contour cost must be non-negative");
  if (!(r_texture > 0.0)) throw InvalidArgument("texture rate must be positive");
}

std::vector<LeafEdge> leaf_edges(const Partition& leaves, const Partition& lp_color) {
  if (leaves.width() != lp_color.width() || leaves.height() != lp_color.height()) {
    throw InvalidArgument("partitions have different dimensions");
  }
  std::map<std::pair<int, int>, LeafEdge> acc;
  for (const auto& e : boundary_elements(leaves)) {
    const auto i = static_cast<std::size_t>(e.first);
    const auto j = static_cast<std::size_t>(e.second);
    const int a = std::min(leaves[i], leaves[j]);
    const int b = std::max(leaves[i], leaves[j]);
    LeafEdge& edge = acc[{a, b}];
    edge.a = a;
    edge.b = b;
    if (lp_color[i] != lp_color[j]) {
      ++edge.color_elements;
    } else {
      ++edge.depth_elements;
    }
  }
  std::vector<LeafEdge> out;
  out.reserve(acc.size());
  for (const auto& [key, edge] : acc) out.push_back(edge);
  return out;
}

std::vector<NodeBoundary> node_boundaries(const MergeTree& tree, std::span<const LeafEdge> edges) {
  std::vector<NodeBoundary> out(static_cast<std::size_t>(tree.node_count()));
  for (const LeafEdge& e : edges) {
    if (e.a == e.b) continue;
    const int k = tree.lca(e.a, e.b);
    out[static_cast<std::size_t>(k)].depth_elements += e.depth_elements;
    out[static_cast<std::size_t>(k)].color_elements += e.color_elements;
  }
  return out;
}

std::vector<RdRecord> compute_records(const MergeTree& tree, std::span<const double> distortion,
                                      std::span<const LeafEdge> edges, const RateModel& model) {
  model.validate();
  const auto n = static_cast<std::size_t>(tree.node_count());
  if (distortion.size() != n) throw InvalidArgument("one distortion value per node is required");

  // Perimeter element counts, split by provenance.
  std::vector<std::int64_t> per_depth(n, 0);
  std::vector<std::int64_t> per_color(n, 0);
  for (const LeafEdge& e : edges) {
    for (int leaf : {e.a, e.b}) {
      per_depth[static_cast<std::size_t>(leaf)] += e.depth_elements;
      per_color[static_cast<std::size_t>(leaf)] += e.color_elements;
    }
  }
  const auto inner = node_boundaries(tree, edges);
  for (int k = tree.leaf_count(); k < tree.node_count(); ++k) {
    const TreeNode& nd = tree.node(k);
    const auto ki = static_cast<std::size_t>(k);
    per_depth[ki] = per_depth[static_cast<std::size_t>(nd.left)] + per_depth[static_cast<std::size_t>(nd.right)] -
                    2 * inner[ki].depth_elements;
    per_color[ki] = per_color[static_cast<std::size_t>(nd.left)] + per_color[static_cast<std::size_t>(nd.right)] -
                    2 * inner[ki].color_elements;
  }

  std::vector<RdRecord> records(n);
  for (std::size_t k = 0; k < n; ++k) {
    RdRecord& r = records[k];
    r.node = static_cast<int>(k);
    r.distortion = distortion[k];
    r.rate_texture = model.r_texture;
    r.rate_contour = 0.5 * (model.c_a * static_cast<double>(per_depth[k]) +
                            model.c_a_color * static_cast<double>(per_color[k]));
  }
  return records;
}

NodeDelta node_delta(const RdRecord& ch1, const RdRecord& ch2, const RdRecord& parent,
                     const NodeBoundary& boundary, const RateModel& model) {
  NodeDelta d;
  d.delta_d = parent.distortion - ch1.distortion - ch2.distortion;
  d.delta_r = -model.c_a * static_cast<double>(boundary.depth_elements) -
              model.c_a_color * static_cast<double>(boundary.color_elements) - model.r_texture;
  return d;
}

double q_value(const RdRecord& parent, const RdRecord& ch1, const RdRecord& ch2, double lambda) {
  return parent.cost(lambda) - (ch1.cost(lambda) + ch2.cost(lambda));
}

namespace {

std::vector<int> sorted_nodes(const Cut& cut) {
  std::vector<int> nodes = cut.nodes;
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

void check_records(const MergeTree& tree, std::span<const RdRecord> records) {
  if (records.size() != static_cast<std::size_t>(tree.node_count())) {
    throw InvalidArgument("one record per node is required");
  }
}

}  // namespace

double cut_cost(std::span<const RdRecord> records, const Cut& cut, double lambda) {
  double total = 0.0;
  for (int k : sorted_nodes(cut)) total += records[static_cast<std::size_t>(k)].cost(lambda);
  return total;
}

double cut_rate(std::span<const RdRecord> records, const Cut& cut) {
  double total = 0.0;
  for (int k : sorted_nodes(cut)) total += records[static_cast<std::size_t>(k)].rate();
  return total;
}

double cut_distortion(std::span<const RdRecord> records, const Cut& cut) {
  double total = 0.0;
  for (int k : sorted_nodes(cut)) total += records[static_cast<std::size_t>(k)].distortion;
  return total;
}

Cut opt_lambda(const MergeTree& tree, std::span<const RdRecord> records, double lambda) {
  check_records(tree, records);
  if (lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
  const auto n = static_cast<std::size_t>(tree.node_count());
  std::vector<double> best(n);
  std::vector<std::uint8_t> keep(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const TreeNode& nd = tree.node(static_cast<int>(k));
    const double own = records[k].cost(lambda);
    if (nd.is_leaf()) {
      best[k] = own;
      continue;
    }
    const double below = best[static_cast<std::size_t>(nd.left)] + best[static_cast<std::size_t>(nd.right)];
    if (own <= below) {
      best[k] = own;
    } else {
      best[k] = below;
      keep[k] = 0;
    }
  }
  Cut cut;
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    if (keep[static_cast<std::size_t>(k)]) {
      cut.nodes.push_back(k);
    } else {
      stack.push_back(tree.node(k).left);
      stack.push_back(tree.node(k).right);
    }
  }
  std::sort(cut.nodes.begin(), cut.nodes.end());
  return cut;
}

std::vector<Cut> enumerate_cuts(const MergeTree& tree) {
  if (tree.leaf_count() > 20) throw InvalidArgument("exhaustive cut search is limited to 20 leaves");
  if (!tree.complete()) throw InvalidArgument("tree is not complete");
  std::vector<std::vector<std::vector<int>>> cuts(static_cast<std::size_t>(tree.node_count()));
  for (int k = 0; k < tree.node_count(); ++k) {
    auto& mine = cuts[static_cast<std::size_t>(k)];
    mine.push_back({k});
    const TreeNode& nd = tree.node(k);
    if (nd.is_leaf()) continue;
    for (const auto& a : cuts[static_cast<std::size_t>(nd.left)]) {
      for (const auto& b : cuts[static_cast<std::size_t>(nd.right)]) {
        std::vector<int> merged = a;
        merged.insert(merged.end(), b.begin(), b.end());
        std::sort(merged.begin(), merged.end());
        mine.push_back(std::move(merged));
      }
    }
  }
  std::vector<Cut> out;
  for (auto& nodes : cuts[static_cast<std::size_t>(tree.root())]) out.push_back(Cut{std::move(nodes)});
  return out;
}

Cut brute_force_opt(const MergeTree& tree, std::span<const RdRecord> records, double lambda) {
  check_records(tree, records);
  const auto all = enumerate_cuts(tree);
  const Cut* best = nullptr;
  double best_cost = 0.0;
  for (const Cut& c : all) {
    const double cost = cut_cost(records, c, lambda);
    const bool better = best == nullptr || cost < best_cost ||
                        (cost == best_cost && (c.nodes.size() < best->nodes.size() ||
                                               (c.nodes.size() == best->nodes.size() && c.nodes < best->nodes)));
    if (better) {
      best = &c;
      best_cost = cost;
    }
  }
  return *best;
}

double QsapProblem::objective(std::span<const std::uint8_t> active) const {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += active[i] ? q[i] : 0.0;
  return total;
}

double QsapProblem::relative_objective(std::span<const std::uint8_t> active) const {
  // Differences are accumulated directly to avoid cancellation between two sums.
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total -= active[i] ? 0.0 : q[i];
  return total;
}

bool QsapProblem::feasible(std::span<const std::uint8_t> active) const {
  if (active.size() != pairs.size()) return false;
  for (const auto& g : sibling_groups) {
    for (int v : g.vars) {
      if (active[static_cast<std::size_t>(v)] != active[static_cast<std::size_t>(g.vars.front())]) return false;
    }
  }
  for (const auto& m : implications) {
    std::size_t sum = 0;
    for (int v : m.inner_vars) sum += active[static_cast<std::size_t>(v)];
    if (sum > m.inner_vars.size() * active[static_cast<std::size_t>(m.sibling_var)]) return false;
  }
  return true;
}

std::vector<std::uint8_t> QsapProblem::boundary_vector(const MergeTree& tree, const Cut& cut) const {
  const auto owner = leaf_to_cut_index(tree, cut);
  std::vector<std::uint8_t> b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    b[i] = owner[static_cast<std::size_t>(pairs[i].first)] != owner[static_cast<std::size_t>(pairs[i].second)];
  }
  return b;
}

QsapProblem build_qsap(const MergeTree& tree, std::span<const RdRecord> records,
                       std::span<const LeafEdge> edges, double lambda) {
  check_records(tree, records);
  QsapProblem prob;
  std::vector<int> owner_node;  // lca of each pair
  for (const LeafEdge& e : edges) {
    if (e.a == e.b) continue;
    prob.pairs.emplace_back(std::min(e.a, e.b), std::max(e.a, e.b));
    owner_node.push_back(tree.lca(e.a, e.b));
  }
  prob.q.assign(prob.pairs.size(), 0.0);

  const auto n = static_cast<std::size_t>(tree.node_count());
  std::vector<std::vector<int>> group(n);
  for (std::size_t i = 0; i < owner_node.size(); ++i) group[static_cast<std::size_t>(owner_node[i])].push_back(static_cast<int>(i));

  for (int k = tree.leaf_count(); k < tree.node_count(); ++k) {
    const auto& vars = group[static_cast<std::size_t>(k)];
    if (vars.empty()) throw InvalidArgument("children of a hierarchy node are not adjacent");
    const TreeNode& nd = tree.node(k);
    const double qk = q_value(records[static_cast<std::size_t>(k)], records[static_cast<std::size_t>(nd.left)],
                              records[static_cast<std::size_t>(nd.right)], lambda);
    // Deactivating the N_c sibling boundaries together contributes qk.
    for (int v : vars) prob.q[static_cast<std::size_t>(v)] = -qk / static_cast<double>(vars.size());
    prob.sibling_groups.push_back({k, vars});

    QsapProblem::MergeImplication imp;
    imp.node = k;
    imp.sibling_var = vars.front();
    for (std::size_t i = 0; i < owner_node.size(); ++i) {
      const int o = owner_node[i];
      if (o == k) continue;
      // Inner pair: its lca lies strictly below k.
      int x = o;
      while (x >= 0 && x < k) x = tree.node(x).parent;
      if (x == k) imp.inner_vars.push_back(static_cast<int>(i));
    }
    prob.implications.push_back(std::move(imp));
  }
  return prob;
}

LambdaSearchResult lambda_search(const MergeTree& tree, std::span<const RdRecord> records,
                                 double budget_bits) {
  check_records(tree, records);
  const auto rate_at = [&](double lambda) {
    Cut c = opt_lambda(tree, records, lambda);
    const double r = cut_rate(records, c);
    return std::pair{std::move(c), r};
  };
  auto [cut0, rate0] = rate_at(0.0);
  if (rate0 <= budget_bits) return {0.0, std::move(cut0)};

  double hi = 1.0;
  auto [hi_cut, hi_rate] = rate_at(hi);
  int guard = 0;
  while (hi_rate > budget_bits) {
    if (++guard > 200) throw InvalidArgument("bit budget is below the smallest achievable rate");
    hi *= 2.0;
    std::tie(hi_cut, hi_rate) = rate_at(hi);
  }
  double lo = 0.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    auto [mid_cut, mid_rate] = rate_at(mid);
    if (mid_rate <= budget_bits) {
      hi = mid;
      hi_cut = std::move(mid_cut);
    } else {
      lo = mid;
    }
  }
  return {hi, std::move(hi_cut)};
}

}  // namespace pdmc
