#pragma once

// Greedy pairwise region merging over a region adjacency graph. Candidate
// merges live in a binary heap keyed by (cost, merged size, min id, max id).
// A merge retires both ids and creates a fresh one, so heap entries that
// reference a retired id are skipped lazily.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <utility>
#include <vector>

namespace pdmc::detail {

struct MergeStep {
  int a = 0;
  int b = 0;
  int merged = 0;
  double cost = 0.0;
};

// Model requirements:
//   double cost(const Region& a, const Region& b);
//   Region merge(Region&& a, Region&& b);
//   std::size_t size(const Region& r);
template <class Model>
class GreedyMerger {
 public:
  using Region = typename Model::Region;

  GreedyMerger(Model& model, std::vector<Region> regions,
               const std::vector<std::pair<int, int>>& edges)
      : model_(model), regions_(std::move(regions)) {
    const std::size_t n = regions_.size();
    alive_.assign(n, 1);
    neighbors_.resize(n);
    for (const auto& [a, b] : edges) {
      if (a == b) continue;
      neighbors_[static_cast<std::size_t>(a)].push_back(b);
      neighbors_[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& list : neighbors_) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    alive_count_ = n;
    for (std::size_t a = 0; a < n; ++a) {
      for (int b : neighbors_[a]) {
        if (static_cast<int>(a) < b) push(static_cast<int>(a), b);
      }
    }
  }

  /// Merges until `target` regions remain or no adjacent pair is left. The
  /// merged region receives the next free id.
  std::vector<MergeStep> run(std::size_t target) {
    std::vector<MergeStep> steps;
    while (alive_count_ > target && !heap_.empty()) {
      const Candidate top = heap_.top();
      heap_.pop();
      if (!valid(top)) continue;
      steps.push_back(merge(top));
    }
    return steps;
  }

  const std::vector<Region>& regions() const { return regions_; }
  std::vector<Region>& regions() { return regions_; }
  bool alive(int id) const { return alive_[static_cast<std::size_t>(id)] != 0; }

 private:
  struct Candidate {
    double cost;
    std::size_t size;
    int a;  // a < b
    int b;

    // std::priority_queue is a max-heap, so "less" means "worse".
    bool operator<(const Candidate& o) const {
      if (cost != o.cost) return cost > o.cost;
      if (size != o.size) return size > o.size;
      if (a != o.a) return a > o.a;
      return b > o.b;
    }
  };

  void push(int a, int b) {
    if (a > b) std::swap(a, b);
    const auto& ra = regions_[static_cast<std::size_t>(a)];
    const auto& rb = regions_[static_cast<std::size_t>(b)];
    heap_.push({model_.cost(ra, rb), model_.size(ra) + model_.size(rb), a, b});
  }

  bool valid(const Candidate& c) const {
    return alive_[static_cast<std::size_t>(c.a)] && alive_[static_cast<std::size_t>(c.b)];
  }

  MergeStep merge(const Candidate& c) {
    const auto a = static_cast<std::size_t>(c.a);
    const auto b = static_cast<std::size_t>(c.b);
    const int id = static_cast<int>(regions_.size());
    Region merged = model_.merge(std::move(regions_[a]), std::move(regions_[b]));
    regions_[a] = Region{};
    regions_[b] = Region{};
    alive_[a] = alive_[b] = 0;

    std::vector<int> nb;
    nb.reserve(neighbors_[a].size() + neighbors_[b].size());
    std::set_union(neighbors_[a].begin(), neighbors_[a].end(), neighbors_[b].begin(),
                   neighbors_[b].end(), std::back_inserter(nb));
    std::erase_if(nb, [&](int x) { return x == c.a || x == c.b; });
    neighbors_[a].clear();
    neighbors_[a].shrink_to_fit();
    neighbors_[b].clear();
    neighbors_[b].shrink_to_fit();

    regions_.push_back(std::move(merged));
    alive_.push_back(1);
    neighbors_.push_back(nb);
    for (int x : nb) {
      auto& list = neighbors_[static_cast<std::size_t>(x)];
      std::erase_if(list, [&](int y) { return y == c.a || y == c.b; });
      list.push_back(id);  // id is the largest so far, order stays sorted
    }
    --alive_count_;
    for (int x : nb) push(x, id);
    return {c.a, c.b, id, c.cost};
  }

  Model& model_;
  std::vector<Region> regions_;
  std::vector<std::uint8_t> alive_;
  std::vector<std::vector<int>> neighbors_;
  std::priority_queue<Candidate> heap_;
  std::size_t alive_count_ = 0;
};

}  // namespace pdmc::detail
