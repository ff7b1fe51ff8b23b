#include <benchmark/benchmark.h>

#include "pdmc/hierarchy.hpp"
#include "pdmc/kernels.hpp"
#include "pdmc/partition.hpp"
#include "pdmc/scene_io.hpp"

namespace {

using namespace pdmc;

struct Fixture {
  std::vector<ViewBundle> views;
  Hierarchy h;
  std::vector<std::vector<std::int32_t>> lists;
  kernels::ViewGeometry geom;

  Fixture() {
    SceneSpec spec;
    spec.width = 320;
    spec.height = 240;
    views = generate_scene(spec);
    const ViewBundle& v = views[1];
    const Partition leaves = leaf_depth_partition(v.depth, v.camera, 300);
    h = build_bpt(leaves, v.depth, v.camera, HierarchyConfig{});
    lists = node_pixel_lists(h.tree, h.leaves);
    geom = kernels::ViewGeometry(v.depth, v.camera);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_NodeSseSerial(benchmark::State& state) {
  auto& f = fixture();
  std::vector<double> out(f.h.planes.size());
  for (auto _ : state) {
    kernels::node_sse_serial(f.h.planes, f.lists, f.geom, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_NodeSseParallel(benchmark::State& state) {
  auto& f = fixture();
  std::vector<double> out(f.h.planes.size());
  for (auto _ : state) {
    kernels::node_sse_parallel(f.h.planes, f.lists, f.geom, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_RenderSerial(benchmark::State& state) {
  auto& f = fixture();
  const ViewBundle& v = f.views[1];
  std::vector<float> out(v.depth.size());
  for (auto _ : state) {
    kernels::render_planes_serial(f.h.leaves.labels(), std::span(f.h.planes).first(f.h.leaf_count()), v.camera,
                                  v.depth.min_z, v.depth.max_z, out, v.depth.width);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_RenderParallel(benchmark::State& state) {
  auto& f = fixture();
  const ViewBundle& v = f.views[1];
  std::vector<float> out(v.depth.size());
  for (auto _ : state) {
    kernels::render_planes_parallel(f.h.leaves.labels(), std::span(f.h.planes).first(f.h.leaf_count()), v.camera,
                                    v.depth.min_z, v.depth.max_z, out, v.depth.width);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_WarpSerial(benchmark::State& state) {
  auto& f = fixture();
  std::vector<kernels::WarpTarget> out(f.views[0].depth.size());
  for (auto _ : state) {
    kernels::warp_serial(f.views[0].depth, f.views[0].camera, f.views[1].camera, 320, 240, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_WarpParallel(benchmark::State& state) {
  auto& f = fixture();
  std::vector<kernels::WarpTarget> out(f.views[0].depth.size());
  for (auto _ : state) {
    kernels::warp_parallel(f.views[0].depth, f.views[0].camera, f.views[1].camera, 320, 240, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_NodeSseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NodeSseParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WarpSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WarpParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
