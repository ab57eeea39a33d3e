#include <benchmark/benchmark.h>

#include "pointjepa/geom.hpp"
#include "pointjepa/rng.hpp"

using namespace pointjepa;

namespace {

geom::PointCloud make_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    geom::PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({static_cast<float>(rng.uniform(-1, 1)),
                                static_cast<float>(rng.uniform(-1, 1)),
                                static_cast<float>(rng.uniform(-1, 1))});
    return cloud;
}

void BM_FarthestPointSample(benchmark::State& state) {
    const auto cloud = make_cloud(1024, 1);
    const auto c = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto idx = geom::farthest_point_sample(cloud, c);
        benchmark::DoNotOptimize(idx.data());
    }
}

void BM_KnnGroup(benchmark::State& state) {
    const auto cloud = make_cloud(1024, 2);
    const auto centers = geom::farthest_point_sample(cloud, 64);
    const auto k = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto patches = geom::knn_group(cloud, centers, k);
        benchmark::DoNotOptimize(patches.local_coords.data());
    }
}

}  // namespace

BENCHMARK(BM_FarthestPointSample)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KnnGroup)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
