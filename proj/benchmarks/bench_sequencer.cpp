#include <benchmark/benchmark.h>

#include <vector>

#include "pointjepa/rng.hpp"
#include "pointjepa/sequencer.hpp"

using namespace pointjepa;

namespace {

std::vector<geom::Vec3> make_centers(std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<geom::Vec3> centers(c);
    for (auto& p : centers)
        p = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(-1, 1))};
    return centers;
}

void BM_GreedyOrder(benchmark::State& state) {
    const auto centers = make_centers(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        auto order = seq::greedy_order(centers, seq::StartRule::MinCoordSum);
        benchmark::DoNotOptimize(order.perm.data());
    }
}

void BM_MortonOrder(benchmark::State& state) {
    const auto centers = make_centers(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) {
        auto order = seq::morton_order(centers, 10);
        benchmark::DoNotOptimize(order.perm.data());
    }
}

void BM_HilbertOrder(benchmark::State& state) {
    const auto centers = make_centers(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        auto order = seq::hilbert_order(centers, 10);
        benchmark::DoNotOptimize(order.perm.data());
    }
}

void BM_BatchedGreedy(benchmark::State& state) {
    std::vector<std::vector<geom::Vec3>> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(make_centers(64, static_cast<std::uint64_t>(i)));
    for (auto _ : state) {
        auto orders = seq::batched_greedy_order(batch, seq::StartRule::MinCoordSum);
        benchmark::DoNotOptimize(orders.data());
    }
}

}  // namespace

BENCHMARK(BM_GreedyOrder)->Arg(64)->Arg(128)->Arg(512);
BENCHMARK(BM_MortonOrder)->Arg(64)->Arg(128)->Arg(512);
BENCHMARK(BM_HilbertOrder)->Arg(64)->Arg(128)->Arg(512);
BENCHMARK(BM_BatchedGreedy)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
