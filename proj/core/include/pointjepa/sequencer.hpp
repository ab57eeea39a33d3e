#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pointjepa/geom.hpp"

namespace pointjepa::seq {

// Visit order over patch centers; perm is a bijection on {0, ..., c-1}.
struct Ordering {
    std::vector<std::uint32_t> perm;

    std::size_t size() const { return perm.size(); }
};

// How the greedy chain picks its first center. MinCoordSum starts near the
// object's edge (lowest x+y+z); MinIndex starts at data-feeding index 0.
enum class StartRule { MinCoordSum, MinIndex };

// Nearest-unvisited-neighbor chaining over the centers. Ties break toward
// the lowest index; distance comparisons are exact on fp32 squared values.
Ordering greedy_order(const std::vector<geom::Vec3>& centers, StartRule start);

// Sort by Morton (z-order) code of bounding-box-quantized coordinates.
// x carries the lowest significance at each interleave level, then y, then z.
Ordering morton_order(const std::vector<geom::Vec3>& centers, unsigned bits_per_axis = 10);

// Sort by 3D Hilbert-curve index of the quantized grid coordinates.
Ordering hilbert_order(const std::vector<geom::Vec3>& centers, unsigned bits_per_axis = 10);

// Elementwise identical to per-cloud greedy_order; clouds advance in
// lock-step over precomputed pairwise distances.
std::vector<Ordering> batched_greedy_order(const std::vector<std::vector<geom::Vec3>>& center_sets,
                                           StartRule start);

// Mean consecutive-pair Euclidean distance along the ordering; 0 when c = 1.
double contiguity_score(const std::vector<geom::Vec3>& centers, const Ordering& ordering);

// Quantized-grid Morton/Hilbert codes, exposed for tests.
std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits);
std::uint64_t hilbert_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits);

// Sequencer selection as it appears in configs and on the CLI.
enum class Kind { GreedyMinCoord, GreedyMinIndex, Morton, Hilbert };

inline Ordering order_centers(const std::vector<geom::Vec3>& centers, Kind kind,
                              unsigned bits_per_axis = 10) {
    switch (kind) {
        case Kind::GreedyMinCoord: return greedy_order(centers, StartRule::MinCoordSum);
        case Kind::GreedyMinIndex: return greedy_order(centers, StartRule::MinIndex);
        case Kind::Morton: return morton_order(centers, bits_per_axis);
        case Kind::Hilbert: return hilbert_order(centers, bits_per_axis);
    }
    throw std::invalid_argument("order_centers: unknown sequencer kind");
}

}  // namespace pointjepa::seq
