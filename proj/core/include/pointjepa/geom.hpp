#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pointjepa/rng.hpp"

namespace pointjepa::geom {

using Vec3 = std::array<float, 3>;

inline float squared_distance(const Vec3& a, const Vec3& b) {
    const float dx = a[0] - b[0];
    const float dy = a[1] - b[1];
    const float dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

// A finite set of 3D points representing one object. Coordinates are
// dimensionless model units, typically pre-normalized to the unit sphere.
struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
};

// Pose randomization: none, a uniform yaw about the z axis (objects stay
// upright), or a uniform rotation over SO(3).
enum class RotationMode { None, ZAxis, Full };

// In-place uniform random rotation per the mode (draws from rng only when a
// rotation is actually applied).
void apply_random_rotation(PointCloud& cloud, RotationMode mode, Rng& rng);

// In-place Gaussian perturbation of every coordinate.
void apply_jitter(PointCloud& cloud, double sigma, Rng& rng);

// c center points, each with a k-point neighborhood normalized to the center.
// Invariant: local_coords[i][j] = cloud.points[groups[i][j]] - centers[i].
struct PatchSet {
    std::vector<std::uint32_t> center_indices;       // c
    std::vector<Vec3> centers;                       // c
    std::vector<std::vector<std::uint32_t>> groups;  // c x k
    std::vector<std::vector<Vec3>> local_coords;     // c x k

    std::size_t patch_count() const { return centers.size(); }
    std::size_t group_size() const { return groups.empty() ? 0 : groups.front().size(); }
};

// How the first FPS center is chosen. The paper never pins this down, so the
// default is the deterministic index 0; a seeded policy is available. The
// MinCoordSum policy starts at the lowest coordinate sum, which makes the
// selection a function of geometry alone (the tokenization pipeline relies on
// that for permutation invariance).
struct StartPolicy {
    enum class Kind { FixedIndexZero, Seeded, MinCoordSum };
    Kind kind = Kind::FixedIndexZero;
    std::uint64_t seed = 0;

    static StartPolicy fixed() { return {}; }
    static StartPolicy seeded(std::uint64_t s) { return {Kind::Seeded, s}; }
    static StartPolicy min_coord_sum() { return {Kind::MinCoordSum, 0}; }
};

// Farthest point sampling: c distinct indices, each new index maximizing the
// minimum squared distance to the already-selected set. Ties break toward the
// lowest point index; comparisons are exact on fp32 values.
std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud, std::size_t c,
                                                 const StartPolicy& start = StartPolicy::fixed());

// Center-relative coordinates for explicit groups; the center's own entry
// maps to (0,0,0).
std::vector<std::vector<Vec3>> normalize_patches(const PointCloud& cloud,
                                                 const std::vector<Vec3>& centers,
                                                 const std::vector<std::vector<std::uint32_t>>& groups);

// For each center, the k cloud points with smallest Euclidean distance to it
// (the center itself counts at distance 0), ties toward the lowest index.
PatchSet knn_group(const PointCloud& cloud, const std::vector<std::uint32_t>& center_indices,
                   std::size_t k);

}  // namespace pointjepa::geom
