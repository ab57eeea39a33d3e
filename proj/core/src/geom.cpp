#include "pointjepa/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pointjepa/rng.hpp"

namespace pointjepa::geom {

void apply_random_rotation(PointCloud& cloud, RotationMode mode, Rng& rng) {
    if (mode == RotationMode::None) return;
    if (mode == RotationMode::ZAxis) {
        const double yaw = rng.uniform(0.0, 6.283185307179586476925286766559);
        const float cy = static_cast<float>(std::cos(yaw));
        const float sy = static_cast<float>(std::sin(yaw));
        for (auto& p : cloud.points) {
            const float x = p[0], y = p[1];
            p[0] = cy * x - sy * y;
            p[1] = sy * x + cy * y;
        }
        return;
    }
    // uniform rotation from a random unit quaternion
    double q[4], norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& v : q) {
            v = rng.gaussian();
            norm2 += v * v;
        }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
    const float rot[3][3] = {
        {static_cast<float>(1 - 2 * (y * y + z * z)), static_cast<float>(2 * (x * y - w * z)),
         static_cast<float>(2 * (x * z + w * y))},
        {static_cast<float>(2 * (x * y + w * z)), static_cast<float>(1 - 2 * (x * x + z * z)),
         static_cast<float>(2 * (y * z - w * x))},
        {static_cast<float>(2 * (x * z - w * y)), static_cast<float>(2 * (y * z + w * x)),
         static_cast<float>(1 - 2 * (x * x + y * y))}};
    for (auto& p : cloud.points) {
        const Vec3 v = p;
        for (int a = 0; a < 3; ++a)
            p[a] = rot[a][0] * v[0] + rot[a][1] * v[1] + rot[a][2] * v[2];
    }
}

void apply_jitter(PointCloud& cloud, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (auto& p : cloud.points)
        for (int a = 0; a < 3; ++a) p[a] += static_cast<float>(sigma * rng.gaussian());
}

std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud, std::size_t c,
                                                 const StartPolicy& start) {
    const std::size_t n = cloud.size();
    if (n == 0) throw std::invalid_argument("farthest_point_sample: empty cloud");
    if (c == 0 || c > n)
        throw std::invalid_argument("farthest_point_sample: need 1 <= c <= n, got c=" +
                                    std::to_string(c) + " n=" + std::to_string(n));

    std::size_t first = 0;
    if (start.kind == StartPolicy::Kind::Seeded) {
        Rng rng = derive_stream(start.seed, stream_tag::fps);
        first = static_cast<std::size_t>(rng.uniform_below(n));
    } else if (start.kind == StartPolicy::Kind::MinCoordSum) {
        float best = cloud.points[0][0] + cloud.points[0][1] + cloud.points[0][2];
        for (std::size_t i = 1; i < n; ++i) {
            const float s = cloud.points[i][0] + cloud.points[i][1] + cloud.points[i][2];
            if (s < best) {  // strict < keeps the lowest index on ties
                best = s;
                first = i;
            }
        }
    }

    std::vector<std::uint32_t> selected;
    selected.reserve(c);
    selected.push_back(static_cast<std::uint32_t>(first));

    // min squared distance from each point to the selected set
    std::vector<float> min_dist(n, std::numeric_limits<float>::infinity());
    std::size_t last = first;
    for (std::size_t step = 1; step < c; ++step) {
        const Vec3& p = cloud.points[last];
        std::size_t best = 0;
        float best_dist = -1.0f;
        for (std::size_t i = 0; i < n; ++i) {
            const float d = squared_distance(cloud.points[i], p);
            if (d < min_dist[i]) min_dist[i] = d;
            if (min_dist[i] > best_dist) {  // strict > keeps the lowest index on ties
                best_dist = min_dist[i];
                best = i;
            }
        }
        selected.push_back(static_cast<std::uint32_t>(best));
        min_dist[best] = -1.0f;  // never re-selected
        last = best;
    }
    return selected;
}

std::vector<std::vector<Vec3>> normalize_patches(
    const PointCloud& cloud, const std::vector<Vec3>& centers,
    const std::vector<std::vector<std::uint32_t>>& groups) {
    if (centers.size() != groups.size())
        throw std::invalid_argument("normalize_patches: centers/groups size mismatch");
    std::vector<std::vector<Vec3>> local(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const Vec3& ctr = centers[i];
        local[i].reserve(groups[i].size());
        for (const std::uint32_t idx : groups[i]) {
            if (idx >= cloud.size())
                throw std::invalid_argument("normalize_patches: group index out of range");
            const Vec3& p = cloud.points[idx];
            local[i].push_back({p[0] - ctr[0], p[1] - ctr[1], p[2] - ctr[2]});
        }
    }
    return local;
}

PatchSet knn_group(const PointCloud& cloud, const std::vector<std::uint32_t>& center_indices,
                   std::size_t k) {
    const std::size_t n = cloud.size();
    if (k == 0 || k > n)
        throw std::invalid_argument("knn_group: need 1 <= k <= n, got k=" + std::to_string(k) +
                                    " n=" + std::to_string(n));

    PatchSet patches;
    patches.center_indices = center_indices;
    patches.centers.reserve(center_indices.size());
    patches.groups.reserve(center_indices.size());

    std::vector<std::pair<float, std::uint32_t>> dist(n);
    for (const std::uint32_t ci : center_indices) {
        if (ci >= n) throw std::invalid_argument("knn_group: center index out of range");
        const Vec3& ctr = cloud.points[ci];
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {squared_distance(cloud.points[i], ctr), static_cast<std::uint32_t>(i)};
        // (distance, index) pairs sort ties toward the lowest index
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<std::uint32_t> group(k);
        for (std::size_t j = 0; j < k; ++j) group[j] = dist[j].second;
        patches.centers.push_back(ctr);
        patches.groups.push_back(std::move(group));
    }
    patches.local_coords = normalize_patches(cloud, patches.centers, patches.groups);
    return patches;
}

}  // namespace pointjepa::geom
