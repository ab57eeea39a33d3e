#include "pointjepa/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pointjepa::seq {

namespace {

std::size_t start_index(const std::vector<geom::Vec3>& centers, StartRule start) {
    if (start == StartRule::MinIndex) return 0;
    std::size_t best = 0;
    float best_sum = centers[0][0] + centers[0][1] + centers[0][2];
    for (std::size_t i = 1; i < centers.size(); ++i) {
        const float s = centers[i][0] + centers[i][1] + centers[i][2];
        if (s < best_sum) {
            best_sum = s;
            best = i;
        }
    }
    return best;
}

// Chain over a row-major c x c squared-distance matrix.
Ordering chain_from_distances(const std::vector<float>& dist, std::size_t c, std::size_t first) {
    Ordering out;
    out.perm.reserve(c);
    std::vector<char> visited(c, 0);
    std::size_t prev = first;
    out.perm.push_back(static_cast<std::uint32_t>(first));
    visited[first] = 1;
    for (std::size_t step = 1; step < c; ++step) {
        const float* row = dist.data() + prev * c;
        std::size_t best = c;
        float best_dist = std::numeric_limits<float>::infinity();
        for (std::size_t i = 0; i < c; ++i) {
            if (visited[i]) continue;
            if (row[i] < best_dist) {  // strict < keeps the lowest index on ties
                best_dist = row[i];
                best = i;
            }
        }
        out.perm.push_back(static_cast<std::uint32_t>(best));
        visited[best] = 1;
        prev = best;
    }
    return out;
}

std::vector<float> pairwise_sq(const std::vector<geom::Vec3>& centers) {
    const std::size_t c = centers.size();
    std::vector<float> dist(c * c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            dist[i * c + j] = geom::squared_distance(centers[i], centers[j]);
    return dist;
}

void quantize(const std::vector<geom::Vec3>& centers, unsigned bits,
              std::vector<std::array<std::uint32_t, 3>>& out) {
    const double levels = static_cast<double>((1u << bits) - 1u);
    geom::Vec3 lo = centers[0];
    geom::Vec3 hi = centers[0];
    for (const auto& p : centers)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    out.resize(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (int a = 0; a < 3; ++a) {
            const double extent = static_cast<double>(hi[a]) - static_cast<double>(lo[a]);
            if (extent <= 0.0) {
                out[i][a] = 0;  // degenerate axis
                continue;
            }
            const double t = (static_cast<double>(centers[i][a]) - lo[a]) / extent;
            const double q = std::round(t * levels);
            out[i][a] = static_cast<std::uint32_t>(std::clamp(q, 0.0, levels));
        }
}

Ordering order_by_codes(const std::vector<std::uint64_t>& codes) {
    Ordering out;
    out.perm.resize(codes.size());
    std::iota(out.perm.begin(), out.perm.end(), 0u);
    std::stable_sort(out.perm.begin(), out.perm.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return codes[a] < codes[b]; });
    return out;
}

void check_bits(unsigned bits) {
    if (bits < 1 || bits > 21)
        throw std::invalid_argument("sequencer: bits_per_axis must be in [1, 21]");
}

}  // namespace

Ordering greedy_order(const std::vector<geom::Vec3>& centers, StartRule start) {
    if (centers.empty()) throw std::invalid_argument("greedy_order: empty centers");
    return chain_from_distances(pairwise_sq(centers), centers.size(), start_index(centers, start));
}

std::vector<Ordering> batched_greedy_order(const std::vector<std::vector<geom::Vec3>>& center_sets,
                                           StartRule start) {
    for (const auto& s : center_sets)
        if (s.empty()) throw std::invalid_argument("batched_greedy_order: empty member cloud");
    std::vector<Ordering> out(center_sets.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(center_sets.size()); ++i) {
        const auto& centers = center_sets[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] =
            chain_from_distances(pairwise_sq(centers), centers.size(), start_index(centers, start));
    }
    return out;
}

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits) {
    std::uint64_t code = 0;
    for (unsigned b = 0; b < bits; ++b) {
        code |= static_cast<std::uint64_t>((x >> b) & 1u) << (3 * b);
        code |= static_cast<std::uint64_t>((y >> b) & 1u) << (3 * b + 1);
        code |= static_cast<std::uint64_t>((z >> b) & 1u) << (3 * b + 2);
    }
    return code;
}

// Skilling-style axes-to-transpose, then MSB-first interleave of the
// transposed coordinates into a single index.
std::uint64_t hilbert_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits) {
    std::uint32_t X[3] = {x, y, z};
    const std::uint32_t M = 1u << (bits - 1);
    for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
        const std::uint32_t P = Q - 1;
        for (int i = 0; i < 3; ++i) {
            if (X[i] & Q) {
                X[0] ^= P;
            } else {
                const std::uint32_t t = (X[0] ^ X[i]) & P;
                X[0] ^= t;
                X[i] ^= t;
            }
        }
    }
    X[1] ^= X[0];
    X[2] ^= X[1];
    std::uint32_t t = 0;
    for (std::uint32_t Q = M; Q > 1; Q >>= 1)
        if (X[2] & Q) t ^= Q - 1;
    for (auto& v : X) v ^= t;

    std::uint64_t code = 0;
    for (unsigned b = bits; b-- > 0;) {
        code = (code << 1) | ((X[0] >> b) & 1u);
        code = (code << 1) | ((X[1] >> b) & 1u);
        code = (code << 1) | ((X[2] >> b) & 1u);
    }
    return code;
}

Ordering morton_order(const std::vector<geom::Vec3>& centers, unsigned bits_per_axis) {
    if (centers.empty()) throw std::invalid_argument("morton_order: empty centers");
    check_bits(bits_per_axis);
    std::vector<std::array<std::uint32_t, 3>> q;
    quantize(centers, bits_per_axis, q);
    std::vector<std::uint64_t> codes(centers.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        codes[i] = morton_encode(q[i][0], q[i][1], q[i][2], bits_per_axis);
    return order_by_codes(codes);
}

Ordering hilbert_order(const std::vector<geom::Vec3>& centers, unsigned bits_per_axis) {
    if (centers.empty()) throw std::invalid_argument("hilbert_order: empty centers");
    check_bits(bits_per_axis);
    std::vector<std::array<std::uint32_t, 3>> q;
    quantize(centers, bits_per_axis, q);
    std::vector<std::uint64_t> codes(centers.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        codes[i] = hilbert_encode(q[i][0], q[i][1], q[i][2], bits_per_axis);
    return order_by_codes(codes);
}

double contiguity_score(const std::vector<geom::Vec3>& centers, const Ordering& ordering) {
    if (ordering.perm.size() != centers.size())
        throw std::invalid_argument("contiguity_score: ordering/centers size mismatch");
    if (centers.size() <= 1) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < ordering.perm.size(); ++t) {
        const auto& a = centers[ordering.perm[t]];
        const auto& b = centers[ordering.perm[t + 1]];
        total += std::sqrt(static_cast<double>(geom::squared_distance(a, b)));
    }
    return total / static_cast<double>(centers.size() - 1);
}

}  // namespace pointjepa::seq
