#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pointjepa/rng.hpp"
#include "pointjepa/sequencer.hpp"

using namespace pointjepa;
using geom::Vec3;

namespace {

std::vector<Vec3> random_centers(std::size_t c, Rng& rng) {
    std::vector<Vec3> centers(c);
    for (auto& p : centers)
        p = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(-1, 1))};
    return centers;
}

// Brute-force nearest-unvisited chain, written independently of the library.
std::vector<std::uint32_t> greedy_oracle(const std::vector<Vec3>& centers, seq::StartRule start) {
    const std::size_t c = centers.size();
    std::size_t cur = 0;
    if (start == seq::StartRule::MinCoordSum) {
        float best = std::numeric_limits<float>::infinity();
        for (std::size_t i = 0; i < c; ++i) {
            const float s = centers[i][0] + centers[i][1] + centers[i][2];
            if (s < best) {
                best = s;
                cur = i;
            }
        }
    }
    std::vector<std::uint32_t> out{static_cast<std::uint32_t>(cur)};
    std::vector<bool> used(c, false);
    used[cur] = true;
    while (out.size() < c) {
        float best = std::numeric_limits<float>::infinity();
        std::size_t pick = c;
        for (std::size_t i = 0; i < c; ++i) {
            if (used[i]) continue;
            const float d = geom::squared_distance(centers[cur], centers[i]);
            if (d < best) {
                best = d;
                pick = i;
            }
        }
        used[pick] = true;
        out.push_back(static_cast<std::uint32_t>(pick));
        cur = pick;
    }
    return out;
}

bool is_permutation_of_iota(const seq::Ordering& o) {
    std::vector<std::uint32_t> sorted = o.perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != i) return false;
    return true;
}

}  // namespace

TEST_CASE("greedy: single center") {
    CHECK(seq::greedy_order({{0, 0, 0}}, seq::StartRule::MinCoordSum).perm ==
          std::vector<std::uint32_t>{0});
}

TEST_CASE("greedy: forced chain on a line") {
    const std::vector<Vec3> centers{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK(seq::greedy_order(centers, seq::StartRule::MinCoordSum).perm ==
          std::vector<std::uint32_t>{0, 1, 2});
}

TEST_CASE("greedy: unit-square corners break the tie toward index 1") {
    const std::vector<Vec3> centers{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const auto order = seq::greedy_order(centers, seq::StartRule::MinCoordSum);
    CHECK(order.perm == std::vector<std::uint32_t>{0, 1, 3, 2});
    CHECK(order.perm == greedy_oracle(centers, seq::StartRule::MinCoordSum));
}

TEST_CASE("greedy: MinIndex starts at index 0") {
    const std::vector<Vec3> centers{{5, 5, 5}, {0, 0, 0}, {1, 1, 1}};
    const auto order = seq::greedy_order(centers, seq::StartRule::MinIndex);
    CHECK(order.perm[0] == 0);
}

TEST_CASE("greedy: equals the brute-force oracle on random clouds") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t c = 2 + static_cast<std::size_t>(rng.uniform_below(63));
        const auto centers = random_centers(c, rng);
        for (const auto rule : {seq::StartRule::MinCoordSum, seq::StartRule::MinIndex})
            CHECK(seq::greedy_order(centers, rule).perm == greedy_oracle(centers, rule));
    }
}

TEST_CASE("greedy: invariant under translation and positive scaling") {
    Rng rng(7);
    const auto centers = random_centers(40, rng);
    const auto base = seq::greedy_order(centers, seq::StartRule::MinCoordSum);
    std::vector<Vec3> moved = centers;
    for (auto& p : moved)
        for (int a = 0; a < 3; ++a) p[a] = 0.25f * p[a] + 3.5f;
    CHECK(seq::greedy_order(moved, seq::StartRule::MinCoordSum).perm == base.perm);
}

TEST_CASE("batched greedy matches serial exactly, including c=1 members") {
    Rng rng(31);
    std::vector<std::vector<Vec3>> batch;
    batch.push_back(random_centers(1, rng));
    for (int i = 0; i < 12; ++i)
        batch.push_back(random_centers(2 + static_cast<std::size_t>(rng.uniform_below(64)), rng));
    const auto batched = seq::batched_greedy_order(batch, seq::StartRule::MinCoordSum);
    REQUIRE(batched.size() == batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        CHECK(batched[i].perm == seq::greedy_order(batch[i], seq::StartRule::MinCoordSum).perm);
}

TEST_CASE("batched greedy rejects an empty member") {
    std::vector<std::vector<Vec3>> batch{{{0, 0, 0}}, {}};
    CHECK_THROWS_AS(seq::batched_greedy_order(batch, seq::StartRule::MinCoordSum),
                    std::invalid_argument);
}

TEST_CASE("morton: single center and identical centers") {
    CHECK(seq::morton_order({{1, 2, 3}}, 10).perm == std::vector<std::uint32_t>{0});
    const std::vector<Vec3> same(5, Vec3{0.5f, 0.5f, 0.5f});
    CHECK(seq::morton_order(same, 10).perm == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("morton: unit-cube corners order by interleaved code at bits=1") {
    // index order: walk x fastest, then y, then z
    std::vector<Vec3> corners;
    for (int z = 0; z <= 1; ++z)
        for (int y = 0; y <= 1; ++y)
            for (int x = 0; x <= 1; ++x)
                corners.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)});
    const auto order = seq::morton_order(corners, 1);
    // codes equal the index order itself under x-lowest interleave
    CHECK(order.perm == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7});
    // direct code oracle on the 2x2x2 grid
    for (std::uint32_t x = 0; x <= 1; ++x)
        for (std::uint32_t y = 0; y <= 1; ++y)
            for (std::uint32_t z = 0; z <= 1; ++z)
                CHECK(seq::morton_encode(x, y, z, 1) == (x | (y << 1) | (z << 2)));
}

TEST_CASE("hilbert: c=1 and identical centers fall back to index order") {
    CHECK(seq::hilbert_order({{1, 2, 3}}, 10).perm == std::vector<std::uint32_t>{0});
    const std::vector<Vec3> same(4, Vec3{1.0f, 1.0f, 1.0f});
    CHECK(seq::hilbert_order(same, 10).perm == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("hilbert: codes are a bijection and consecutive cells are face-adjacent") {
    for (const unsigned bits : {1u, 2u}) {
        const std::uint32_t side = 1u << bits;
        const std::uint32_t cells = side * side * side;
        std::vector<std::array<std::uint32_t, 3>> by_code(cells);
        std::vector<char> seen(cells, 0);
        for (std::uint32_t x = 0; x < side; ++x)
            for (std::uint32_t y = 0; y < side; ++y)
                for (std::uint32_t z = 0; z < side; ++z) {
                    const std::uint64_t code = seq::hilbert_encode(x, y, z, bits);
                    REQUIRE(code < cells);
                    REQUIRE(!seen[code]);
                    seen[static_cast<std::size_t>(code)] = 1;
                    by_code[static_cast<std::size_t>(code)] = {x, y, z};
                }
        for (std::uint32_t i = 0; i + 1 < cells; ++i) {
            const auto& a = by_code[i];
            const auto& b = by_code[i + 1];
            int manhattan = 0;
            for (int axis = 0; axis < 3; ++axis)
                manhattan += std::abs(static_cast<int>(a[axis]) - static_cast<int>(b[axis]));
            CHECK(manhattan == 1);
        }
    }
}

TEST_CASE("hilbert: ordering on the 2x2x2 grid visits face-adjacent centers") {
    std::vector<Vec3> corners;
    for (int z = 0; z <= 1; ++z)
        for (int y = 0; y <= 1; ++y)
            for (int x = 0; x <= 1; ++x)
                corners.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)});
    const auto order = seq::hilbert_order(corners, 1);
    REQUIRE(is_permutation_of_iota(order));
    for (std::size_t t = 0; t + 1 < order.perm.size(); ++t) {
        const auto& a = corners[order.perm[t]];
        const auto& b = corners[order.perm[t + 1]];
        float manhattan = 0;
        for (int axis = 0; axis < 3; ++axis) manhattan += std::abs(a[axis] - b[axis]);
        CHECK(manhattan == doctest::Approx(1.0f));
    }
}

TEST_CASE("morton and hilbert: invariant under translation and positive scaling") {
    Rng rng(43);
    const auto centers = random_centers(50, rng);
    std::vector<Vec3> moved = centers;
    for (auto& p : moved)
        for (int a = 0; a < 3; ++a) p[a] = 2.0f * p[a] - 7.0f;
    CHECK(seq::morton_order(centers, 10).perm == seq::morton_order(moved, 10).perm);
    CHECK(seq::hilbert_order(centers, 10).perm == seq::hilbert_order(moved, 10).perm);
}

TEST_CASE("every ordering is a permutation (fuzz)") {
    Rng rng(59);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = 1 + static_cast<std::size_t>(rng.uniform_below(40));
        const auto centers = random_centers(c, rng);
        CHECK(is_permutation_of_iota(seq::greedy_order(centers, seq::StartRule::MinCoordSum)));
        CHECK(is_permutation_of_iota(seq::greedy_order(centers, seq::StartRule::MinIndex)));
        CHECK(is_permutation_of_iota(seq::morton_order(centers, 10)));
        CHECK(is_permutation_of_iota(seq::hilbert_order(centers, 10)));
    }
}

TEST_CASE("contiguity_score: degenerate and unit-step cases") {
    CHECK(seq::contiguity_score({{1, 2, 3}}, seq::Ordering{{0}}) == 0.0);
    const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK(seq::contiguity_score(line, seq::Ordering{{0, 1, 2}}) == doctest::Approx(1.0));
}

TEST_CASE("contiguity_score: greedy beats identity order on average") {
    Rng rng(61);
    double greedy_total = 0.0, identity_total = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto centers = random_centers(32, rng);
        seq::Ordering identity;
        identity.perm.resize(32);
        std::iota(identity.perm.begin(), identity.perm.end(), 0u);
        greedy_total +=
            seq::contiguity_score(centers, seq::greedy_order(centers, seq::StartRule::MinCoordSum));
        identity_total += seq::contiguity_score(centers, identity);
    }
    CHECK(greedy_total < identity_total);
}

TEST_CASE("sequencers reject empty input and bad bit widths") {
    CHECK_THROWS_AS(seq::greedy_order({}, seq::StartRule::MinCoordSum), std::invalid_argument);
    CHECK_THROWS_AS(seq::morton_order({}, 10), std::invalid_argument);
    CHECK_THROWS_AS(seq::hilbert_order({}, 10), std::invalid_argument);
    CHECK_THROWS_AS(seq::morton_order({{0, 0, 0}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(seq::morton_order({{0, 0, 0}}, 22), std::invalid_argument);
}
