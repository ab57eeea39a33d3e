#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace pointjepa {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// xoshiro256** with splitmix64 seeding. We own the generator (and the
// uniform/gaussian transforms) so that every draw is reproducible across
// platforms and the full state is four u64 words, trivial to checkpoint.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = detail::splitmix64(x);
        gauss_cached_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller (cached second value).
    double gaussian() {
        if (gauss_cached_) {
            gauss_cached_ = false;
            return gauss_cache_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        gauss_cache_ = r * std::sin(a);
        gauss_cached_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
    bool gauss_cached_ = false;
    double gauss_cache_ = 0.0;
};

// Derives an independent stream from a master seed and a purpose tag plus up
// to three indices (epoch, step, batch element, ...). Stateless: a resumed
// run re-derives exactly the streams the uninterrupted run would have used.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t x = master_seed;
    std::uint64_t h = detail::splitmix64(x);
    x ^= tag * 0x9e3779b97f4a7c15ULL + 0x1234567;
    h ^= detail::splitmix64(x);
    x ^= a + 0xa0761d6478bd642fULL;
    h ^= detail::splitmix64(x);
    x ^= b + 0xe7037ed1a0b428dbULL;
    h ^= detail::splitmix64(x);
    x ^= c + 0x8ebc6af09c88c6e3ULL;
    h ^= detail::splitmix64(x);
    return Rng(h);
}

// Purpose tags for derive_stream.
namespace stream_tag {
constexpr std::uint64_t init = 1;      // parameter initialization
constexpr std::uint64_t shuffle = 2;   // per-epoch dataset order
constexpr std::uint64_t mask = 3;      // per-step per-element mask sampling
constexpr std::uint64_t data = 4;      // synthetic shape generation
constexpr std::uint64_t episode = 5;   // few-shot episode sampling
constexpr std::uint64_t fps = 6;       // seeded FPS start policy
}  // namespace stream_tag

}  // namespace pointjepa
