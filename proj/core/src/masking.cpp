#include "pointjepa/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pointjepa::mask {

void MaskConfig::validate() const {
    auto check_range = [](double lo, double hi, const char* what) {
        if (!(lo > 0.0) || !(lo <= hi) || !(hi <= 1.0))
            throw std::invalid_argument(std::string("MaskConfig: bad ") + what +
                                        " ratio range, need 0 < lo <= hi <= 1");
    };
    check_range(target_ratio_lo, target_ratio_hi, "target");
    check_range(context_ratio_lo, context_ratio_hi, "context");
    if (target_count < 1) throw std::invalid_argument("MaskConfig: target_count must be >= 1");
}

std::size_t block_length(double u, std::size_t c) {
    const double raw = std::round(u * static_cast<double>(c));  // half away from zero
    const auto len = static_cast<std::size_t>(std::max(raw, 1.0));
    return std::min(len, c);
}

std::vector<std::vector<std::uint32_t>> sample_target_blocks(std::size_t c, const MaskConfig& cfg,
                                                             Rng& rng) {
    cfg.validate();
    if (c < 2) throw std::invalid_argument("sample_target_blocks: need c >= 2");
    std::vector<std::vector<std::uint32_t>> blocks;
    blocks.reserve(cfg.target_count);
    for (std::size_t i = 0; i < cfg.target_count; ++i) {
        const double u = rng.uniform(cfg.target_ratio_lo, cfg.target_ratio_hi);
        const std::size_t len = block_length(u, c);
        const std::size_t start = static_cast<std::size_t>(rng.uniform_below(c - len + 1));
        std::vector<std::uint32_t> block(len);
        std::iota(block.begin(), block.end(), static_cast<std::uint32_t>(start));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

std::vector<std::uint32_t> sample_context(std::size_t c,
                                          const std::vector<std::uint32_t>& target_union,
                                          const MaskConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<char> concealed(c, 0);
    for (const std::uint32_t t : target_union) {
        if (t >= c) throw std::invalid_argument("sample_context: target index out of range");
        concealed[t] = 1;
    }
    std::vector<std::uint32_t> available;
    available.reserve(c);
    for (std::uint32_t i = 0; i < c; ++i)
        if (!concealed[i]) available.push_back(i);
    if (available.empty())
        throw std::invalid_argument("sample_context: no positions left for the context");

    const double u = rng.uniform(cfg.context_ratio_lo, cfg.context_ratio_hi);
    const std::size_t len = block_length(u, available.size());
    const std::size_t start = static_cast<std::size_t>(rng.uniform_below(available.size() - len + 1));
    // contiguous over the available sub-sequence, not over absolute positions
    return {available.begin() + static_cast<std::ptrdiff_t>(start),
            available.begin() + static_cast<std::ptrdiff_t>(start + len)};
}

MaskSample sample_single_block(std::size_t c, const MaskConfig& cfg, Rng& rng) {
    cfg.validate();
    if (c < 2) throw std::invalid_argument("sample_single_block: need c >= 2");
    const double u = rng.uniform(cfg.target_ratio_lo, cfg.target_ratio_hi);
    const std::size_t len = block_length(u, c);

    MaskSample sample;
    std::vector<char> taken(c, 0);
    if (cfg.strategy == Strategy::SingleRandomRest) {
        // partial Fisher-Yates: len positions without replacement
        std::vector<std::uint32_t> pool(c);
        std::iota(pool.begin(), pool.end(), 0u);
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(c - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::uint32_t> block(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
        std::sort(block.begin(), block.end());
        for (const std::uint32_t p : block) taken[p] = 1;
        sample.target_blocks.push_back(std::move(block));
    } else {
        const std::size_t start = static_cast<std::size_t>(rng.uniform_below(c - len + 1));
        std::vector<std::uint32_t> block(len);
        std::iota(block.begin(), block.end(), static_cast<std::uint32_t>(start));
        for (const std::uint32_t p : block) taken[p] = 1;
        sample.target_blocks.push_back(std::move(block));
    }
    for (std::uint32_t i = 0; i < c; ++i)
        if (!taken[i]) sample.context.push_back(i);
    if (sample.context.empty())
        throw std::invalid_argument("sample_single_block: target covered every position");
    return sample;
}

MaskSample sample_mask(std::size_t c, const MaskConfig& cfg, Rng& rng) {
    if (cfg.strategy != Strategy::MultiBlockContiguous) return sample_single_block(c, cfg, rng);
    MaskSample sample;
    sample.target_blocks = sample_target_blocks(c, cfg, rng);
    std::vector<std::uint32_t> target_union;
    for (const auto& b : sample.target_blocks) target_union.insert(target_union.end(), b.begin(), b.end());
    std::sort(target_union.begin(), target_union.end());
    target_union.erase(std::unique(target_union.begin(), target_union.end()), target_union.end());
    sample.context = sample_context(c, target_union, cfg, rng);
    return sample;
}

}  // namespace pointjepa::mask
