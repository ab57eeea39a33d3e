#pragma once

#include <cstdint>
#include <vector>

#include "pointjepa/rng.hpp"

namespace pointjepa::mask {

enum class Strategy { MultiBlockContiguous, SingleContiguousRest, SingleRandomRest };

// Target/context sampling parameters over sequencer positions. Defaults are
// the best-performing row of the masking-strategy study: 4 contiguous target
// blocks at ratio (0.15, 0.2) with a contiguous context at (0.4, 0.75).
struct MaskConfig {
    double target_ratio_lo = 0.15;
    double target_ratio_hi = 0.20;
    std::size_t target_count = 4;  // M
    double context_ratio_lo = 0.40;
    double context_ratio_hi = 0.75;
    Strategy strategy = Strategy::MultiBlockContiguous;

    void validate() const;
};

// M target index blocks plus one disjoint context index set, all over
// sequencer positions. Blocks may overlap each other; the context never
// overlaps any target.
struct MaskSample {
    std::vector<std::vector<std::uint32_t>> target_blocks;
    std::vector<std::uint32_t> context;
};

// Block length for ratio draw u over c positions: round half away from zero,
// floored at 1.
std::size_t block_length(double u, std::size_t c);

// M independently drawn contiguous blocks, each of length
// max(1, round(u*c)) with u ~ U(lo, hi) and uniform start.
std::vector<std::vector<std::uint32_t>> sample_target_blocks(std::size_t c, const MaskConfig& cfg,
                                                             Rng& rng);

// One contiguous run of the available (non-target) position list; in
// absolute positions this may split into several spatially contiguous
// fragments. Never overlaps target_union.
std::vector<std::uint32_t> sample_context(std::size_t c,
                                          const std::vector<std::uint32_t>& target_union,
                                          const MaskConfig& cfg, Rng& rng);

// Single-block ablation strategies: one 60%-sized target (contiguous run or
// uniform random subset per cfg.strategy) with the rest as context.
MaskSample sample_single_block(std::size_t c, const MaskConfig& cfg, Rng& rng);

// Strategy dispatcher: one full MaskSample draw for a cloud of c positions.
MaskSample sample_mask(std::size_t c, const MaskConfig& cfg, Rng& rng);

}  // namespace pointjepa::mask
