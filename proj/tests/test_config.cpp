#include <doctest.h>

#include <string>

#include "pointjepa/config.hpp"
#include "pointjepa/errors.hpp"

using namespace pointjepa;

TEST_CASE("defaults mirror the full-scale recipe") {
    const config::RunConfig cfg;
    CHECK(cfg.model.c == 64);
    CHECK(cfg.model.k == 32);
    CHECK(cfg.model.embed_dim == 384);
    CHECK(cfg.model.encoder_depth == 12);
    CHECK(cfg.model.encoder_heads == 6);
    CHECK(cfg.model.predictor_dim == 192);
    CHECK(cfg.model.predictor_depth == 6);
    CHECK(cfg.model.predictor_heads == 6);
    CHECK(cfg.mask.target_count == 4);
    CHECK(cfg.mask.target_ratio_lo == 0.15);
    CHECK(cfg.mask.target_ratio_hi == 0.20);
    CHECK(cfg.mask.context_ratio_lo == 0.40);
    CHECK(cfg.mask.context_ratio_hi == 0.75);
    CHECK(cfg.train.lr_start == 1e-5);
    CHECK(cfg.train.lr_peak == 1e-3);
    CHECK(cfg.train.lr_end == 1e-6);
    CHECK(cfg.train.warmup_epochs == 30);
    CHECK(cfg.train.batch_size == 512);
    CHECK(cfg.train.beta_smooth_l1 == 2.0);
    CHECK(cfg.train.ema_tau_start == 0.995);
    CHECK(cfg.train.ema_tau_end == 1.0);
    CHECK(cfg.sequencer == seq::Kind::GreedyMinCoord);
}

TEST_CASE("parse: sections, comments, whitespace, overrides") {
    const std::string text = R"(# a comment
run.seed = 7
model.c = 16     # trailing comment
sequencer.kind = morton
mask.strategy = single-random
train.lr_peak = 5e-4
data.rotation = z
)";
    const auto cfg = config::parse_config_text(text);
    CHECK(cfg.seed == 7);
    CHECK(cfg.model.c == 16);
    CHECK(cfg.sequencer == seq::Kind::Morton);
    CHECK(cfg.mask.strategy == mask::Strategy::SingleRandomRest);
    CHECK(cfg.train.lr_peak == 5e-4);
    CHECK(cfg.data_rotation == data::RotationMode::ZAxis);
}

TEST_CASE("parse: unknown keys and malformed lines are config errors") {
    CHECK_THROWS_AS(config::parse_config_text("nope.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("model.c 16\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("model.c = sixteen\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("data.rotation = sideways\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("sequencer.kind = zigzag\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("sequencer.bits = 25\n"), ConfigError);
}

TEST_CASE("dump and re-parse round-trips bit-exactly") {
    config::RunConfig cfg;
    cfg.seed = 123456789012345ULL;
    cfg.out_dir = "runs/exp1";
    cfg.data_dir = "data/shapes";
    cfg.data_jitter = 0.015;
    cfg.model.c = 16;
    cfg.model.embed_dim = 64;
    cfg.model.encoder_heads = 4;
    cfg.sequencer = seq::Kind::Hilbert;
    cfg.seq_bits = 8;
    cfg.mask.strategy = mask::Strategy::SingleContiguousRest;
    cfg.mask.target_ratio_lo = 0.6;
    cfg.mask.target_ratio_hi = 0.6;
    cfg.train.lr_peak = 0.00123456789;
    cfg.train.epochs = 60;
    cfg.probe_lambda = 1e-3;

    const std::string dump = config::dump_config(cfg);
    const auto parsed = config::parse_config_text(dump);
    const std::string dump2 = config::dump_config(parsed);
    CHECK(dump == dump2);
    CHECK(config::config_hash(cfg) == config::config_hash(parsed));
    CHECK(parsed.seed == cfg.seed);
    CHECK(parsed.data_jitter == cfg.data_jitter);
    CHECK(parsed.train.lr_peak == cfg.train.lr_peak);
    CHECK(parsed.model == cfg.model);
}

TEST_CASE("apply_override mirrors the --set flag") {
    config::RunConfig cfg;
    config::apply_override(cfg, "train.epochs", "5");
    CHECK(cfg.train.epochs == 5);
    CHECK_THROWS_AS(config::apply_override(cfg, "bogus", "1"), ConfigError);
}

TEST_CASE("validate: catches inconsistent settings") {
    config::RunConfig cfg;
    cfg.model.embed_dim = 65;  // not divisible by 6 heads
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = config::RunConfig{};
    cfg.model.k = 2048;
    cfg.data_points = 1024;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = config::RunConfig{};
    cfg.train.warmup_epochs = 100;
    cfg.train.epochs = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = config::RunConfig{};
    cfg.mask.target_ratio_lo = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config hash is sensitive to any key change") {
    config::RunConfig a, b;
    b.train.epochs += 1;
    CHECK(config::config_hash(a) != config::config_hash(b));
}

TEST_CASE("enum names round-trip") {
    for (const auto kind : {seq::Kind::GreedyMinCoord, seq::Kind::GreedyMinIndex, seq::Kind::Morton,
                            seq::Kind::Hilbert})
        CHECK(config::sequencer_from_name(config::sequencer_name(kind)) == kind);
    for (const auto s : {mask::Strategy::MultiBlockContiguous, mask::Strategy::SingleContiguousRest,
                         mask::Strategy::SingleRandomRest})
        CHECK(config::strategy_from_name(config::strategy_name(s)) == s);
}
