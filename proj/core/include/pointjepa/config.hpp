#pragma once

#include <cstdint>
#include <string>

#include "pointjepa/data.hpp"
#include "pointjepa/masking.hpp"
#include "pointjepa/nn.hpp"
#include "pointjepa/sequencer.hpp"
#include "pointjepa/train.hpp"

namespace pointjepa::config {

// Everything a run needs, mirroring the config file's sections. The file
// dialect is one `section.key = value` assignment per line; `#` starts a
// comment; unknown keys are rejected.
struct RunConfig {
    // run
    std::uint64_t seed = 42;
    std::string out_dir;  // commands that write outputs require this (or --out)
    // data
    std::string data_dir;  // commands that touch the dataset require this
    std::int64_t data_per_class = 100;
    std::int64_t data_points = 1024;
    double data_split = 0.8;
    double data_jitter = 0.0;
    data::RotationMode data_rotation = data::RotationMode::None;
    // model
    nn::ModelDims model;
    // sequencer
    seq::Kind sequencer = seq::Kind::GreedyMinCoord;
    unsigned seq_bits = 10;
    // mask
    mask::MaskConfig mask;
    // train
    train::TrainConfig train;
    // probe
    double probe_lambda = 1e-3;
    std::int64_t probe_max_iter = 100;
    // fewshot
    std::int64_t fewshot_way = 5;
    std::int64_t fewshot_shot = 10;
    std::int64_t fewshot_query = 20;
    std::int64_t fewshot_trials = 10;

    void validate() const;  // throws ConfigError
};

const char* sequencer_name(seq::Kind kind);
seq::Kind sequencer_from_name(const std::string& name);
const char* strategy_name(mask::Strategy strategy);
mask::Strategy strategy_from_name(const std::string& name);
const char* rotation_name(data::RotationMode mode);
data::RotationMode rotation_from_name(const std::string& name);

// Parse `section.key = value` text; defaults fill unset keys.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// One key override (the `--set section.key=value` CLI path).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical effective-config dump: every key, fixed order, values in
// shortest round-trip form. parse(dump(cfg)) == cfg, bit-exact.
std::string dump_config(const RunConfig& cfg);

// FNV-1a over the canonical dump; checkpoints carry this for resume checks.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace pointjepa::config
