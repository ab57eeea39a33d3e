#include "pointjepa/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>
#include <vector>

#include "pointjepa/errors.hpp"

namespace pointjepa::config {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
    std::int64_t out = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("config: bad unsigned integer for " + key + ": '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("config: bad number for " + key + ": '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + value + "' (use true/false)");
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct KeyHandler {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define PJ_INT_KEY(key, field)                                                       \
    {key, [](RunConfig& c, const std::string& v) { c.field = parse_i64(key, v); },   \
     [](const RunConfig& c) { return std::to_string(c.field); }}
#define PJ_DBL_KEY(key, field)                                                       \
    {key, [](RunConfig& c, const std::string& v) { c.field = parse_double(key, v); }, \
     [](const RunConfig& c) { return format_double(c.field); }}

const std::vector<KeyHandler>& handlers() {
    static const std::vector<KeyHandler> table = {
        {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("run.seed", v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        {"run.out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
         [](const RunConfig& c) { return c.out_dir; }},
        {"data.dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
         [](const RunConfig& c) { return c.data_dir; }},
        PJ_INT_KEY("data.per_class", data_per_class),
        PJ_INT_KEY("data.points", data_points),
        PJ_DBL_KEY("data.split", data_split),
        PJ_DBL_KEY("data.jitter", data_jitter),
        {"data.rotation",
         [](RunConfig& c, const std::string& v) { c.data_rotation = rotation_from_name(v); },
         [](const RunConfig& c) { return std::string(rotation_name(c.data_rotation)); }},
        PJ_INT_KEY("model.c", model.c),
        PJ_INT_KEY("model.k", model.k),
        PJ_INT_KEY("model.embed_dim", model.embed_dim),
        PJ_INT_KEY("model.encoder_depth", model.encoder_depth),
        PJ_INT_KEY("model.encoder_heads", model.encoder_heads),
        PJ_INT_KEY("model.predictor_dim", model.predictor_dim),
        PJ_INT_KEY("model.predictor_depth", model.predictor_depth),
        PJ_INT_KEY("model.predictor_heads", model.predictor_heads),
        PJ_INT_KEY("model.point_h1", model.point_h1),
        PJ_INT_KEY("model.point_h2", model.point_h2),
        PJ_INT_KEY("model.point_h3", model.point_h3),
        PJ_INT_KEY("model.pos_hidden", model.pos_hidden),
        {"sequencer.kind",
         [](RunConfig& c, const std::string& v) { c.sequencer = sequencer_from_name(v); },
         [](const RunConfig& c) { return std::string(sequencer_name(c.sequencer)); }},
        {"sequencer.bits",
         [](RunConfig& c, const std::string& v) {
             const auto bits = parse_u64("sequencer.bits", v);
             if (bits < 1 || bits > 21) throw ConfigError("config: sequencer.bits must be in [1, 21]");
             c.seq_bits = static_cast<unsigned>(bits);
         },
         [](const RunConfig& c) { return std::to_string(c.seq_bits); }},
        {"mask.strategy",
         [](RunConfig& c, const std::string& v) { c.mask.strategy = strategy_from_name(v); },
         [](const RunConfig& c) { return std::string(strategy_name(c.mask.strategy)); }},
        {"mask.target_count",
         [](RunConfig& c, const std::string& v) {
             c.mask.target_count = static_cast<std::size_t>(parse_u64("mask.target_count", v));
         },
         [](const RunConfig& c) { return std::to_string(c.mask.target_count); }},
        PJ_DBL_KEY("mask.target_ratio_lo", mask.target_ratio_lo),
        PJ_DBL_KEY("mask.target_ratio_hi", mask.target_ratio_hi),
        PJ_DBL_KEY("mask.context_ratio_lo", mask.context_ratio_lo),
        PJ_DBL_KEY("mask.context_ratio_hi", mask.context_ratio_hi),
        PJ_INT_KEY("train.epochs", train.epochs),
        PJ_INT_KEY("train.batch_size", train.batch_size),
        PJ_DBL_KEY("train.lr_start", train.lr_start),
        PJ_DBL_KEY("train.lr_peak", train.lr_peak),
        PJ_DBL_KEY("train.lr_end", train.lr_end),
        PJ_INT_KEY("train.warmup_epochs", train.warmup_epochs),
        PJ_DBL_KEY("train.weight_decay", train.weight_decay),
        PJ_DBL_KEY("train.beta_smooth_l1", train.beta_smooth_l1),
        PJ_DBL_KEY("train.ema_tau_start", train.ema_tau_start),
        PJ_DBL_KEY("train.ema_tau_end", train.ema_tau_end),
        PJ_DBL_KEY("train.adam_beta1", train.adam_beta1),
        PJ_DBL_KEY("train.adam_beta2", train.adam_beta2),
        PJ_DBL_KEY("train.adam_eps", train.adam_eps),
        PJ_DBL_KEY("probe.lambda", probe_lambda),
        PJ_INT_KEY("probe.max_iter", probe_max_iter),
        PJ_INT_KEY("fewshot.way", fewshot_way),
        PJ_INT_KEY("fewshot.shot", fewshot_shot),
        PJ_INT_KEY("fewshot.query", fewshot_query),
        PJ_INT_KEY("fewshot.trials", fewshot_trials),
    };
    return table;
}

#undef PJ_INT_KEY
#undef PJ_DBL_KEY

const KeyHandler* find_handler(const std::string& key) {
    for (const auto& h : handlers())
        if (key == h.name) return &h;
    return nullptr;
}

}  // namespace

const char* sequencer_name(seq::Kind kind) {
    switch (kind) {
        case seq::Kind::GreedyMinCoord: return "greedy-min-coord";
        case seq::Kind::GreedyMinIndex: return "greedy-min-index";
        case seq::Kind::Morton: return "morton";
        case seq::Kind::Hilbert: return "hilbert";
    }
    return "unknown";
}

seq::Kind sequencer_from_name(const std::string& name) {
    if (name == "greedy-min-coord") return seq::Kind::GreedyMinCoord;
    if (name == "greedy-min-index") return seq::Kind::GreedyMinIndex;
    if (name == "morton") return seq::Kind::Morton;
    if (name == "hilbert") return seq::Kind::Hilbert;
    throw ConfigError("config: unknown sequencer '" + name +
                      "' (use greedy-min-coord|greedy-min-index|morton|hilbert)");
}

const char* strategy_name(mask::Strategy strategy) {
    switch (strategy) {
        case mask::Strategy::MultiBlockContiguous: return "multi-block";
        case mask::Strategy::SingleContiguousRest: return "single-contiguous";
        case mask::Strategy::SingleRandomRest: return "single-random";
    }
    return "unknown";
}

mask::Strategy strategy_from_name(const std::string& name) {
    if (name == "multi-block") return mask::Strategy::MultiBlockContiguous;
    if (name == "single-contiguous") return mask::Strategy::SingleContiguousRest;
    if (name == "single-random") return mask::Strategy::SingleRandomRest;
    throw ConfigError("config: unknown mask strategy '" + name +
                      "' (use multi-block|single-contiguous|single-random)");
}

const char* rotation_name(data::RotationMode mode) {
    switch (mode) {
        case data::RotationMode::None: return "none";
        case data::RotationMode::ZAxis: return "z";
        case data::RotationMode::Full: return "full";
    }
    return "unknown";
}

data::RotationMode rotation_from_name(const std::string& name) {
    if (name == "none") return data::RotationMode::None;
    if (name == "z") return data::RotationMode::ZAxis;
    if (name == "full") return data::RotationMode::Full;
    throw ConfigError("config: unknown rotation mode '" + name + "' (use none|z|full)");
}

void RunConfig::validate() const {
    try {
        model.validate();
        mask.validate();
        train.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("config: ") + err.what());
    }
    if (data_per_class < 1) throw ConfigError("config: data.per_class must be >= 1");
    if (data_points < 1) throw ConfigError("config: data.points must be >= 1");
    if (data_split < 0.0 || data_split > 1.0) throw ConfigError("config: data.split must be in [0, 1]");
    if (data_jitter < 0.0) throw ConfigError("config: data.jitter must be non-negative");
    if (probe_lambda < 0.0) throw ConfigError("config: probe.lambda must be non-negative");
    if (probe_max_iter < 1) throw ConfigError("config: probe.max_iter must be >= 1");
    if (fewshot_way < 2) throw ConfigError("config: fewshot.way must be >= 2");
    if (fewshot_shot < 1 || fewshot_query < 1 || fewshot_trials < 1)
        throw ConfigError("config: fewshot.shot/query/trials must be >= 1");
    if (model.c < 2) throw ConfigError("config: model.c must be >= 2 for masking");
    if (model.k > data_points) throw ConfigError("config: model.k cannot exceed data.points");
    if (model.c > data_points) throw ConfigError("config: model.c cannot exceed data.points");
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    const KeyHandler* h = find_handler(key);
    if (h == nullptr) throw ConfigError("config: unknown key '" + key + "'");
    h->set(cfg, trim(value));
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not a 'section.key = value' assignment: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_override(cfg, key, value);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream os;
    for (const auto& h : handlers()) os << h.name << " = " << h.get(cfg) << "\n";
    return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // only keys that determine the training trajectory; output locations and
    // eval-only settings do not invalidate a resume
    static const char* prefixes[] = {"run.seed", "data.", "model.", "sequencer.", "mask.", "train."};
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (const unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& handler : handlers())
        for (const auto* prefix : prefixes)
            if (std::string_view(handler.name).rfind(prefix, 0) == 0) {
                feed(handler.name);
                feed(" = ");
                feed(handler.get(cfg));
                feed("\n");
                break;
            }
    return h;
}

}  // namespace pointjepa::config
