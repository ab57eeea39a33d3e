#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pointjepa/config.hpp"
#include "pointjepa/data.hpp"
#include "pointjepa/errors.hpp"
#include "pointjepa/eval.hpp"
#include "pointjepa/train.hpp"

namespace fs = std::filesystem;
using namespace pointjepa;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 config, 3 I/O, 4 numeric failure, 5 mismatch
enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4, kMismatchError = 5 };

std::string format_short(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;  // key=value
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (section.key = value lines)");
    cmd->add_option("--out", args.out_dir, "Output directory (overrides run.out_dir)");
    cmd->add_option("--seed", args.seed, "Master seed (overrides run.seed)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set train.epochs=5");
}

config::RunConfig load_config(const CommonArgs& args) {
    config::RunConfig cfg;
    if (!args.config_path.empty()) cfg = config::parse_config_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        config::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed_given) cfg.seed = args.seed;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

void require_key(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("config: required key '") + key + "' is not set");
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write " + path.string());
    os << text;
}

void echo_effective_config(const config::RunConfig& cfg, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create directory " + dir + ": " + ec.message());
    write_text_file(fs::path(dir) / "effective.cfg", config::dump_config(cfg));
}

std::vector<geom::PointCloud> load_clouds(const data::DatasetIndex& index, bool train_split) {
    std::vector<const data::DatasetEntry*> picked;
    for (const auto& e : index.entries)
        if (e.train_split == train_split) picked.push_back(&e);
    std::vector<geom::PointCloud> clouds(picked.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(picked.size()); ++i)
        clouds[static_cast<std::size_t>(i)] = data::read_cloud(index.resolve(*picked[static_cast<std::size_t>(i)]));
    return clouds;
}

nn::JepaModel build_model(const config::RunConfig& cfg) {
    Rng init_rng = derive_stream(cfg.seed, stream_tag::init);
    return nn::JepaModel::make(cfg.model, init_rng);
}

train::TrainConfig train_config(const config::RunConfig& cfg) {
    train::TrainConfig t = cfg.train;
    t.seed = cfg.seed;
    return t;
}

// Model-section equality between a checkpoint's stored config and the live one.
void check_model_compat(const train::CheckpointState& state, const config::RunConfig& cfg) {
    if (state.config_text.empty()) return;
    const config::RunConfig stored = config::parse_config_text(state.config_text);
    if (!(stored.model == cfg.model))
        throw MismatchError("checkpoint model dimensions do not match the current config");
}

struct LabeledFeatures {
    std::vector<eval::FeatureVector> features;
    std::vector<int> labels;
};

LabeledFeatures extract_split_features(const nn::JepaModel& model, const config::RunConfig& cfg,
                                       const data::DatasetIndex& index, bool train_split) {
    std::vector<const data::DatasetEntry*> picked;
    for (const auto& e : index.entries)
        if (e.train_split == train_split) picked.push_back(&e);
    LabeledFeatures out;
    out.features.resize(picked.size());
    out.labels.resize(picked.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(picked.size()); ++i) {
        const auto& entry = *picked[static_cast<std::size_t>(i)];
        const geom::PointCloud cloud = data::read_cloud(index.resolve(entry));
        out.features[static_cast<std::size_t>(i)] =
            eval::extract_features(model, cloud, cfg.sequencer, cfg.seq_bits);
        out.labels[static_cast<std::size_t>(i)] = entry.label;
    }
    return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write " + path.string());
    os << "metric,value\n";
    for (const auto& [name, value] : rows) os << name << "," << format_short(value) << "\n";
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_synth_data(const config::RunConfig& cfg) {
    require_key(cfg.data_dir, "data.dir");
    data::BuildConfig build;
    build.out_dir = cfg.data_dir;
    build.per_class = cfg.data_per_class;
    build.n_points = cfg.data_points;
    build.split_ratio = cfg.data_split;
    build.jitter_sigma = cfg.data_jitter;
    build.rotation = cfg.data_rotation;
    build.seed = cfg.seed;
    const data::DatasetIndex index = data::build_dataset(build);
    echo_effective_config(cfg, cfg.data_dir);

    std::size_t n_train = 0, n_test = 0;
    for (const auto& e : index.entries) (e.train_split ? n_train : n_test)++;
    std::cout << "index: " << (fs::path(cfg.data_dir) / "index.txt").string() << "\n"
              << "classes: " << index.class_names.size() << "\n"
              << "train: " << n_train << "\ntest: " << n_test << "\n";
    return kOk;
}

int cmd_pretrain(const config::RunConfig& cfg, const std::string& resume_path,
                 std::int64_t stop_after) {
    require_key(cfg.data_dir, "data.dir");
    require_key(cfg.out_dir, "run.out_dir");
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw FormatError("cannot create " + cfg.out_dir + ": " + ec.message());

    const data::DatasetIndex index = data::read_index((fs::path(cfg.data_dir) / "index.txt").string());
    const std::vector<geom::PointCloud> clouds = load_clouds(index, /*train_split=*/true);

    nn::JepaModel model = build_model(cfg);
    train::PretrainOptions options;
    options.sequencer = cfg.sequencer;
    options.seq_bits = cfg.seq_bits;
    options.mask = cfg.mask;
    options.stop_after_epochs = stop_after;

    train::CheckpointState resume_state;
    if (!resume_path.empty()) {
        resume_state = train::load_checkpoint(resume_path);
        if (resume_state.config_hash != config::config_hash(cfg))
            throw MismatchError("resume checkpoint was produced by a different config");
        options.resume = &resume_state;
    }

    std::ofstream loss_csv(fs::path(cfg.out_dir) / "loss.csv", std::ios::trunc);
    if (!loss_csv) throw FormatError("cannot write loss.csv under " + cfg.out_dir);
    loss_csv << "epoch,step,loss,lr,tau\n";
    options.on_step = [&loss_csv](const train::LossRow& row) {
        loss_csv << row.epoch << "," << row.step << "," << format_short(row.loss) << ","
                 << format_short(row.lr) << "," << format_short(row.tau) << "\n";
        loss_csv.flush();
    };

    train::PretrainResult result = train::pretrain(clouds, model, train_config(cfg), options);
    result.state.config_text = config::dump_config(cfg);
    result.state.config_hash = config::config_hash(cfg);
    const fs::path ckpt = fs::path(cfg.out_dir) / "checkpoint.pjck";
    train::save_checkpoint(result.state, ckpt.string());
    echo_effective_config(cfg, cfg.out_dir);

    std::cout << "checkpoint: " << ckpt.string() << "\n"
              << "final_epoch_mean_loss: " << format_short(result.epoch_mean_loss.back()) << "\n";
    return kOk;
}

int cmd_probe(const config::RunConfig& cfg, const std::string& ckpt_path, bool random_init) {
    require_key(cfg.data_dir, "data.dir");
    const data::DatasetIndex index = data::read_index((fs::path(cfg.data_dir) / "index.txt").string());

    nn::JepaModel model = build_model(cfg);
    if (!random_init) {
        const train::CheckpointState state = train::load_checkpoint(ckpt_path);
        check_model_compat(state, cfg);
        train::apply_checkpoint(state, model);
    }

    const LabeledFeatures train_set = extract_split_features(model, cfg, index, true);
    const LabeledFeatures test_set = extract_split_features(model, cfg, index, false);
    const double accuracy = eval::linear_probe(train_set.features, train_set.labels,
                                               test_set.features, test_set.labels, cfg.probe_lambda,
                                               cfg.probe_max_iter);
    const double collapse = eval::collapse_metric(test_set.features);

    std::cout << "probe_accuracy: " << format_short(accuracy) << "\n"
              << "collapse_metric: " << format_short(collapse) << "\n"
              << "train_size: " << train_set.features.size() << "\n"
              << "test_size: " << test_set.features.size() << "\n";
    if (!cfg.out_dir.empty()) {
        echo_effective_config(cfg, cfg.out_dir);
        write_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv",
                          {{"probe_accuracy", accuracy},
                           {"collapse_metric", collapse},
                           {"train_size", static_cast<double>(train_set.features.size())},
                           {"test_size", static_cast<double>(test_set.features.size())}});
    }
    return kOk;
}

int cmd_fewshot(const config::RunConfig& cfg, const std::string& ckpt_path, bool random_init) {
    require_key(cfg.data_dir, "data.dir");
    const data::DatasetIndex index = data::read_index((fs::path(cfg.data_dir) / "index.txt").string());

    nn::JepaModel model = build_model(cfg);
    if (!random_init) {
        const train::CheckpointState state = train::load_checkpoint(ckpt_path);
        check_model_compat(state, cfg);
        train::apply_checkpoint(state, model);
    }

    // episodes draw from the whole dataset; the probe sees support only
    std::vector<std::vector<eval::FeatureVector>> by_class(index.class_names.size());
    {
        std::vector<eval::FeatureVector> features(index.entries.size());
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(index.entries.size()); ++i) {
            const geom::PointCloud cloud = data::read_cloud(index.resolve(index.entries[static_cast<std::size_t>(i)]));
            features[static_cast<std::size_t>(i)] =
                eval::extract_features(model, cloud, cfg.sequencer, cfg.seq_bits);
        }
        for (std::size_t i = 0; i < index.entries.size(); ++i)
            by_class[static_cast<std::size_t>(index.entries[i].label)].push_back(std::move(features[i]));
    }

    const eval::FewShotResult result = eval::few_shot_eval(
        by_class, static_cast<std::size_t>(cfg.fewshot_way), static_cast<std::size_t>(cfg.fewshot_shot),
        static_cast<std::size_t>(cfg.fewshot_query), static_cast<std::size_t>(cfg.fewshot_trials),
        cfg.seed, cfg.probe_lambda);

    std::cout << "fewshot: " << cfg.fewshot_way << "-way " << cfg.fewshot_shot << "-shot over "
              << cfg.fewshot_trials << " trials\n"
              << "mean_accuracy: " << format_short(result.mean) << "\n"
              << "std_accuracy: " << format_short(result.stddev) << "\n";
    if (!cfg.out_dir.empty()) {
        echo_effective_config(cfg, cfg.out_dir);
        write_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv",
                          {{"fewshot_mean", result.mean}, {"fewshot_std", result.stddev}});
    }
    return kOk;
}

int cmd_sequence(const config::RunConfig& cfg, const std::string& cloud_path) {
    const geom::PointCloud cloud = data::read_cloud(cloud_path);
    const std::int64_t c = std::min<std::int64_t>(cfg.model.c, static_cast<std::int64_t>(cloud.size()));
    const auto center_indices = geom::farthest_point_sample(cloud, static_cast<std::size_t>(c),
                                                            geom::StartPolicy::min_coord_sum());
    std::vector<geom::Vec3> centers;
    centers.reserve(center_indices.size());
    for (const auto i : center_indices) centers.push_back(cloud.points[i]);
    const seq::Ordering order = seq::order_centers(centers, cfg.sequencer, cfg.seq_bits);

    for (std::size_t i = 0; i < order.perm.size(); ++i)
        std::cout << order.perm[i] << (i + 1 < order.perm.size() ? " " : "\n");
    for (const auto p : order.perm) {
        const auto& ctr = centers[p];
        std::cout << format_short(ctr[0]) << " " << format_short(ctr[1]) << " "
                  << format_short(ctr[2]) << "\n";
    }
    std::cout << "contiguity_score = " << format_short(seq::contiguity_score(centers, order)) << "\n";
    return kOk;
}

int cmd_info(const config::RunConfig& cfg) {
    // the whole output re-parses as a config: the banner is a comment line
    std::cout << "# pointjepa " << kVersion << "\n" << config::dump_config(cfg);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-cloud JEPA pretraining and evaluation"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string resume_path, checkpoint_path, cloud_path;
    bool random_init = false;

    CLI::App* synth = app.add_subcommand("synth-data", "Generate the synthetic shape dataset");
    add_common(synth, common);

    CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "Run JEPA pretraining");
    add_common(pretrain_cmd, common);
    pretrain_cmd->add_option("--resume", resume_path, "Continue from a checkpoint");
    std::int64_t stop_after = 0;
    pretrain_cmd->add_option("--stop-after", stop_after,
                             "Interrupt after this many epochs (schedules still span train.epochs)");

    CLI::App* probe = app.add_subcommand("probe", "Linear probe on frozen features");
    add_common(probe, common);
    probe->add_option("--checkpoint", checkpoint_path, "Trained checkpoint");
    probe->add_flag("--random-init", random_init, "Evaluate an untrained model instead");

    CLI::App* fewshot = app.add_subcommand("fewshot", "Few-shot episode evaluation");
    add_common(fewshot, common);
    fewshot->add_option("--checkpoint", checkpoint_path, "Trained checkpoint");
    fewshot->add_flag("--random-init", random_init, "Evaluate an untrained model instead");
    std::int64_t way = 0, shot = 0, trials = 0;
    fewshot->add_option("--way", way, "Classes per episode");
    fewshot->add_option("--shot", shot, "Support instances per class");
    fewshot->add_option("--trials", trials, "Number of episodes");

    CLI::App* sequence = app.add_subcommand("sequence", "Print a cloud's patch visit order");
    add_common(sequence, common);
    sequence->add_option("--cloud", cloud_path, "Cloud file (.pcj)")->required();
    std::string sequencer_override;
    sequence->add_option("--sequencer", sequencer_override,
                         "greedy-min-coord|greedy-min-index|morton|hilbert");

    CLI::App* info = app.add_subcommand("info", "Print version and the effective config");
    add_common(info, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        config::RunConfig cfg = load_config(common);
        if (synth->parsed()) return cmd_synth_data(cfg);
        if (pretrain_cmd->parsed()) return cmd_pretrain(cfg, resume_path, stop_after);
        if (probe->parsed()) {
            if (!random_init && checkpoint_path.empty())
                throw ConfigError("probe: --checkpoint is required (or pass --random-init)");
            return cmd_probe(cfg, checkpoint_path, random_init);
        }
        if (fewshot->parsed()) {
            if (!random_init && checkpoint_path.empty())
                throw ConfigError("fewshot: --checkpoint is required (or pass --random-init)");
            if (way > 0) cfg.fewshot_way = way;
            if (shot > 0) cfg.fewshot_shot = shot;
            if (trials > 0) cfg.fewshot_trials = trials;
            cfg.validate();
            return cmd_fewshot(cfg, checkpoint_path, random_init);
        }
        if (sequence->parsed()) {
            if (!sequencer_override.empty()) cfg.sequencer = config::sequencer_from_name(sequencer_override);
            return cmd_sequence(cfg, cloud_path);
        }
        if (info->parsed()) return cmd_info(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const MismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMismatchError;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericError;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kOk;
}
