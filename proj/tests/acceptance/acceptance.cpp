// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pointjepa/config.hpp"
#include "pointjepa/data.hpp"
#include "pointjepa/eval.hpp"
#include "pointjepa/masking.hpp"
#include "pointjepa/sequencer.hpp"
#include "pointjepa/train.hpp"

using namespace pointjepa;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;  // fills a detail string
};

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "pj_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string cmd = std::string(PJ_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return -1;
    char buf[4096];
    std::string out;
    while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
    if (output != nullptr) *output = out;
    const int status = pclose(pipe);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

std::vector<geom::Vec3> random_centers(std::size_t c, Rng& rng) {
    std::vector<geom::Vec3> centers(c);
    for (auto& p : centers)
        p = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(-1, 1))};
    return centers;
}

geom::PointCloud synthetic_cloud(std::size_t shape_class, std::size_t n, std::uint64_t seed) {
    Rng rng = derive_stream(seed, stream_tag::data, shape_class);
    const data::ShapeKind kinds[6] = {data::ShapeKind::Sphere,   data::ShapeKind::Cube,
                                      data::ShapeKind::Cylinder, data::ShapeKind::Cone,
                                      data::ShapeKind::Torus,    data::ShapeKind::Plane};
    const auto spec = data::sample_shape_spec(kinds[shape_class % 6], rng);
    return data::gen_shape(spec, n, rng, 0.01, data::RotationMode::None);
}

// ---------------------------------------------------------------------------
// desk-scale training configuration shared by criteria 8, 9, and 11
// ---------------------------------------------------------------------------

nn::ModelDims desk_dims() {
    nn::ModelDims d;
    d.c = 16;
    d.k = 16;
    d.embed_dim = 64;
    d.encoder_depth = 2;
    d.encoder_heads = 4;
    d.predictor_dim = 32;
    d.predictor_depth = 2;
    d.predictor_heads = 4;
    d.point_h1 = 32;
    d.point_h2 = 64;
    d.point_h3 = 128;
    d.pos_hidden = 64;
    return d;
}

config::RunConfig desk_config() {
    config::RunConfig cfg;
    cfg.seed = 2024;
    cfg.data_dir = (work_dir() / "desk_data").string();
    cfg.data_per_class = 107;  // 86 train per class -> 516 train, 16 batches of 32
    cfg.data_points = 1024;
    cfg.data_split = 0.8;
    cfg.data_jitter = 0.03;
    cfg.model = desk_dims();
    cfg.train.epochs = 60;
    cfg.train.batch_size = 32;
    cfg.train.warmup_epochs = 6;
    return cfg;
}

struct DeskArtifacts {
    bool trained = false;
    double train_seconds = 0.0;
    std::vector<double> epoch_mean_loss;
    train::CheckpointState checkpoint;
    config::RunConfig cfg;
    data::DatasetIndex index;
};

DeskArtifacts& desk() {
    static DeskArtifacts artifacts;
    return artifacts;
}

std::vector<geom::PointCloud> load_split(const data::DatasetIndex& index, bool train_split) {
    std::vector<geom::PointCloud> clouds;
    for (const auto& e : index.entries)
        if (e.train_split == train_split) clouds.push_back(data::read_cloud(index.resolve(e)));
    return clouds;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

bool crit_sequencer_oracle(std::string& detail) {
    const auto start = Clock::now();
    Rng rng(42);
    std::vector<std::vector<geom::Vec3>> batch;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t c = 2 + static_cast<std::size_t>(rng.uniform_below(127));  // 2..128
        const auto centers = random_centers(c, rng);
        batch.push_back(centers);
        for (const auto rule : {seq::StartRule::MinCoordSum, seq::StartRule::MinIndex}) {
            // O(c^2) nearest-unvisited-chain oracle
            std::size_t cur = 0;
            if (rule == seq::StartRule::MinCoordSum) {
                float best = centers[0][0] + centers[0][1] + centers[0][2];
                for (std::size_t i = 1; i < c; ++i) {
                    const float s = centers[i][0] + centers[i][1] + centers[i][2];
                    if (s < best) {
                        best = s;
                        cur = i;
                    }
                }
            }
            std::vector<std::uint32_t> oracle{static_cast<std::uint32_t>(cur)};
            std::vector<bool> used(c, false);
            used[cur] = true;
            while (oracle.size() < c) {
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
                oracle.push_back(static_cast<std::uint32_t>(pick));
                cur = pick;
            }
            if (seq::greedy_order(centers, rule).perm != oracle) {
                detail = "greedy_order diverged from the oracle";
                return false;
            }
        }
    }
    const auto batched = seq::batched_greedy_order(batch, seq::StartRule::MinCoordSum);
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (batched[i].perm != seq::greedy_order(batch[i], seq::StartRule::MinCoordSum).perm) {
            detail = "batched variant diverged from serial";
            return false;
        }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    detail = "1000 clouds, both start rules, batched bitwise, " + std::to_string(seconds) + "s";
    return seconds <= 60.0;
}

bool crit_contiguity(std::string& detail) {
    double greedy_sum = 0, morton_sum = 0, hilbert_sum = 0, random_sum = 0;
    Rng perm_rng(7);
    for (std::size_t i = 0; i < 100; ++i) {
        const geom::PointCloud cloud = synthetic_cloud(i % 6, 1024, 555 + i);
        const auto idx = geom::farthest_point_sample(cloud, 64);
        std::vector<geom::Vec3> centers;
        for (const auto j : idx) centers.push_back(cloud.points[j]);

        greedy_sum += seq::contiguity_score(centers, seq::greedy_order(centers, seq::StartRule::MinCoordSum));
        morton_sum += seq::contiguity_score(centers, seq::morton_order(centers, 10));
        hilbert_sum += seq::contiguity_score(centers, seq::hilbert_order(centers, 10));
        seq::Ordering random_order;
        random_order.perm.resize(64);
        std::iota(random_order.perm.begin(), random_order.perm.end(), 0u);
        perm_rng.shuffle(random_order.perm);
        random_sum += seq::contiguity_score(centers, random_order);
    }
    std::ostringstream os;
    os << "mean scores: greedy " << greedy_sum / 100 << ", morton " << morton_sum / 100
       << ", hilbert " << hilbert_sum / 100 << ", random " << random_sum / 100;
    detail = os.str();
    return greedy_sum <= 0.5 * random_sum && morton_sum < random_sum && hilbert_sum < random_sum;
}

bool crit_masking(std::string& detail) {
    mask::MaskConfig cfg;  // defaults: M=4, target (0.15, 0.2), context (0.4, 0.75)
    Rng rng(99);
    for (int draw = 0; draw < 10000; ++draw) {
        const mask::MaskSample s = mask::sample_mask(64, cfg, rng);
        if (s.target_blocks.size() != 4) {
            detail = "target block count != 4";
            return false;
        }
        std::set<std::uint32_t> targets;
        for (const auto& b : s.target_blocks) {
            if (b.size() < 10 || b.size() > 13) {  // round(9.6)=10 .. round(12.8)=13
                detail = "target block length outside [10, 13]: " + std::to_string(b.size());
                return false;
            }
            targets.insert(b.begin(), b.end());
        }
        const std::size_t available = 64 - targets.size();
        const auto lo = static_cast<std::size_t>(std::round(0.4 * static_cast<double>(available)));
        const auto hi = static_cast<std::size_t>(std::round(0.75 * static_cast<double>(available)));
        if (s.context.size() < lo || s.context.size() > hi) {
            detail = "context length outside rounded bounds";
            return false;
        }
        for (const auto p : s.context)
            if (targets.count(p) != 0) {
                detail = "context overlaps a target";
                return false;
            }
    }
    detail = "10000 samples: zero overlap, 4 blocks each, lengths in bounds";
    return true;
}

bool crit_permutation_invariance(std::string& detail) {
    Rng rng(11);
    const nn::ModelDims dims = desk_dims();
    const auto point_enc = nn::PointEncoderT<float>::make(dims, rng);
    const std::int64_t patches = 20, k = dims.k;
    nn::Tensor coords = nn::Tensor::uninit({patches * k, 3});
    for (auto& v : coords.data_vec()) v = static_cast<float>(rng.uniform(-0.3, 0.3));
    nn::NoGradGuard no_grad;
    const nn::Tensor base = nn::encode_patches(coords, k, point_enc);

    Rng shuffle_rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        nn::Tensor shuffled = nn::Tensor::uninit({patches * k, 3});
        for (std::int64_t p = 0; p < patches; ++p) {
            std::vector<std::int64_t> perm(k);
            std::iota(perm.begin(), perm.end(), 0);
            shuffle_rng.shuffle(perm);
            for (std::int64_t j = 0; j < k; ++j)
                for (int a = 0; a < 3; ++a)
                    shuffled.data()[(p * k + j) * 3 + a] = coords.data()[(p * k + perm[j]) * 3 + a];
        }
        if (nn::encode_patches(shuffled, k, point_enc).data_vec() != base.data_vec()) {
            detail = "patch embedding changed under within-patch permutation";
            return false;
        }
    }

    Rng init_rng = derive_stream(314, stream_tag::init);
    const auto model = nn::JepaModel::make(dims, init_rng);
    const geom::PointCloud cloud = synthetic_cloud(2, 1024, 777);
    const auto base_feat = eval::extract_features(model, cloud);
    Rng cloud_rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        geom::PointCloud permuted = cloud;
        cloud_rng.shuffle(permuted.points);
        const auto feat = eval::extract_features(model, permuted);
        for (std::size_t i = 0; i < feat.size(); ++i) {
            const float denom = std::max(1.0f, std::abs(base_feat[i]));
            if (std::abs(feat[i] - base_feat[i]) > 1e-5f * denom) {
                detail = "extract_features moved more than 1e-5 under point permutation";
                return false;
            }
        }
    }
    detail = "bitwise patch invariance (100x20) and end-to-end feature invariance (100 perms)";
    return true;
}

// Teacher targets for the toy gradient check, computed once per model. The
// loss below treats them as constants, exactly like the training loop's
// stop-gradient; the finite-difference oracle must therefore hold them fixed
// while perturbing parameters.
template <typename S>
std::vector<nn::TensorT<S>> toy_targets(const nn::JepaModelT<S>& model,
                                        const std::vector<double>& coords,
                                        const std::vector<double>& centers,
                                        const std::vector<std::vector<std::uint32_t>>& blocks) {
    const auto& d = model.dims;
    std::vector<S> coord_data(coords.begin(), coords.end());
    std::vector<S> center_data(centers.begin(), centers.end());
    nn::NoGradGuard no_grad;
    nn::TensorT<S> local = nn::TensorT<S>::from_data({d.c * d.k, 3}, std::move(coord_data));
    nn::TensorT<S> positions = nn::TensorT<S>::from_data({d.c, 3}, std::move(center_data));
    nn::TensorT<S> tokens = nn::encode_patches(local, d.k, model.point_encoder);
    nn::TensorT<S> y_full =
        nn::encoder_forward(tokens, positions, model.target_encoder, model.pos_encoder_d);
    return nn::select_target_embeddings(y_full, blocks);
}

// Toy-model jepa_loss pipeline used by the gradient check, templated on the
// scalar so the double instantiation serves as the finite-difference oracle.
template <typename S>
nn::TensorT<S> toy_jepa_loss(const nn::JepaModelT<S>& model, const std::vector<double>& coords,
                             const std::vector<double>& centers,
                             const std::vector<std::vector<std::uint32_t>>& blocks,
                             const std::vector<std::uint32_t>& context,
                             const std::vector<nn::TensorT<S>>& targets) {
    const auto& d = model.dims;
    std::vector<S> coord_data(coords.begin(), coords.end());
    std::vector<S> center_data(centers.begin(), centers.end());
    nn::TensorT<S> local = nn::TensorT<S>::from_data({d.c * d.k, 3}, std::move(coord_data));
    nn::TensorT<S> positions = nn::TensorT<S>::from_data({d.c, 3}, std::move(center_data));

    nn::TensorT<S> tokens = nn::encode_patches(local, d.k, model.point_encoder);
    std::vector<std::int64_t> ctx_rows(context.begin(), context.end());
    nn::TensorT<S> ctx_tokens = nn::gather_rows(tokens, ctx_rows);
    nn::TensorT<S> ctx_pos = nn::gather_rows(positions, ctx_rows);
    nn::TensorT<S> ctx_enc =
        nn::encoder_forward(ctx_tokens, ctx_pos, model.context_encoder, model.pos_encoder_d);

    std::vector<nn::TensorT<S>> tgt_pos;
    for (const auto& b : blocks) {
        std::vector<std::int64_t> rows(b.begin(), b.end());
        tgt_pos.push_back(nn::gather_rows(positions, rows));
    }
    const auto preds =
        nn::predict_targets(ctx_enc, ctx_pos, tgt_pos, model.predictor, model.pos_encoder_p);
    return train::jepa_loss(preds, targets, S(2));
}

bool crit_gradient_check(std::string& detail) {
    nn::ModelDims dims;
    dims.c = 8;
    dims.k = 4;
    dims.embed_dim = 8;
    dims.encoder_depth = 2;
    dims.encoder_heads = 2;
    dims.predictor_dim = 8;
    dims.predictor_depth = 2;
    dims.predictor_heads = 2;
    dims.point_h1 = 8;
    dims.point_h2 = 8;
    dims.point_h3 = 16;
    dims.pos_hidden = 8;

    Rng init_rng(2718);
    const auto dmodel = nn::JepaModelT<double>::make(dims, init_rng);
    Rng data_rng(3141);
    std::vector<double> coords(static_cast<std::size_t>(dims.c * dims.k * 3));
    for (auto& v : coords) v = data_rng.uniform(-0.3, 0.3);
    std::vector<double> centers(static_cast<std::size_t>(dims.c * 3));
    for (auto& v : centers) v = data_rng.uniform(-1, 1);
    const std::vector<std::vector<std::uint32_t>> blocks{{1, 2}, {5, 6}};
    const std::vector<std::uint32_t> context{0, 3, 4, 7};

    // fp32 twin with identical parameter values
    Rng init_rng2(2718);
    auto fmodel = nn::JepaModelT<float>::make(dims, init_rng2);
    {
        const auto dsrc = dmodel.all_params();
        auto fdst = fmodel.all_params();
        for (std::size_t i = 0; i < dsrc.size(); ++i)
            for (std::size_t j = 0; j < dsrc[i].tensor.data_vec().size(); ++j)
                fdst[i].tensor.data()[j] = static_cast<float>(dsrc[i].tensor.data()[j]);
    }

    const auto dtargets = toy_targets(dmodel, coords, centers, blocks);
    const auto ftargets = toy_targets(fmodel, coords, centers, blocks);
    auto dloss = toy_jepa_loss(dmodel, coords, centers, blocks, context, dtargets);
    dloss.backward();
    auto floss = toy_jepa_loss(fmodel, coords, centers, blocks, context, ftargets);
    floss.backward();

    const auto dparams = dmodel.trainable_params();
    const auto fparams = fmodel.trainable_params();
    Rng pick(161803);
    double worst_double = 0, worst_float = 0;
    for (std::size_t g = 0; g < dparams.size(); ++g) {
        if (dparams[g].tensor.grad().empty()) {
            detail = "missing gradient for group " + dparams[g].name;
            return false;
        }
        const std::size_t count = dparams[g].tensor.data_vec().size();
        const std::size_t probes = std::min<std::size_t>(count, 10);
        for (std::size_t t = 0; t < probes; ++t) {
            const auto i = static_cast<std::size_t>(pick.uniform_below(count));
            auto tensor = dparams[g].tensor;
            const double saved = tensor.data()[i];
            const double eps = 1e-6 * std::max(1.0, std::abs(saved));
            tensor.data()[i] = saved + eps;
            const double up = toy_jepa_loss(dmodel, coords, centers, blocks, context, dtargets).item();
            tensor.data()[i] = saved - eps;
            const double down = toy_jepa_loss(dmodel, coords, centers, blocks, context, dtargets).item();
            tensor.data()[i] = saved;
            const double fd = (up - down) / (2 * eps);

            const double analytic_double = dparams[g].tensor.grad()[i];
            const double rel_double =
                std::abs(fd - analytic_double) / std::max({std::abs(fd), std::abs(analytic_double), 1e-8});
            worst_double = std::max(worst_double, rel_double);

            const double analytic_float = static_cast<double>(fparams[g].tensor.grad()[i]);
            const double err_float = std::abs(fd - analytic_float);
            const double rel_float = err_float / std::max({std::abs(fd), std::abs(analytic_float), 1e-3});
            worst_float = std::max(worst_float, rel_float);
            if (rel_double > 1e-3 || rel_float > 1e-3) {
                detail = "gradient mismatch in " + dparams[g].name;
                return false;
            }
        }
    }
    std::ostringstream os;
    os << dparams.size() << " parameter groups; worst rel err: double " << worst_double
       << ", fp32 " << worst_float;
    detail = os.str();
    return true;
}

bool crit_ema_teacher(std::string& detail) {
    train::TrainConfig cfg;
    if (train::tau_schedule(0, 1000, cfg) != 0.995 || train::tau_schedule(999, 1000, cfg) != 1.0) {
        detail = "tau endpoints are not exactly 0.995 / 1.0";
        return false;
    }

    nn::ModelDims dims;
    dims.c = 8;
    dims.k = 4;
    dims.embed_dim = 8;
    dims.encoder_depth = 2;
    dims.encoder_heads = 2;
    dims.predictor_dim = 8;
    dims.predictor_depth = 2;
    dims.predictor_heads = 2;
    dims.point_h1 = 8;
    dims.point_h2 = 8;
    dims.point_h3 = 16;
    dims.pos_hidden = 8;
    Rng rng(5);
    auto model = nn::JepaModel::make(dims, rng);

    Rng cloud_rng(6);
    std::vector<geom::PointCloud> clouds(8);
    for (auto& cloud : clouds) {
        cloud.points.resize(64);
        for (auto& p : cloud.points)
            p = {static_cast<float>(cloud_rng.uniform(-1, 1)),
                 static_cast<float>(cloud_rng.uniform(-1, 1)),
                 static_cast<float>(cloud_rng.uniform(-1, 1))};
    }

    std::vector<nn::NamedParam<float>> ctx_list, tgt_list;
    model.context_encoder.collect("enc", ctx_list);
    model.target_encoder.collect("enc", tgt_list);
    double replay = static_cast<double>(tgt_list[0].tensor.data()[0]);
    double worst = 0.0;

    train::TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.warmup_epochs = 1;
    tc.seed = 7;
    train::PretrainOptions options;
    options.on_step = [&](const train::LossRow& row) {
        replay = row.tau * replay + (1.0 - row.tau) * static_cast<double>(ctx_list[0].tensor.data()[0]);
        worst = std::max(worst, std::abs(replay - static_cast<double>(tgt_list[0].tensor.data()[0])));
    };
    train::pretrain(clouds, model, tc, options);

    for (const auto& p : model.target_params())
        if (p.tensor.requires_grad() || !p.tensor.grad().empty()) {
            detail = "teacher parameter carries a gradient";
            return false;
        }
    std::ostringstream os;
    os << "teacher grad-free; EMA recurrence max deviation " << worst;
    detail = os.str();
    return worst <= 1e-7;
}

bool crit_schedule_endpoints(std::string& detail) {
    train::TrainConfig cfg;
    const std::int64_t total = 960, warmup = 96;
    const bool ok = train::lr_schedule(0, total, warmup, cfg) == 1e-5 &&
                    train::lr_schedule(warmup, total, warmup, cfg) == 1e-3 &&
                    train::lr_schedule(total - 1, total, warmup, cfg) == 1e-6;
    detail = ok ? "1e-5 at step 0, 1e-3 at warmup end, 1e-6 at final step, exact"
                : "an endpoint is not exact";
    return ok;
}

bool crit_training_dynamics(std::string& detail) {
    auto& artifacts = desk();
    artifacts.cfg = desk_config();
    const auto& cfg = artifacts.cfg;

    data::BuildConfig build;
    build.out_dir = cfg.data_dir;
    build.per_class = cfg.data_per_class;
    build.n_points = cfg.data_points;
    build.split_ratio = cfg.data_split;
    build.jitter_sigma = cfg.data_jitter;
    build.rotation = cfg.data_rotation;
    build.seed = cfg.seed;
    artifacts.index = data::build_dataset(build);
    const auto train_clouds = load_split(artifacts.index, true);

    Rng init_rng = derive_stream(cfg.seed, stream_tag::init);
    auto model = nn::JepaModel::make(cfg.model, init_rng);
    train::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    train::PretrainOptions options;
    options.sequencer = cfg.sequencer;
    options.seq_bits = cfg.seq_bits;
    options.mask = cfg.mask;

    const auto start = Clock::now();
    auto result = train::pretrain(train_clouds, model, tc, options);
    artifacts.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    artifacts.epoch_mean_loss = result.epoch_mean_loss;
    artifacts.checkpoint = std::move(result.state);
    artifacts.checkpoint.config_text = config::dump_config(cfg);
    artifacts.checkpoint.config_hash = config::config_hash(cfg);
    artifacts.trained = true;

    const double first = artifacts.epoch_mean_loss.front();
    const double last = artifacts.epoch_mean_loss.back();

    const auto test_clouds = load_split(artifacts.index, false);
    std::vector<eval::FeatureVector> test_features;
    for (const auto& cloud : test_clouds)
        test_features.push_back(eval::extract_features(model, cloud, cfg.sequencer, cfg.seq_bits));
    const double collapse = eval::collapse_metric(test_features);

    std::ostringstream os;
    os << "loss " << first << " -> " << last << " (" << (last / first * 100) << "% of epoch 1), collapse "
       << collapse << ", " << artifacts.train_seconds << "s";
    detail = os.str();
    return last <= 0.5 * first && collapse > 0.01 && artifacts.train_seconds <= 900.0;
}

bool crit_representation_quality(std::string& detail) {
    auto& artifacts = desk();
    if (!artifacts.trained) {
        detail = "skipped: training criterion did not produce a checkpoint";
        return false;
    }
    const auto& cfg = artifacts.cfg;

    Rng init_rng = derive_stream(cfg.seed, stream_tag::init);
    auto trained = nn::JepaModel::make(cfg.model, init_rng);
    train::apply_checkpoint(artifacts.checkpoint, trained);
    Rng init_rng2 = derive_stream(cfg.seed, stream_tag::init);
    const auto random_model = nn::JepaModel::make(cfg.model, init_rng2);

    auto featurize = [&](const nn::JepaModel& model, bool train_split,
                         std::vector<eval::FeatureVector>& x, std::vector<int>& y) {
        for (const auto& e : artifacts.index.entries) {
            if (e.train_split != train_split) continue;
            const auto cloud = data::read_cloud(artifacts.index.resolve(e));
            x.push_back(eval::extract_features(model, cloud, cfg.sequencer, cfg.seq_bits));
            y.push_back(e.label);
        }
    };

    std::vector<eval::FeatureVector> train_x, test_x, rtrain_x, rtest_x;
    std::vector<int> train_y, test_y, rtrain_y, rtest_y;
    featurize(trained, true, train_x, train_y);
    featurize(trained, false, test_x, test_y);
    featurize(random_model, true, rtrain_x, rtrain_y);
    featurize(random_model, false, rtest_x, rtest_y);

    const double acc_trained =
        eval::linear_probe(train_x, train_y, test_x, test_y, cfg.probe_lambda, cfg.probe_max_iter);
    const double acc_random =
        eval::linear_probe(rtrain_x, rtrain_y, rtest_x, rtest_y, cfg.probe_lambda, cfg.probe_max_iter);

    auto by_class = [&](const nn::JepaModel& model) {
        std::vector<std::vector<eval::FeatureVector>> out(artifacts.index.class_names.size());
        for (const auto& e : artifacts.index.entries) {
            const auto cloud = data::read_cloud(artifacts.index.resolve(e));
            out[static_cast<std::size_t>(e.label)].push_back(
                eval::extract_features(model, cloud, cfg.sequencer, cfg.seq_bits));
        }
        return out;
    };
    const auto fs_trained = eval::few_shot_eval(by_class(trained), 5, 10, 20, 10, cfg.seed);
    const auto fs_random = eval::few_shot_eval(by_class(random_model), 5, 10, 20, 10, cfg.seed);

    std::ostringstream os;
    os << "probe: trained " << acc_trained << " vs random " << acc_random << "; fewshot: trained "
       << fs_trained.mean << " +- " << fs_trained.stddev << " vs random " << fs_random.mean;
    detail = os.str();
    return acc_trained >= acc_random + 0.10 && acc_trained > 0.80 && fs_trained.mean > fs_random.mean;
}

bool crit_ablation_matrix(std::string& detail) {
    const auto start = Clock::now();
    const fs::path root = work_dir() / "matrix";
    fs::create_directories(root);
    const fs::path data_dir = root / "data";

    // shared tiny dataset + model so every variant is a smoke-scale run
    const std::string common =
        " --set data.dir=" + data_dir.string() +
        " --set data.per_class=10 --set data.points=256 --set data.split=0.5"
        " --set model.c=16 --set model.k=16 --set model.embed_dim=32 --set model.encoder_depth=1"
        " --set model.encoder_heads=2 --set model.predictor_dim=16 --set model.predictor_depth=1"
        " --set model.predictor_heads=2 --set model.point_h1=16 --set model.point_h2=32"
        " --set model.point_h3=32 --set model.pos_hidden=16"
        " --set train.epochs=2 --set train.batch_size=10 --set train.warmup_epochs=1";
    if (run_cli("synth-data --seed 3" + common) != 0) {
        detail = "matrix dataset build failed";
        return false;
    }

    std::vector<std::pair<std::string, std::string>> variants;
    for (const std::string kind : {"greedy-min-coord", "greedy-min-index", "morton", "hilbert"})
        variants.emplace_back("seq_" + kind, " --set sequencer.kind=" + kind);
    for (int m = 1; m <= 6; ++m)
        variants.emplace_back("mask_multi" + std::to_string(m),
                              " --set mask.strategy=multi-block --set mask.target_count=" +
                                  std::to_string(m));
    variants.emplace_back("mask_single_random",
                          " --set mask.strategy=single-random --set mask.target_ratio_lo=0.6"
                          " --set mask.target_ratio_hi=0.6");
    variants.emplace_back("mask_single_contig",
                          " --set mask.strategy=single-contiguous --set mask.target_ratio_lo=0.6"
                          " --set mask.target_ratio_hi=0.6");

    for (const auto& [name, extra] : variants) {
        const fs::path out = root / name;
        std::string log;
        if (run_cli("pretrain --seed 3" + common + extra + " --out " + out.string(), &log) != 0) {
            detail = name + ": pretrain failed: " + log;
            return false;
        }
        if (run_cli("probe --seed 3" + common + extra + " --out " + out.string() +
                        " --checkpoint " + (out / "checkpoint.pjck").string(),
                    &log) != 0) {
            detail = name + ": probe failed: " + log;
            return false;
        }
        const std::string metrics = slurp(out / "metrics.csv");
        if (metrics.find("metric,value") == std::string::npos ||
            metrics.find("probe_accuracy,") == std::string::npos ||
            metrics.find("collapse_metric,") == std::string::npos) {
            detail = name + ": metrics.csv incomplete";
            return false;
        }
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    std::ostringstream os;
    os << variants.size() << " variants via the CLI, " << seconds << "s";
    detail = os.str();
    return seconds <= 2700.0;
}

bool crit_serialization(std::string& detail) {
    const fs::path dir = work_dir() / "serialization";
    fs::create_directories(dir);

    // cloud round-trip
    Rng rng(31);
    geom::PointCloud cloud;
    cloud.points.resize(333);
    for (auto& p : cloud.points)
        p = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(-1, 1))};
    const fs::path cloud_a = dir / "a.pcj";
    const fs::path cloud_b = dir / "b.pcj";
    data::write_cloud(cloud_a.string(), cloud);
    data::write_cloud(cloud_b.string(), data::read_cloud(cloud_a.string()));
    if (slurp(cloud_a) != slurp(cloud_b)) {
        detail = "cloud file round-trip not bit-exact";
        return false;
    }

    // index round-trip
    data::DatasetIndex index;
    index.root = dir.string();
    index.class_names = {"sphere", "cube", "cylinder", "cone", "torus", "plane"};
    index.entries = {{"a.pcj", 0, true}, {"b.pcj", 5, false}};
    const fs::path idx_a = dir / "index_a.txt";
    const fs::path idx_b = dir / "index_b.txt";
    data::write_index(index, idx_a.string());
    data::write_index(data::read_index(idx_a.string()), idx_b.string());
    if (slurp(idx_a) != slurp(idx_b)) {
        detail = "index round-trip not bit-exact";
        return false;
    }

    // checkpoint round-trip
    nn::ModelDims dims;
    dims.c = 8;
    dims.k = 4;
    dims.embed_dim = 8;
    dims.encoder_depth = 1;
    dims.encoder_heads = 2;
    dims.predictor_dim = 8;
    dims.predictor_depth = 1;
    dims.predictor_heads = 2;
    dims.point_h1 = 8;
    dims.point_h2 = 8;
    dims.point_h3 = 8;
    dims.pos_hidden = 8;
    Rng mrng(32);
    auto model = nn::JepaModel::make(dims, mrng);
    train::TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 4;
    tc.warmup_epochs = 1;
    tc.seed = 33;
    train::AdamWT<float> opt(tc, model.trainable_params());
    auto state = train::make_checkpoint(model, opt, tc.seed, 0, 0);
    state.config_text = "model.c = 8\n";
    const fs::path ck_a = dir / "a.pjck";
    const fs::path ck_b = dir / "b.pjck";
    train::save_checkpoint(state, ck_a.string());
    train::save_checkpoint(train::load_checkpoint(ck_a.string()), ck_b.string());
    if (slurp(ck_a) != slurp(ck_b)) {
        detail = "checkpoint round-trip not bit-exact";
        return false;
    }

    // resume equivalence on a toy run
    Rng cloud_rng(34);
    std::vector<geom::PointCloud> clouds(8);
    for (auto& cl : clouds) {
        cl.points.resize(64);
        for (auto& p : cl.points)
            p = {static_cast<float>(cloud_rng.uniform(-1, 1)),
                 static_cast<float>(cloud_rng.uniform(-1, 1)),
                 static_cast<float>(cloud_rng.uniform(-1, 1))};
    }
    Rng r1(35);
    auto model_full = nn::JepaModel::make(dims, r1);
    const auto full = train::pretrain(clouds, model_full, tc, {});

    Rng r2(35);
    auto model_half = nn::JepaModel::make(dims, r2);
    train::PretrainOptions half_options;
    half_options.stop_after_epochs = 2;
    const auto half = train::pretrain(clouds, model_half, tc, half_options);

    Rng r3(36);
    auto model_resumed = nn::JepaModel::make(dims, r3);
    train::PretrainOptions options;
    options.resume = &half.state;
    const auto resumed = train::pretrain(clouds, model_resumed, tc, options);
    for (std::size_t i = 0; i < resumed.log.size(); ++i) {
        const auto& a = resumed.log[i];
        const auto& b = full.log[full.log.size() - resumed.log.size() + i];
        if (a.loss != b.loss || a.lr != b.lr || a.tau != b.tau || a.step != b.step) {
            detail = "resumed loss log diverged from the uninterrupted run";
            return false;
        }
    }
    detail = "cloud/index/checkpoint bit-exact; resume reproduces the loss log";
    return true;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "sequencer-oracle-equivalence", crit_sequencer_oracle},
        {2, "contiguity-beats-random", crit_contiguity},
        {3, "masking-suite", crit_masking},
        {4, "permutation-invariance", crit_permutation_invariance},
        {5, "gradient-checks", crit_gradient_check},
        {6, "ema-teacher-correctness", crit_ema_teacher},
        {7, "schedule-endpoints", crit_schedule_endpoints},
        {8, "desk-scale-training-dynamics", crit_training_dynamics},
        {9, "representation-quality", crit_representation_quality},
        {10, "ablation-harness-parity", crit_ablation_matrix},
        {11, "serialization-round-trips", crit_serialization},
    };

    int failures = 0;
    for (auto& criterion : criteria) {
        const auto start = Clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        std::printf("[%2d] %-32s %s  (%.1fs)%s%s\n", criterion.id, criterion.name.c_str(),
                    ok ? "PASS" : "FAIL", seconds, detail.empty() ? "" : "  -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("acceptance: %d/%d criteria passed\n", static_cast<int>(criteria.size()) - failures,
                static_cast<int>(criteria.size()));
    return failures;
}
