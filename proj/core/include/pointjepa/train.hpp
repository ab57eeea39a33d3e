#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pointjepa/geom.hpp"
#include "pointjepa/masking.hpp"
#include "pointjepa/nn.hpp"
#include "pointjepa/sequencer.hpp"
#include "pointjepa/tensor.hpp"

namespace pointjepa::train {

// Optimization settings. Defaults are the full-scale recipe (batch 512,
// warmup 30 of the schedule, lr 1e-5 -> 1e-3 -> 1e-6, Smooth-L1 beta 2,
// EMA decay 0.995 -> 1.0); desk-scale runs override epochs/batch/warmup.
struct TrainConfig {
    std::int64_t epochs = 60;
    std::int64_t batch_size = 512;
    double lr_start = 1e-5;
    double lr_peak = 1e-3;
    double lr_end = 1e-6;
    std::int64_t warmup_epochs = 30;
    double beta_smooth_l1 = 2.0;
    double ema_tau_start = 0.995;
    double ema_tau_end = 1.0;
    double weight_decay = 0.05;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    // optional input-space augmentation, freshly drawn per (epoch, cloud)
    geom::RotationMode aug_rotation = geom::RotationMode::None;
    double aug_jitter = 0.0;

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: epochs/batch_size must be >= 1");
        if (!(lr_start > 0.0) || !(lr_peak > 0.0) || !(lr_end > 0.0))
            throw std::invalid_argument("TrainConfig: learning rates must be positive");
        if (warmup_epochs < 0 || warmup_epochs > epochs)
            throw std::invalid_argument("TrainConfig: need 0 <= warmup_epochs <= epochs");
        if (!(beta_smooth_l1 > 0.0)) throw std::invalid_argument("TrainConfig: beta_smooth_l1 must be positive");
        if (ema_tau_start < 0.0 || ema_tau_start > 1.0 || ema_tau_end < 0.0 || ema_tau_end > 1.0)
            throw std::invalid_argument("TrainConfig: EMA tau values must be in [0, 1]");
        if (aug_jitter < 0.0) throw std::invalid_argument("TrainConfig: aug_jitter must be non-negative");
    }
};

// ---------------------------------------------------------------------------
// schedules
// ---------------------------------------------------------------------------

// Linear EMA decay interpolation over optimizer steps: exactly tau_start at
// step 0 and tau_end at the final step.
inline double tau_schedule(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
    if (total_steps <= 1 || step >= total_steps - 1) return cfg.ema_tau_end;
    if (step <= 0) return cfg.ema_tau_start;
    const double p = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return cfg.ema_tau_start + (cfg.ema_tau_end - cfg.ema_tau_start) * p;
}

// Linear warmup lr_start -> lr_peak over warmup_steps, then cosine decay
// lr_peak -> lr_end over the remaining steps.
inline double lr_schedule(std::int64_t step, std::int64_t total_steps, std::int64_t warmup_steps,
                          const TrainConfig& cfg) {
    // endpoints are returned exactly: step 0 -> lr_start, warmup end ->
    // lr_peak, final step -> lr_end
    if (step < warmup_steps) {
        if (step <= 0) return cfg.lr_start;
        const double p = static_cast<double>(step) / static_cast<double>(warmup_steps);
        return cfg.lr_start + (cfg.lr_peak - cfg.lr_start) * p;
    }
    if (step >= total_steps - 1) return cfg.lr_end;
    if (step == warmup_steps) return cfg.lr_peak;
    const std::int64_t decay_steps = total_steps - 1 - warmup_steps;
    const double p = static_cast<double>(step - warmup_steps) / static_cast<double>(decay_steps);
    return cfg.lr_end + 0.5 * (cfg.lr_peak - cfg.lr_end) * (1.0 + std::cos(3.14159265358979323846 * p));
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

// (1/M) * sum_i sum_{j in B_i} SmoothL1(pred_j, target_j), where each j-term
// is the element-mean over the embedding vector.
template <typename S>
nn::TensorT<S> jepa_loss(const std::vector<nn::TensorT<S>>& predictions,
                         const std::vector<nn::TensorT<S>>& targets, S beta) {
    if (predictions.empty() || predictions.size() != targets.size())
        throw std::invalid_argument("jepa_loss: need M >= 1 matched prediction/target blocks");
    nn::TensorT<S> total;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].shape() != targets[i].shape())
            throw std::invalid_argument("jepa_loss: block shape mismatch");
        const S inv_d = S(1) / static_cast<S>(predictions[i].cols());
        nn::TensorT<S> block = nn::scale(nn::smooth_l1_sum(predictions[i], targets[i], beta), inv_d);
        total = (i == 0) ? block : nn::add(total, block);
    }
    return nn::scale(total, S(1) / static_cast<S>(predictions.size()));
}

// ---------------------------------------------------------------------------
// parameter updates
// ---------------------------------------------------------------------------

// One decoupled-weight-decay adaptive update on a single parameter buffer.
// t is the 1-based step count used for bias correction.
template <typename S>
void adamw_step(std::vector<S>& param, const std::vector<S>& grad, std::vector<S>& m,
                std::vector<S>& v, std::int64_t t, double lr, double weight_decay,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size())
        throw std::invalid_argument("adamw_step: buffer size mismatch");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
        const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
        m[i] = static_cast<S>(mi);
        v[i] = static_cast<S>(vi);
        const double m_hat = mi / bc1;
        const double v_hat = vi / bc2;
        double p = static_cast<double>(param[i]);
        p -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * p);
        param[i] = static_cast<S>(p);
    }
}

// AdamW over an ordered parameter list; moment buffers live here and are
// what the checkpoint captures.
template <typename S>
class AdamWT {
public:
    AdamWT() = default;
    AdamWT(const TrainConfig& cfg, const std::vector<nn::NamedParam<S>>& params)
        : beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps),
          weight_decay_(cfg.weight_decay) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.emplace_back(p.tensor.data_vec().size(), S(0));
            v_.emplace_back(p.tensor.data_vec().size(), S(0));
        }
    }

    void step(std::vector<nn::NamedParam<S>>& params, double lr) {
        if (params.size() != m_.size()) throw std::invalid_argument("AdamW: parameter list changed size");
        ++t_;
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto node = params[i].tensor.node();
            if (node->grad.empty()) {
                // absent gradient counts as zero; decay still applies
                const std::vector<S> zeros(node->data.size(), S(0));
                adamw_step(node->data, zeros, m_[i], v_[i], t_, lr, weight_decay_, beta1_, beta2_, eps_);
            } else {
                adamw_step(node->data, node->grad, m_[i], v_[i], t_, lr, weight_decay_, beta1_, beta2_, eps_);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }
    std::vector<std::vector<S>>& moments_m() { return m_; }
    std::vector<std::vector<S>>& moments_v() { return v_; }
    const std::vector<std::vector<S>>& moments_m() const { return m_; }
    const std::vector<std::vector<S>>& moments_v() const { return v_; }

private:
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8, weight_decay_ = 0.0;
    std::int64_t t_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

// theta_bar <- tau * theta_bar + (1 - tau) * theta, elementwise over
// congruent parameter lists.
template <typename S>
void ema_update(std::vector<nn::NamedParam<S>>& target_params,
                const std::vector<nn::NamedParam<S>>& context_params, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("ema_update: tau must be in [0, 1]");
    if (target_params.size() != context_params.size())
        throw std::invalid_argument("ema_update: parameter trees are not congruent");
    for (std::size_t i = 0; i < target_params.size(); ++i) {
        auto& dst = target_params[i].tensor.data_vec();
        const auto& src = context_params[i].tensor.data_vec();
        if (dst.size() != src.size())
            throw std::invalid_argument("ema_update: parameter shape mismatch at " + target_params[i].name);
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] = static_cast<S>(tau * static_cast<double>(dst[j]) +
                                    (1.0 - tau) * static_cast<double>(src[j]));
    }
}

// ---------------------------------------------------------------------------
// tokenization
// ---------------------------------------------------------------------------

// One cloud reduced to sequencer-ordered patches: local coordinates for the
// point encoder and ordered centers for the positional encodings.
struct TokenizedCloud {
    std::vector<float> local_coords;  // c*k x 3, row-major, sequencer order
    std::vector<float> centers;       // c x 3, sequencer order
};

TokenizedCloud tokenize_cloud(const geom::PointCloud& cloud, std::int64_t c, std::int64_t k,
                              seq::Kind sequencer, unsigned seq_bits = 10);

// ---------------------------------------------------------------------------
// checkpointing
// ---------------------------------------------------------------------------

struct CheckpointState {
    std::uint32_t version = 1;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    std::int64_t step = 0;   // optimizer steps completed
    std::int64_t epoch = 0;  // epochs completed
    std::string config_text;
    std::vector<nn::NamedParam<float>> params;  // trainable + target encoder
    std::vector<std::pair<std::string, std::vector<float>>> opt_m;
    std::vector<std::pair<std::string, std::vector<float>>> opt_v;
};

void save_checkpoint(const CheckpointState& state, const std::string& path);
CheckpointState load_checkpoint(const std::string& path);

// Copies checkpointed parameters (and optionally optimizer moments) into a
// live model; throws MismatchError when names or shapes disagree.
void apply_checkpoint(const CheckpointState& state, nn::JepaModel& model,
                      AdamWT<float>* optimizer = nullptr);

// Snapshot of the full training state.
CheckpointState make_checkpoint(const nn::JepaModel& model, const AdamWT<float>& optimizer,
                                std::uint64_t master_seed, std::int64_t step, std::int64_t epoch);

// ---------------------------------------------------------------------------
// pretraining loop
// ---------------------------------------------------------------------------

struct LossRow {
    std::int64_t epoch = 0;  // 1-based
    std::int64_t step = 0;   // global optimizer step, 0-based
    double loss = 0.0;
    double lr = 0.0;
    double tau = 0.0;
};

struct PretrainResult {
    CheckpointState state;
    std::vector<LossRow> log;
    std::vector<double> epoch_mean_loss;
};

struct PretrainOptions {
    seq::Kind sequencer = seq::Kind::GreedyMinCoord;
    unsigned seq_bits = 10;
    mask::MaskConfig mask;
    std::function<void(const LossRow&)> on_step;   // streaming hook, may be empty
    const CheckpointState* resume = nullptr;       // continue from a snapshot
    std::int64_t stop_after_epochs = 0;  // interrupt after this many epochs (0 = run to the end);
                                         // schedules still span cfg.epochs
};

// Full JEPA pretraining on in-memory clouds. The model must be freshly
// initialized (or match the resume snapshot); deterministic given cfg.seed.
PretrainResult pretrain(const std::vector<geom::PointCloud>& clouds, nn::JepaModel& model,
                        const TrainConfig& cfg, const PretrainOptions& options = {});

}  // namespace pointjepa::train
