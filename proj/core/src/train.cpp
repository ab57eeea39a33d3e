#include "pointjepa/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pointjepa/errors.hpp"

namespace pointjepa::train {

TokenizedCloud tokenize_cloud(const geom::PointCloud& cloud, std::int64_t c, std::int64_t k,
                              seq::Kind sequencer, unsigned seq_bits) {
    // geometric FPS start, so tokenization is invariant to the data feeding
    // order of the input points
    const auto center_indices = geom::farthest_point_sample(cloud, static_cast<std::size_t>(c),
                                                            geom::StartPolicy::min_coord_sum());
    const geom::PatchSet patches = geom::knn_group(cloud, center_indices, static_cast<std::size_t>(k));
    const seq::Ordering order = seq::order_centers(patches.centers, sequencer, seq_bits);

    TokenizedCloud out;
    out.local_coords.reserve(static_cast<std::size_t>(c * k * 3));
    out.centers.reserve(static_cast<std::size_t>(c * 3));
    for (const std::uint32_t patch : order.perm) {
        const auto& ctr = patches.centers[patch];
        out.centers.insert(out.centers.end(), {ctr[0], ctr[1], ctr[2]});
        for (const auto& local : patches.local_coords[patch])
            out.local_coords.insert(out.local_coords.end(), {local[0], local[1], local[2]});
    }
    return out;
}

namespace {

nn::Tensor constant_matrix(std::int64_t rows, std::int64_t cols, const float* values) {
    return nn::Tensor::from_data({rows, cols}, std::vector<float>(values, values + rows * cols));
}

std::vector<std::int64_t> to_rows(const std::vector<std::uint32_t>& idx) {
    std::vector<std::int64_t> rows(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) rows[i] = static_cast<std::int64_t>(idx[i]);
    return rows;
}

nn::Tensor gather_centers(const std::vector<float>& centers, const std::vector<std::uint32_t>& idx) {
    std::vector<float> data;
    data.reserve(idx.size() * 3);
    for (const std::uint32_t i : idx)
        data.insert(data.end(), centers.begin() + i * 3, centers.begin() + i * 3 + 3);
    return nn::Tensor::from_data({static_cast<std::int64_t>(idx.size()), 3}, std::move(data));
}

}  // namespace

PretrainResult pretrain(const std::vector<geom::PointCloud>& clouds, nn::JepaModel& model,
                        const TrainConfig& cfg, const PretrainOptions& options) {
    cfg.validate();
    options.mask.validate();
    if (clouds.empty()) throw std::invalid_argument("pretrain: empty dataset");

    const std::int64_t n_clouds = static_cast<std::int64_t>(clouds.size());
    const std::int64_t batch = std::min<std::int64_t>(cfg.batch_size, n_clouds);
    const std::int64_t steps_per_epoch = n_clouds / batch;
    if (steps_per_epoch < 1) throw std::invalid_argument("pretrain: dataset smaller than one batch");
    const std::int64_t total_steps = cfg.epochs * steps_per_epoch;
    const std::int64_t warmup_steps = cfg.warmup_epochs * steps_per_epoch;
    const std::int64_t c = model.dims.c;
    const std::int64_t k = model.dims.k;

    // tokenization is a pure function of (cloud, dims, sequencer); do it once
    std::vector<TokenizedCloud> tokens(clouds.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(clouds.size()); ++i)
        tokens[static_cast<std::size_t>(i)] =
            tokenize_cloud(clouds[static_cast<std::size_t>(i)], c, k, options.sequencer, options.seq_bits);

    auto trainable = model.trainable_params();
    std::vector<nn::NamedParam<float>> context_list;
    model.context_encoder.collect("enc", context_list);
    std::vector<nn::NamedParam<float>> teacher_list;
    model.target_encoder.collect("enc", teacher_list);

    AdamWT<float> optimizer(cfg, trainable);
    std::int64_t global_step = 0;
    std::int64_t start_epoch = 0;
    if (options.resume != nullptr) {
        apply_checkpoint(*options.resume, model, &optimizer);
        global_step = options.resume->step;
        start_epoch = options.resume->epoch;
        if (start_epoch * steps_per_epoch != global_step)
            throw MismatchError("pretrain: resume step/epoch disagree with this dataset");
    }

    const std::int64_t stop_epoch = options.stop_after_epochs > 0
                                        ? std::min(options.stop_after_epochs, cfg.epochs)
                                        : cfg.epochs;
    PretrainResult result;
    result.log.reserve(static_cast<std::size_t>((stop_epoch - start_epoch) * steps_per_epoch));

    std::vector<std::int64_t> order(clouds.size());
    for (std::int64_t epoch = start_epoch; epoch < stop_epoch; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = derive_stream(cfg.seed, stream_tag::shuffle, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::int64_t b = 0; b < steps_per_epoch; ++b) {
            // stack the whole batch's local coordinates for one point-encoder pass
            std::vector<float> stacked;
            stacked.reserve(static_cast<std::size_t>(batch * c * k * 3));
            for (std::int64_t e = 0; e < batch; ++e) {
                const auto& t = tokens[static_cast<std::size_t>(order[b * batch + e])];
                stacked.insert(stacked.end(), t.local_coords.begin(), t.local_coords.end());
            }
            nn::Tensor coords = nn::Tensor::from_data({batch * c * k, 3}, std::move(stacked));
            nn::Tensor embeddings;
            try {
                embeddings = nn::encode_patches(coords, k, model.point_encoder);

                nn::Tensor batch_loss;
                for (std::int64_t e = 0; e < batch; ++e) {
                    const auto& tok = tokens[static_cast<std::size_t>(order[b * batch + e])];
                    std::vector<std::int64_t> rows(static_cast<std::size_t>(c));
                    std::iota(rows.begin(), rows.end(), e * c);
                    nn::Tensor cloud_tokens = nn::gather_rows(embeddings, std::move(rows));
                    nn::Tensor positions = constant_matrix(c, 3, tok.centers.data());

                    // teacher branch: encode everything, fully detached
                    nn::Tensor y_full;
                    {
                        nn::NoGradGuard no_grad;
                        y_full = nn::encoder_forward(cloud_tokens.detach(), positions,
                                                     model.target_encoder, model.pos_encoder_d);
                    }

                    Rng mask_rng = derive_stream(cfg.seed, stream_tag::mask,
                                                 static_cast<std::uint64_t>(global_step),
                                                 static_cast<std::uint64_t>(e));
                    const mask::MaskSample sample =
                        mask::sample_mask(static_cast<std::size_t>(c), options.mask, mask_rng);

                    std::vector<nn::Tensor> targets =
                        nn::select_target_embeddings(y_full, sample.target_blocks);

                    nn::Tensor ctx_tokens = nn::gather_rows(cloud_tokens, to_rows(sample.context));
                    nn::Tensor ctx_positions = gather_centers(tok.centers, sample.context);
                    nn::Tensor ctx_enc = nn::encoder_forward(ctx_tokens, ctx_positions,
                                                             model.context_encoder, model.pos_encoder_d);

                    std::vector<nn::Tensor> target_positions;
                    target_positions.reserve(sample.target_blocks.size());
                    for (const auto& block : sample.target_blocks)
                        target_positions.push_back(gather_centers(tok.centers, block));

                    std::vector<nn::Tensor> preds =
                        nn::predict_targets(ctx_enc, ctx_positions, target_positions, model.predictor,
                                            model.pos_encoder_p);

                    nn::Tensor loss_e = jepa_loss(preds, targets, static_cast<float>(cfg.beta_smooth_l1));
                    batch_loss = (e == 0) ? loss_e : nn::add(batch_loss, loss_e);
                }
                batch_loss = nn::scale(batch_loss, 1.0f / static_cast<float>(batch));
                const double loss_value = static_cast<double>(batch_loss.item());
                if (!std::isfinite(loss_value))
                    throw NumericError("pretrain: non-finite loss", -1, global_step);

                model.zero_grad();
                batch_loss.backward();

                const double lr = lr_schedule(global_step, total_steps, warmup_steps, cfg);
                optimizer.step(trainable, lr);
                const double tau = tau_schedule(global_step, total_steps, cfg);
                ema_update(teacher_list, context_list, tau);

                LossRow row{epoch + 1, global_step, loss_value, lr, tau};
                result.log.push_back(row);
                if (options.on_step) options.on_step(row);
                epoch_loss += loss_value;
            } catch (const NumericError& err) {
                throw NumericError(std::string(err.what()) + " (at optimizer step " +
                                       std::to_string(global_step) + ")",
                                   err.block_index, global_step);
            }
            ++global_step;
        }
        result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
    }

    result.state = make_checkpoint(model, optimizer, cfg.seed, global_step, stop_epoch);
    return result;
}

}  // namespace pointjepa::train
