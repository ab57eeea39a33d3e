#include "pointjepa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pointjepa/rng.hpp"
#include "pointjepa/train.hpp"

namespace pointjepa::eval {

FeatureVector extract_features(const nn::JepaModel& model, const geom::PointCloud& cloud,
                               seq::Kind sequencer, unsigned seq_bits) {
    nn::NoGradGuard no_grad;
    const std::int64_t c = model.dims.c;
    const std::int64_t k = model.dims.k;
    const train::TokenizedCloud tok = train::tokenize_cloud(cloud, c, k, sequencer, seq_bits);

    nn::Tensor coords = nn::Tensor::from_data({c * k, 3}, tok.local_coords);
    nn::Tensor tokens = nn::encode_patches(coords, k, model.point_encoder);
    nn::Tensor positions = nn::Tensor::from_data({c, 3}, tok.centers);
    nn::Tensor encoded =
        nn::encoder_forward(tokens, positions, model.context_encoder, model.pos_encoder_d);

    const std::int64_t d = encoded.cols();
    FeatureVector feature(static_cast<std::size_t>(2 * d));
    for (std::int64_t col = 0; col < d; ++col) {
        float mx = encoded.data()[col];
        double mean = 0.0;
        for (std::int64_t row = 0; row < c; ++row) {
            const float v = encoded.data()[row * d + col];
            mx = std::max(mx, v);
            mean += static_cast<double>(v);
        }
        feature[static_cast<std::size_t>(col)] = mx;
        feature[static_cast<std::size_t>(d + col)] = static_cast<float>(mean / static_cast<double>(c));
    }
    return feature;
}

FewShotResult few_shot_eval(const std::vector<std::vector<FeatureVector>>& features_by_class,
                            std::size_t way, std::size_t shot, std::size_t query,
                            std::size_t trials, std::uint64_t seed, double lambda) {
    const std::size_t n_classes = features_by_class.size();
    if (way < 2 || way > n_classes)
        throw std::invalid_argument("few_shot_eval: need 2 <= way <= number of classes");
    if (trials < 1) throw std::invalid_argument("few_shot_eval: need at least one trial");
    for (const auto& cls : features_by_class)
        if (cls.size() < shot + query)
            throw std::invalid_argument("few_shot_eval: a class has fewer than shot+query instances");

    FewShotResult result;
    result.accuracies.reserve(trials);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng = derive_stream(seed, stream_tag::episode, trial);

        std::vector<std::size_t> class_ids(n_classes);
        std::iota(class_ids.begin(), class_ids.end(), 0u);
        rng.shuffle(class_ids);
        class_ids.resize(way);

        std::vector<FeatureVector> support_x, query_x;
        std::vector<int> support_y, query_y;
        for (std::size_t e = 0; e < way; ++e) {
            const auto& pool = features_by_class[class_ids[e]];
            std::vector<std::size_t> order(pool.size());
            std::iota(order.begin(), order.end(), 0u);
            rng.shuffle(order);
            // support and query draw from disjoint prefix ranges
            for (std::size_t i = 0; i < shot; ++i) {
                support_x.push_back(pool[order[i]]);
                support_y.push_back(static_cast<int>(e));
            }
            for (std::size_t i = shot; i < shot + query; ++i) {
                query_x.push_back(pool[order[i]]);
                query_y.push_back(static_cast<int>(e));
            }
        }
        result.accuracies.push_back(linear_probe(support_x, support_y, query_x, query_y, lambda));
    }

    double mean = 0.0;
    for (const double a : result.accuracies) mean += a;
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (const double a : result.accuracies) var += (a - mean) * (a - mean);
    result.mean = mean;
    result.stddev = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
    return result;
}

double collapse_metric(const std::vector<FeatureVector>& features) {
    if (features.empty()) throw std::invalid_argument("collapse_metric: no features");
    const std::size_t dim = features.front().size();
    for (const auto& f : features)
        if (f.size() != dim) throw std::invalid_argument("collapse_metric: ragged features");
    const double n = static_cast<double>(features.size());
    double total = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (const auto& f : features) mean += static_cast<double>(f[d]);
        mean /= n;
        double var = 0.0;
        for (const auto& f : features) {
            const double diff = static_cast<double>(f[d]) - mean;
            var += diff * diff;
        }
        total += std::sqrt(var / n);
    }
    return total / static_cast<double>(dim);
}

}  // namespace pointjepa::eval
