#pragma once

#include <cstdint>
#include <vector>

#include "pointjepa/geom.hpp"
#include "pointjepa/nn.hpp"
#include "pointjepa/sequencer.hpp"

namespace pointjepa::eval {

// Concatenated token-wise max pool and mean pool over the frozen context
// encoder's outputs; length 2*D.
using FeatureVector = std::vector<float>;

// Tokenize (FPS, k-NN, sequencer), encode all tokens with the context
// encoder, pool. Never mutates parameters and builds no autograd graph.
FeatureVector extract_features(const nn::JepaModel& model, const geom::PointCloud& cloud,
                               seq::Kind sequencer = seq::Kind::GreedyMinCoord,
                               unsigned seq_bits = 10);

// L2-regularized multinomial logistic regression trained to convergence
// (gradient inf-norm <= tol) on frozen features; returns overall test
// accuracy in [0, 1]. Deterministic: the solver starts from zero weights.
double linear_probe(const std::vector<FeatureVector>& train_features,
                    const std::vector<int>& train_labels,
                    const std::vector<FeatureVector>& test_features,
                    const std::vector<int>& test_labels, double lambda = 1e-3,
                    std::int64_t max_iter = 100, double tol = 1e-6);

struct FewShotResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> accuracies;  // one per trial
};

// m-way n-shot episodes with a fixed-size disjoint query set per class;
// each episode fits a linear probe on the support features alone.
FewShotResult few_shot_eval(const std::vector<std::vector<FeatureVector>>& features_by_class,
                            std::size_t way, std::size_t shot, std::size_t query,
                            std::size_t trials, std::uint64_t seed, double lambda = 1e-3);

// Mean across feature dimensions of the across-sample standard deviation;
// 0 means every feature is identical (fully collapsed representation).
double collapse_metric(const std::vector<FeatureVector>& features);

}  // namespace pointjepa::eval
