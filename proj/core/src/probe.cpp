#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pointjepa/eval.hpp"

// Multinomial logistic regression with L2 on the weights (bias unpenalized),
// solved by damped Newton iterations on the full Hessian (block-diagonal
// approximation above a size cutoff). Deterministic: starts from zero.

namespace pointjepa::eval {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct ProbeProblem {
    Mat x;                // N x (F+1), last column is the bias feature 1
    std::vector<int> y;   // N
    std::int64_t classes; // C
    double lambda;

    std::int64_t n() const { return x.rows(); }
    std::int64_t dim() const { return x.cols(); }  // F+1

    // Row-major parameter layout: theta[(c * dim) + j].
    double loss_grad(const Vec& theta, Vec* grad, Mat* probs_out) const {
        const std::int64_t N = n(), D = dim(), C = classes;
        Mat W(C, D);
        for (std::int64_t c = 0; c < C; ++c) W.row(c) = theta.segment(c * D, D).transpose();
        Mat logits = x * W.transpose();  // N x C
        Mat probs(N, C);
        double nll = 0.0;
        for (std::int64_t i = 0; i < N; ++i) {
            const double mx = logits.row(i).maxCoeff();
            double denom = 0.0;
            for (std::int64_t c = 0; c < C; ++c) {
                probs(i, c) = std::exp(logits(i, c) - mx);
                denom += probs(i, c);
            }
            probs.row(i) /= denom;
            nll -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
        }
        nll /= static_cast<double>(N);
        double reg = 0.0;
        for (std::int64_t c = 0; c < C; ++c)
            reg += theta.segment(c * D, D - 1).squaredNorm();  // exclude bias
        const double loss = nll + 0.5 * lambda * reg;

        if (grad != nullptr) {
            grad->setZero(C * D);
            Mat resid = probs;  // p - onehot(y)
            for (std::int64_t i = 0; i < N; ++i) resid(i, y[static_cast<std::size_t>(i)]) -= 1.0;
            Mat g = resid.transpose() * x / static_cast<double>(N);  // C x D
            for (std::int64_t c = 0; c < C; ++c) {
                grad->segment(c * D, D) = g.row(c).transpose();
                grad->segment(c * D, D - 1) += lambda * theta.segment(c * D, D - 1);
            }
        }
        if (probs_out != nullptr) *probs_out = std::move(probs);
        return loss;
    }
};

void add_regularizer_diag(const ProbeProblem& prob, Mat& h) {
    const std::int64_t D = prob.dim(), C = prob.classes;
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t j = 0; j < D - 1; ++j) h(c * D + j, c * D + j) += prob.lambda;
        h(c * D + D - 1, c * D + D - 1) += 1e-9;  // keep the bias block invertible
    }
}

Vec newton_direction_full(const ProbeProblem& prob, const Mat& probs, const Vec& grad) {
    const std::int64_t N = prob.n(), D = prob.dim(), C = prob.classes;
    Mat h = Mat::Zero(C * D, C * D);
    Mat outer(D, D);
    for (std::int64_t i = 0; i < N; ++i) {
        outer.noalias() = prob.x.row(i).transpose() * prob.x.row(i);
        for (std::int64_t a = 0; a < C; ++a) {
            const double pa = probs(i, a);
            for (std::int64_t b = 0; b <= a; ++b) {
                const double w = (a == b) ? pa * (1.0 - pa) : -pa * probs(i, b);
                h.block(a * D, b * D, D, D).noalias() += (w / static_cast<double>(N)) * outer;
            }
        }
    }
    for (std::int64_t a = 0; a < C; ++a)
        for (std::int64_t b = a + 1; b < C; ++b)
            h.block(a * D, b * D, D, D) = h.block(b * D, a * D, D, D).transpose();
    add_regularizer_diag(prob, h);
    return h.ldlt().solve(grad);
}

// Per-class diagonal blocks only; descent-safe and much smaller for wide
// feature vectors.
Vec newton_direction_blockdiag(const ProbeProblem& prob, const Mat& probs, const Vec& grad) {
    const std::int64_t N = prob.n(), D = prob.dim(), C = prob.classes;
    Vec dir(C * D);
    Mat h(D, D);
    for (std::int64_t c = 0; c < C; ++c) {
        h.setZero();
        for (std::int64_t i = 0; i < N; ++i) {
            const double w = probs(i, c) * (1.0 - probs(i, c)) / static_cast<double>(N);
            h.noalias() += w * (prob.x.row(i).transpose() * prob.x.row(i));
        }
        for (std::int64_t j = 0; j < D - 1; ++j) h(j, j) += prob.lambda;
        h(D - 1, D - 1) += 1e-9;
        dir.segment(c * D, D) = h.ldlt().solve(grad.segment(c * D, D));
    }
    return dir;
}

}  // namespace

double linear_probe(const std::vector<FeatureVector>& train_features,
                    const std::vector<int>& train_labels,
                    const std::vector<FeatureVector>& test_features,
                    const std::vector<int>& test_labels, double lambda, std::int64_t max_iter,
                    double tol) {
    if (train_features.empty() || train_features.size() != train_labels.size())
        throw std::invalid_argument("linear_probe: bad training set");
    if (test_features.empty() || test_features.size() != test_labels.size())
        throw std::invalid_argument("linear_probe: bad test set");
    if (lambda < 0.0) throw std::invalid_argument("linear_probe: lambda must be non-negative");

    int max_label = 0;
    for (const int l : train_labels) max_label = std::max(max_label, l);
    for (const int l : test_labels) max_label = std::max(max_label, l);
    for (const int l : train_labels)
        if (l < 0) throw std::invalid_argument("linear_probe: negative label");
    const std::int64_t classes = max_label + 1;
    {
        std::vector<char> seen(static_cast<std::size_t>(classes), 0);
        for (const int l : train_labels) seen[static_cast<std::size_t>(l)] = 1;
        std::size_t distinct = 0;
        for (const char s : seen) distinct += s;
        if (distinct < 2)
            throw std::invalid_argument("linear_probe: training labels are degenerate (one class)");
    }

    const std::size_t f = train_features.front().size();
    ProbeProblem prob;
    prob.classes = classes;
    prob.lambda = lambda;
    prob.y = train_labels;
    prob.x.resize(static_cast<std::int64_t>(train_features.size()), static_cast<std::int64_t>(f + 1));
    for (std::size_t i = 0; i < train_features.size(); ++i) {
        if (train_features[i].size() != f)
            throw std::invalid_argument("linear_probe: ragged feature vectors");
        for (std::size_t j = 0; j < f; ++j)
            prob.x(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) =
                static_cast<double>(train_features[i][j]);
        prob.x(static_cast<std::int64_t>(i), static_cast<std::int64_t>(f)) = 1.0;
    }

    const std::int64_t dim = prob.dim() * prob.classes;
    Vec theta = Vec::Zero(dim);
    Vec grad(dim);
    Mat probs;
    double loss = prob.loss_grad(theta, &grad, &probs);
    for (std::int64_t iter = 0; iter < max_iter; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() <= tol) break;
        const Vec dir = (dim <= 2048) ? newton_direction_full(prob, probs, grad)
                                      : newton_direction_blockdiag(prob, probs, grad);
        double step = 1.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            const Vec cand = theta - step * dir;
            const double cand_loss = prob.loss_grad(cand, nullptr, nullptr);
            if (cand_loss <= loss) {
                theta = cand;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no progress possible at double precision
        loss = prob.loss_grad(theta, &grad, &probs);
    }

    // overall accuracy on the test set; argmax ties resolve to the lowest class
    const std::int64_t D = prob.dim();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_features.size(); ++i) {
        if (test_features[i].size() != f)
            throw std::invalid_argument("linear_probe: ragged test feature vectors");
        int best = 0;
        double best_logit = -std::numeric_limits<double>::infinity();
        for (std::int64_t c = 0; c < classes; ++c) {
            double z = theta[c * D + D - 1];
            for (std::size_t j = 0; j < f; ++j)
                z += theta[c * D + static_cast<std::int64_t>(j)] *
                     static_cast<double>(test_features[i][j]);
            if (z > best_logit) {
                best_logit = z;
                best = static_cast<int>(c);
            }
        }
        if (best == test_labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_features.size());
}

}  // namespace pointjepa::eval
