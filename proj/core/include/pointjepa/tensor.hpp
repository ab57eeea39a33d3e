#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace pointjepa::nn {

// Global (per-thread) autograd switch. Ops executed while disabled produce
// plain values with no graph, which is how the target-encoder branch and all
// evaluation passes stay gradient-free.
inline bool& autograd_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    NoGradGuard() : prev_(autograd_enabled()) { autograd_enabled() = false; }
    ~NoGradGuard() { autograd_enabled() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Dense n-dimensional array of scalars with reverse-mode autodiff. The
// production scalar is float; tests instantiate double for high-precision
// finite-difference oracles. Value-semantic handle over a shared node.
template <typename S>
class TensorT {
public:
    using Scalar = S;

    struct Node {
        std::vector<S> data;
        std::vector<S> grad;  // empty until backward touches this node
        std::vector<std::int64_t> shape;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backprop;

        std::int64_t numel() const {
            std::int64_t n = 1;
            for (const auto d : shape) n *= d;
            return n;
        }
        void ensure_grad() {
            if (grad.empty()) grad.assign(static_cast<std::size_t>(numel()), S(0));
        }
    };

    TensorT() = default;

    static TensorT zeros(std::vector<std::int64_t> shape) {
        TensorT t = uninit(std::move(shape));
        std::fill(t.node_->data.begin(), t.node_->data.end(), S(0));
        return t;
    }

    static TensorT from_data(std::vector<std::int64_t> shape, std::vector<S> data) {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        if (static_cast<std::int64_t>(data.size()) != t.node_->numel())
            throw std::invalid_argument("Tensor::from_data: data length does not match shape");
        t.node_->data = std::move(data);
        return t;
    }

    static TensorT uninit(std::vector<std::int64_t> shape) {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->data.resize(static_cast<std::size_t>(t.node_->numel()));
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::int64_t>& shape() const { return node_->shape; }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t rows() const { return node_->shape.at(0); }
    std::int64_t cols() const { return node_->shape.at(1); }
    bool is_matrix() const { return node_->shape.size() == 2; }

    S* data() { return node_->data.data(); }
    const S* data() const { return node_->data.data(); }
    std::vector<S>& data_vec() { return node_->data; }
    const std::vector<S>& data_vec() const { return node_->data; }

    S item() const {
        if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor is not a scalar");
        return node_->data[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    TensorT& set_requires_grad(bool v) {
        node_->requires_grad = v;
        return *this;
    }

    const std::vector<S>& grad() const { return node_->grad; }
    std::vector<S>& grad_vec() { return node_->grad; }
    void zero_grad() { node_->grad.clear(); }

    // Copy of the values with no graph attached.
    TensorT detach() const {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = node_->shape;
        t.node_->data = node_->data;
        return t;
    }

    bool all_finite() const {
        for (const S v : node_->data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Reverse-mode sweep from a scalar output.
    void backward() {
        if (numel() != 1) throw std::invalid_argument("Tensor::backward: output must be scalar");
        if (!node_->requires_grad) return;

        // iterative post-order topological sort over the grad-requiring graph
        std::vector<Node*> topo;
        std::unordered_set<Node*> visited;
        std::vector<std::pair<Node*, std::size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        visited.insert(node_.get());
        while (!stack.empty()) {
            auto& [cur, next_child] = stack.back();
            if (next_child < cur->parents.size()) {
                Node* child = cur->parents[next_child++].get();
                if (child->requires_grad && !visited.count(child)) {
                    visited.insert(child);
                    stack.emplace_back(child, 0);
                }
            } else {
                topo.push_back(cur);
                stack.pop_back();
            }
        }

        node_->grad.assign(1, S(1));
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            Node* n = *it;
            if (n->backprop && !n->grad.empty()) n->backprop(*n);
        }
    }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;

namespace detail {

template <typename S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using EMap = Eigen::Map<EMat<S>>;
template <typename S>
using ECMap = Eigen::Map<const EMat<S>>;

template <typename S>
EMap<S> map(TensorT<S>& t) {
    return EMap<S>(t.data(), t.rows(), t.cols());
}
template <typename S>
ECMap<S> cmap(const TensorT<S>& t) {
    return ECMap<S>(t.data(), t.rows(), t.cols());
}
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Attaches graph metadata to `out` when autograd is on and any input needs
// gradients; otherwise the op result stays a plain constant.
template <typename S>
void attach(TensorT<S>& out, std::initializer_list<TensorT<S>> parents,
            std::function<void(typename TensorT<S>::Node&)> backprop) {
    if (!autograd_enabled()) return;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (!needs) return;
    auto n = out.node();
    n->requires_grad = true;
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
}

template <typename S>
void attach_many(TensorT<S>& out, const std::vector<TensorT<S>>& parents,
                 std::function<void(typename TensorT<S>::Node&)> backprop) {
    if (!autograd_enabled()) return;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (!needs) return;
    auto n = out.node();
    n->requires_grad = true;
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise and linear-algebra ops
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.is_matrix() && b.is_matrix(), "matmul: operands must be 2-D");
    detail::require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
    const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
    TensorT<S> out = TensorT<S>::uninit({m, n});
    detail::map(out).noalias() = detail::cmap(a) * detail::cmap(b);
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn, m, k, n](typename TensorT<S>::Node& self) {
        detail::EMap<S> dC(self.grad.data(), m, n);
        if (an->requires_grad) {
            an->ensure_grad();
            detail::EMap<S> dA(an->grad.data(), m, k);
            detail::ECMap<S> B(bn->data.data(), k, n);
            dA.noalias() += dC * B.transpose();
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            detail::EMap<S> dB(bn->grad.data(), k, n);
            detail::ECMap<S> A(an->data.data(), m, k);
            dB.noalias() += A.transpose() * dC;
        }
    });
    return out;
}

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.shape() == b.shape(), "add: shape mismatch");
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    const std::size_t n = a.data_vec().size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn](typename TensorT<S>::Node& self) {
        for (auto* p : {an.get(), bn.get()}) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
    return out;
}

template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.shape() == b.shape(), "sub: shape mismatch");
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    const std::size_t n = a.data_vec().size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn](typename TensorT<S>::Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
    return out;
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.shape() == b.shape(), "mul: shape mismatch");
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    const std::size_t n = a.data_vec().size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn](typename TensorT<S>::Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                bn->grad[i] += self.grad[i] * an->data[i];
        }
    });
    return out;
}

template <typename S>
TensorT<S> scale(const TensorT<S>& a, S factor) {
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    const std::size_t n = a.data_vec().size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * factor;
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, factor](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * factor;
    });
    return out;
}

// a[m,n] + row vector b (numel n), broadcast over rows.
template <typename S>
TensorT<S> add_rowvec(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.is_matrix(), "add_rowvec: a must be 2-D");
    detail::require(b.numel() == a.cols(), "add_rowvec: b length must equal a's column count");
    const std::int64_t m = a.rows(), n = a.cols();
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c)
            out.data()[r * n + c] = a.data()[r * n + c] + b.data()[c];
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn, m, n](typename TensorT<S>::Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t c = 0; c < n; ++c) bn->grad[c] += self.grad[r * n + c];
        }
    });
    return out;
}

template <typename S>
TensorT<S> gelu(const TensorT<S>& a) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    const std::size_t n = a.data_vec().size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(a.data()[i]);
        out.data()[i] = static_cast<S>(0.5 * x * (1.0 + std::erf(x * inv_sqrt2)));
    }
    auto an = a.node();
    detail::attach<S>(out, {a}, [an](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double x = static_cast<double>(an->data[i]);
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            an->grad[i] += self.grad[i] * static_cast<S>(cdf + x * pdf);
        }
    });
    return out;
}

// Row-wise layer normalization with affine parameters gamma/beta (numel n).
template <typename S>
TensorT<S> layer_norm(const TensorT<S>& a, const TensorT<S>& gamma, const TensorT<S>& beta,
                      S eps = S(1e-5)) {
    detail::require(a.is_matrix(), "layer_norm: input must be 2-D");
    const std::int64_t m = a.rows(), n = a.cols();
    detail::require(gamma.numel() == n && beta.numel() == n, "layer_norm: gamma/beta length mismatch");
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    // normalized values are re-derived in backward from data and inv_std
    std::vector<S> inv_std(static_cast<std::size_t>(m));
    std::vector<S> mean(static_cast<std::size_t>(m));
    for (std::int64_t r = 0; r < m; ++r) {
        const S* row = a.data() + r * n;
        S mu = 0;
        for (std::int64_t c = 0; c < n; ++c) mu += row[c];
        mu /= static_cast<S>(n);
        S var = 0;
        for (std::int64_t c = 0; c < n; ++c) {
            const S d = row[c] - mu;
            var += d * d;
        }
        var /= static_cast<S>(n);
        const S is = S(1) / std::sqrt(var + eps);
        mean[static_cast<std::size_t>(r)] = mu;
        inv_std[static_cast<std::size_t>(r)] = is;
        for (std::int64_t c = 0; c < n; ++c)
            out.data()[r * n + c] = (row[c] - mu) * is * gamma.data()[c] + beta.data()[c];
    }
    auto an = a.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    detail::attach<S>(out, {a, gamma, beta},
                      [an, gn, bn, m, n, mean = std::move(mean), inv_std = std::move(inv_std)](
                          typename TensorT<S>::Node& self) {
        for (std::int64_t r = 0; r < m; ++r) {
            const S* row = an->data.data() + r * n;
            const S* gout = self.grad.data() + r * n;
            const S mu = mean[static_cast<std::size_t>(r)];
            const S is = inv_std[static_cast<std::size_t>(r)];
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::int64_t c = 0; c < n; ++c)
                    gn->grad[c] += gout[c] * (row[c] - mu) * is;
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t c = 0; c < n; ++c) bn->grad[c] += gout[c];
            }
            if (an->requires_grad) {
                an->ensure_grad();
                // dx = (g*dy - mean(g*dy) - xhat * mean(g*dy*xhat)) * inv_std
                S sum_gd = 0, sum_gdx = 0;
                for (std::int64_t c = 0; c < n; ++c) {
                    const S gd = gout[c] * gn->data[c];
                    const S xh = (row[c] - mu) * is;
                    sum_gd += gd;
                    sum_gdx += gd * xh;
                }
                const S inv_n = S(1) / static_cast<S>(n);
                for (std::int64_t c = 0; c < n; ++c) {
                    const S gd = gout[c] * gn->data[c];
                    const S xh = (row[c] - mu) * is;
                    an->grad[r * n + c] += (gd - sum_gd * inv_n - xh * sum_gdx * inv_n) * is;
                }
            }
        }
    });
    return out;
}

template <typename S>
TensorT<S> softmax_rows(const TensorT<S>& a) {
    detail::require(a.is_matrix(), "softmax_rows: input must be 2-D");
    const std::int64_t m = a.rows(), n = a.cols();
    TensorT<S> out = TensorT<S>::uninit(a.shape());
    for (std::int64_t r = 0; r < m; ++r) {
        const S* row = a.data() + r * n;
        S* orow = out.data() + r * n;
        S mx = row[0];
        for (std::int64_t c = 1; c < n; ++c) mx = std::max(mx, row[c]);
        S sum = 0;
        for (std::int64_t c = 0; c < n; ++c) {
            orow[c] = std::exp(row[c] - mx);
            sum += orow[c];
        }
        const S inv = S(1) / sum;
        for (std::int64_t c = 0; c < n; ++c) orow[c] *= inv;
    }
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, m, n](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::int64_t r = 0; r < m; ++r) {
            const S* y = self.data.data() + r * n;
            const S* dy = self.grad.data() + r * n;
            S dot = 0;
            for (std::int64_t c = 0; c < n; ++c) dot += dy[c] * y[c];
            for (std::int64_t c = 0; c < n; ++c) an->grad[r * n + c] += y[c] * (dy[c] - dot);
        }
    });
    return out;
}

template <typename S>
TensorT<S> transpose2d(const TensorT<S>& a) {
    detail::require(a.is_matrix(), "transpose2d: input must be 2-D");
    const std::int64_t m = a.rows(), n = a.cols();
    TensorT<S> out = TensorT<S>::uninit({n, m});
    detail::map(out).noalias() = detail::cmap(a).transpose();
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, m, n](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        detail::EMap<S> dA(an->grad.data(), m, n);
        detail::EMap<S> dC(self.grad.data(), n, m);
        dA.noalias() += dC.transpose();
    });
    return out;
}

template <typename S>
TensorT<S> concat_rows(const std::vector<TensorT<S>>& parts) {
    detail::require(!parts.empty(), "concat_rows: no inputs");
    const std::int64_t n = parts.front().cols();
    std::int64_t m = 0;
    for (const auto& p : parts) {
        detail::require(p.is_matrix() && p.cols() == n, "concat_rows: column count mismatch");
        m += p.rows();
    }
    TensorT<S> out = TensorT<S>::uninit({m, n});
    std::int64_t row = 0;
    std::vector<std::int64_t> offsets;
    for (const auto& p : parts) {
        offsets.push_back(row);
        std::copy(p.data(), p.data() + p.numel(), out.data() + row * n);
        row += p.rows();
    }
    std::vector<std::shared_ptr<typename TensorT<S>::Node>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    detail::attach_many<S>(out, parts,
                           [nodes, offsets, n](typename TensorT<S>::Node& self) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto& p = *nodes[i];
            if (!p.requires_grad) continue;
            p.ensure_grad();
            const std::int64_t base = offsets[i] * n;
            for (std::size_t j = 0; j < p.grad.size(); ++j)
                p.grad[j] += self.grad[static_cast<std::size_t>(base) + j];
        }
    });
    return out;
}

template <typename S>
TensorT<S> concat_cols(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require(a.is_matrix() && b.is_matrix() && a.rows() == b.rows(),
                    "concat_cols: row count mismatch");
    const std::int64_t m = a.rows(), na = a.cols(), nb = b.cols();
    TensorT<S> out = TensorT<S>::uninit({m, na + nb});
    for (std::int64_t r = 0; r < m; ++r) {
        std::copy(a.data() + r * na, a.data() + (r + 1) * na, out.data() + r * (na + nb));
        std::copy(b.data() + r * nb, b.data() + (r + 1) * nb, out.data() + r * (na + nb) + na);
    }
    auto an = a.node();
    auto bn = b.node();
    detail::attach<S>(out, {a, b}, [an, bn, m, na, nb](typename TensorT<S>::Node& self) {
        const std::int64_t n = na + nb;
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t c = 0; c < na; ++c) an->grad[r * na + c] += self.grad[r * n + c];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t c = 0; c < nb; ++c)
                    bn->grad[r * nb + c] += self.grad[r * n + na + c];
        }
    });
    return out;
}

// Rows of `a` at `indices` (duplicates allowed); backward scatter-adds.
template <typename S>
TensorT<S> gather_rows(const TensorT<S>& a, std::vector<std::int64_t> indices) {
    detail::require(a.is_matrix(), "gather_rows: input must be 2-D");
    const std::int64_t n = a.cols();
    for (const auto i : indices)
        detail::require(i >= 0 && i < a.rows(), "gather_rows: row index out of range");
    TensorT<S> out = TensorT<S>::uninit({static_cast<std::int64_t>(indices.size()), n});
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::copy(a.data() + indices[r] * n, a.data() + (indices[r] + 1) * n,
                  out.data() + static_cast<std::int64_t>(r) * n);
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, indices = std::move(indices), n](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::size_t r = 0; r < indices.size(); ++r)
            for (std::int64_t c = 0; c < n; ++c)
                an->grad[indices[r] * n + c] += self.grad[static_cast<std::int64_t>(r) * n + c];
    });
    return out;
}

template <typename S>
TensorT<S> slice_cols(const TensorT<S>& a, std::int64_t start, std::int64_t len) {
    detail::require(a.is_matrix(), "slice_cols: input must be 2-D");
    detail::require(start >= 0 && len >= 0 && start + len <= a.cols(),
                    "slice_cols: column range out of bounds");
    const std::int64_t m = a.rows(), n = a.cols();
    TensorT<S> out = TensorT<S>::uninit({m, len});
    for (std::int64_t r = 0; r < m; ++r)
        std::copy(a.data() + r * n + start, a.data() + r * n + start + len, out.data() + r * len);
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, m, n, start, len](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::int64_t r = 0; r < m; ++r)
            for (std::int64_t c = 0; c < len; ++c)
                an->grad[r * n + start + c] += self.grad[r * len + c];
    });
    return out;
}

// Column-wise max over contiguous row segments of length seg: [g*seg, n] -> [g, n].
template <typename S>
TensorT<S> segment_max(const TensorT<S>& a, std::int64_t seg) {
    detail::require(a.is_matrix() && seg >= 1 && a.rows() % seg == 0,
                    "segment_max: rows must be a multiple of the segment length");
    const std::int64_t g = a.rows() / seg, n = a.cols();
    TensorT<S> out = TensorT<S>::uninit({g, n});
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(g * n));
    for (std::int64_t s = 0; s < g; ++s) {
        for (std::int64_t c = 0; c < n; ++c) {
            std::int64_t best_row = s * seg;
            S best = a.data()[best_row * n + c];
            for (std::int64_t r = s * seg + 1; r < (s + 1) * seg; ++r) {
                const S v = a.data()[r * n + c];
                if (v > best) {
                    best = v;
                    best_row = r;
                }
            }
            out.data()[s * n + c] = best;
            argmax[static_cast<std::size_t>(s * n + c)] = best_row;
        }
    }
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, argmax = std::move(argmax), g, n](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < g * n; ++i)
            an->grad[argmax[static_cast<std::size_t>(i)] * n + (i % n)] += self.grad[i];
    });
    return out;
}

// Each row repeated `repeat` times contiguously: [g, n] -> [g*repeat, n].
template <typename S>
TensorT<S> segment_repeat(const TensorT<S>& a, std::int64_t repeat) {
    detail::require(a.is_matrix() && repeat >= 1, "segment_repeat: repeat must be >= 1");
    const std::int64_t g = a.rows(), n = a.cols();
    TensorT<S> out = TensorT<S>::uninit({g * repeat, n});
    for (std::int64_t s = 0; s < g; ++s)
        for (std::int64_t r = 0; r < repeat; ++r)
            std::copy(a.data() + s * n, a.data() + (s + 1) * n,
                      out.data() + (s * repeat + r) * n);
    auto an = a.node();
    detail::attach<S>(out, {a}, [an, g, n, repeat](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (std::int64_t s = 0; s < g; ++s)
            for (std::int64_t r = 0; r < repeat; ++r)
                for (std::int64_t c = 0; c < n; ++c)
                    an->grad[s * n + c] += self.grad[(s * repeat + r) * n + c];
    });
    return out;
}

template <typename S>
TensorT<S> sum_all(const TensorT<S>& a) {
    TensorT<S> out = TensorT<S>::uninit({1});
    S acc = 0;
    for (const S v : a.data_vec()) acc += v;
    out.data()[0] = acc;
    auto an = a.node();
    detail::attach<S>(out, {a}, [an](typename TensorT<S>::Node& self) {
        an->ensure_grad();
        for (auto& g : an->grad) g += self.grad[0];
    });
    return out;
}

template <typename S>
TensorT<S> mean_all(const TensorT<S>& a) {
    detail::require(a.numel() > 0, "mean_all: empty tensor");
    return scale(sum_all(a), S(1) / static_cast<S>(a.numel()));
}

namespace detail {
// Shared forward/backward for the beta-parameterized Smooth L1 penalty.
template <typename S>
TensorT<S> smooth_l1_reduce(const TensorT<S>& pred, const TensorT<S>& target, S beta, bool mean) {
    require(pred.shape() == target.shape(), "smooth_l1: shape mismatch");
    require(beta > S(0), "smooth_l1: beta must be positive");
    require(pred.numel() > 0, "smooth_l1: empty input");
    const std::size_t n = pred.data_vec().size();
    const S w = mean ? S(1) / static_cast<S>(n) : S(1);
    TensorT<S> out = TensorT<S>::uninit({1});
    S acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const S d = pred.data()[i] - target.data()[i];
        const S ad = std::abs(d);
        acc += (ad < beta) ? S(0.5) * d * d / beta : ad - S(0.5) * beta;
    }
    out.data()[0] = acc * w;
    auto pn = pred.node();
    auto tn = target.node();
    attach<S>(out, {pred, target}, [pn, tn, beta, w, n](typename TensorT<S>::Node& self) {
        const S g = self.grad[0] * w;
        for (std::size_t i = 0; i < n; ++i) {
            const S d = pn->data[i] - tn->data[i];
            const S slope = (std::abs(d) < beta) ? d / beta : (d > S(0) ? S(1) : S(-1));
            if (pn->requires_grad) {
                pn->ensure_grad();
                pn->grad[i] += g * slope;
            }
            if (tn->requires_grad) {
                tn->ensure_grad();
                tn->grad[i] -= g * slope;
            }
        }
    });
    return out;
}
}  // namespace detail

// Mean over elements of the piecewise quadratic/linear residual penalty:
// 0.5*d^2/beta for |d| < beta, |d| - 0.5*beta otherwise.
template <typename S>
TensorT<S> smooth_l1(const TensorT<S>& pred, const TensorT<S>& target, S beta) {
    return detail::smooth_l1_reduce(pred, target, beta, true);
}

template <typename S>
TensorT<S> smooth_l1_sum(const TensorT<S>& pred, const TensorT<S>& target, S beta) {
    return detail::smooth_l1_reduce(pred, target, beta, false);
}

}  // namespace pointjepa::nn
