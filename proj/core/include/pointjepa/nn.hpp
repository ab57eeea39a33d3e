#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pointjepa/errors.hpp"
#include "pointjepa/rng.hpp"
#include "pointjepa/tensor.hpp"

namespace pointjepa::nn {

template <typename S>
struct NamedParam {
    std::string name;
    TensorT<S> tensor;
};

// Tokenization counts and network widths. Defaults are the full-scale
// configuration (64 centers, 32-point groups, 384-wide 12-deep encoders,
// 192-wide 6-deep predictor); desk-scale runs shrink these via config.
struct ModelDims {
    std::int64_t c = 64;
    std::int64_t k = 32;
    std::int64_t embed_dim = 384;  // D
    std::int64_t encoder_depth = 12;
    std::int64_t encoder_heads = 6;
    std::int64_t predictor_dim = 192;  // P
    std::int64_t predictor_depth = 6;
    std::int64_t predictor_heads = 6;
    std::int64_t point_h1 = 128;
    std::int64_t point_h2 = 256;
    std::int64_t point_h3 = 512;
    std::int64_t pos_hidden = 128;

    void validate() const {
        auto positive = [](std::int64_t v, const char* what) {
            if (v < 1) throw std::invalid_argument(std::string("ModelDims: ") + what + " must be >= 1");
        };
        positive(c, "c");
        positive(k, "k");
        positive(embed_dim, "embed_dim");
        positive(encoder_depth, "encoder_depth");
        positive(predictor_dim, "predictor_dim");
        positive(predictor_depth, "predictor_depth");
        positive(point_h1, "point_h1");
        positive(point_h2, "point_h2");
        positive(point_h3, "point_h3");
        positive(pos_hidden, "pos_hidden");
        if (encoder_heads < 1 || embed_dim % encoder_heads != 0)
            throw std::invalid_argument("ModelDims: embed_dim must be divisible by encoder_heads");
        if (predictor_heads < 1 || predictor_dim % predictor_heads != 0)
            throw std::invalid_argument("ModelDims: predictor_dim must be divisible by predictor_heads");
    }

    bool operator==(const ModelDims&) const = default;
};

namespace init {

template <typename S>
TensorT<S> xavier_uniform(std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    TensorT<S> t = TensorT<S>::uninit({fan_in, fan_out});
    for (auto& v : t.data_vec()) v = static_cast<S>(rng.uniform(-limit, limit));
    t.set_requires_grad(true);
    return t;
}

template <typename S>
TensorT<S> zeros_param(std::vector<std::int64_t> shape) {
    TensorT<S> t = TensorT<S>::zeros(std::move(shape));
    t.set_requires_grad(true);
    return t;
}

template <typename S>
TensorT<S> ones_param(std::vector<std::int64_t> shape) {
    TensorT<S> t = TensorT<S>::uninit(std::move(shape));
    std::fill(t.data_vec().begin(), t.data_vec().end(), S(1));
    t.set_requires_grad(true);
    return t;
}

template <typename S>
TensorT<S> normal(std::vector<std::int64_t> shape, double stddev, Rng& rng) {
    TensorT<S> t = TensorT<S>::uninit(std::move(shape));
    for (auto& v : t.data_vec()) v = static_cast<S>(rng.gaussian() * stddev);
    t.set_requires_grad(true);
    return t;
}

}  // namespace init

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

template <typename S>
struct LinearT {
    TensorT<S> weight;  // [in, out]
    TensorT<S> bias;    // [out]

    static LinearT make(std::int64_t in, std::int64_t out, Rng& rng) {
        return {init::xavier_uniform<S>(in, out, rng), init::zeros_param<S>({out})};
    }
    TensorT<S> forward(const TensorT<S>& x) const { return add_rowvec(matmul(x, weight), bias); }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        out.push_back({prefix + ".weight", weight});
        out.push_back({prefix + ".bias", bias});
    }
};

template <typename S>
struct LayerNormT {
    TensorT<S> gamma;
    TensorT<S> beta;

    static LayerNormT make(std::int64_t width) {
        return {init::ones_param<S>({width}), init::zeros_param<S>({width})};
    }
    TensorT<S> forward(const TensorT<S>& x) const { return layer_norm(x, gamma, beta); }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        out.push_back({prefix + ".gamma", gamma});
        out.push_back({prefix + ".beta", beta});
    }
};

// ---------------------------------------------------------------------------
// mini-PointNet patch encoder
// ---------------------------------------------------------------------------

// Two shared-MLP + max-pool stages. The first stage lifts each point,
// max-pools per patch and concatenates the pooled vector back onto every
// per-point feature; the second maps the concatenation and pools to one
// D-vector per patch. Per-point layers carry no normalization: the per-point
// map is nearly homogeneous in the local coordinates, so a per-point feature
// norm would erase patch scale and anisotropy. One layer norm acts on the
// pooled patch embedding, which keeps the whole encoder bitwise
// permutation-invariant within a patch.
template <typename S>
struct PointEncoderT {
    LinearT<S> lin1, lin2;  // 3 -> h1 -> h2
    LinearT<S> lin3;        // 2*h2 -> h3
    LinearT<S> lin4;        // h3 -> D
    LayerNormT<S> patch_ln;

    static PointEncoderT make(const ModelDims& d, Rng& rng) {
        PointEncoderT e;
        e.lin1 = LinearT<S>::make(3, d.point_h1, rng);
        e.lin2 = LinearT<S>::make(d.point_h1, d.point_h2, rng);
        e.lin3 = LinearT<S>::make(2 * d.point_h2, d.point_h3, rng);
        e.lin4 = LinearT<S>::make(d.point_h3, d.embed_dim, rng);
        e.patch_ln = LayerNormT<S>::make(d.embed_dim);
        return e;
    }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        lin1.collect(prefix + ".lin1", out);
        lin2.collect(prefix + ".lin2", out);
        lin3.collect(prefix + ".lin3", out);
        lin4.collect(prefix + ".lin4", out);
        patch_ln.collect(prefix + ".patch_ln", out);
    }
};

// local_coords is the row-stacked [c*k, 3] matrix of center-relative patch
// coordinates; returns one embedding per patch, [c, D].
template <typename S>
TensorT<S> encode_patches(const TensorT<S>& local_coords, std::int64_t k,
                          const PointEncoderT<S>& enc) {
    if (!local_coords.is_matrix() || local_coords.cols() != 3)
        throw std::invalid_argument("encode_patches: local_coords must be [c*k, 3]");
    if (k < 1 || local_coords.rows() % k != 0)
        throw std::invalid_argument("encode_patches: row count must be a multiple of k");
    TensorT<S> h = gelu(enc.lin1.forward(local_coords));
    h = gelu(enc.lin2.forward(h));
    TensorT<S> pooled = segment_max(h, k);
    TensorT<S> combined = concat_cols(h, segment_repeat(pooled, k));
    TensorT<S> feat = gelu(enc.lin3.forward(combined));
    return enc.patch_ln.forward(segment_max(enc.lin4.forward(feat), k));
}

// ---------------------------------------------------------------------------
// positional encoding
// ---------------------------------------------------------------------------

// Shared 2-layer MLP from raw xyz to the consumer's width; one instance runs
// at D for the encoders and a separate one at P for the predictor.
template <typename S>
struct PosEncoderT {
    LinearT<S> lin1, lin2;

    static PosEncoderT make(std::int64_t hidden, std::int64_t width, Rng& rng) {
        return {LinearT<S>::make(3, hidden, rng), LinearT<S>::make(hidden, width, rng)};
    }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        lin1.collect(prefix + ".lin1", out);
        lin2.collect(prefix + ".lin2", out);
    }
};

template <typename S>
TensorT<S> pos_encode(const TensorT<S>& centers, const PosEncoderT<S>& enc) {
    if (!centers.is_matrix() || centers.cols() != 3)
        throw std::invalid_argument("pos_encode: centers must be [m, 3]");
    return enc.lin2.forward(gelu(enc.lin1.forward(centers)));
}

// ---------------------------------------------------------------------------
// transformer
// ---------------------------------------------------------------------------

template <typename S>
struct TransformerBlockT {
    LayerNormT<S> ln_attn;
    LinearT<S> qkv;   // D -> 3D
    LinearT<S> proj;  // D -> D
    LayerNormT<S> ln_ff;
    LinearT<S> ff1;  // D -> 4D
    LinearT<S> ff2;  // 4D -> D

    static TransformerBlockT make(std::int64_t width, Rng& rng) {
        TransformerBlockT b;
        b.ln_attn = LayerNormT<S>::make(width);
        b.qkv = LinearT<S>::make(width, 3 * width, rng);
        b.proj = LinearT<S>::make(width, width, rng);
        b.ln_ff = LayerNormT<S>::make(width);
        b.ff1 = LinearT<S>::make(width, 4 * width, rng);
        b.ff2 = LinearT<S>::make(4 * width, width, rng);
        return b;
    }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        ln_attn.collect(prefix + ".ln_attn", out);
        qkv.collect(prefix + ".qkv", out);
        proj.collect(prefix + ".proj", out);
        ln_ff.collect(prefix + ".ln_ff", out);
        ff1.collect(prefix + ".ff1", out);
        ff2.collect(prefix + ".ff2", out);
    }
};

// Hook for tests that inspect attention internals.
template <typename S>
struct EncoderTraceT {
    std::vector<TensorT<S>> attention;  // one [m, m] matrix per (block, head)
};
using EncoderTrace = EncoderTraceT<float>;

template <typename S>
TensorT<S> transformer_block_forward(const TensorT<S>& x, const TransformerBlockT<S>& block,
                                     std::int64_t heads, EncoderTraceT<S>* trace = nullptr) {
    const std::int64_t width = x.cols();
    const std::int64_t dh = width / heads;
    const S inv_sqrt_dh = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

    TensorT<S> a_in = block.ln_attn.forward(x);
    TensorT<S> qkv = block.qkv.forward(a_in);
    TensorT<S> q = slice_cols(qkv, 0, width);
    TensorT<S> k = slice_cols(qkv, width, width);
    TensorT<S> v = slice_cols(qkv, 2 * width, width);

    TensorT<S> merged;
    for (std::int64_t h = 0; h < heads; ++h) {
        TensorT<S> qh = slice_cols(q, h * dh, dh);
        TensorT<S> kh = slice_cols(k, h * dh, dh);
        TensorT<S> vh = slice_cols(v, h * dh, dh);
        TensorT<S> attn = softmax_rows(scale(matmul(qh, transpose2d(kh)), inv_sqrt_dh));
        if (trace) trace->attention.push_back(attn);
        TensorT<S> oh = matmul(attn, vh);
        merged = (h == 0) ? oh : concat_cols(merged, oh);
    }
    TensorT<S> y = add(x, block.proj.forward(merged));
    TensorT<S> f_in = block.ln_ff.forward(y);
    return add(y, block.ff2.forward(gelu(block.ff1.forward(f_in))));
}

// Stack of pre-norm blocks with a final layer normalization; both the
// context encoder and its EMA teacher share this shape.
template <typename S>
struct EncoderT {
    std::vector<TransformerBlockT<S>> blocks;
    LayerNormT<S> final_ln;
    std::int64_t heads = 1;

    static EncoderT make(std::int64_t width, std::int64_t depth, std::int64_t heads, Rng& rng) {
        EncoderT e;
        e.heads = heads;
        e.blocks.reserve(static_cast<std::size_t>(depth));
        for (std::int64_t i = 0; i < depth; ++i) e.blocks.push_back(TransformerBlockT<S>::make(width, rng));
        e.final_ln = LayerNormT<S>::make(width);
        return e;
    }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect(prefix + ".block" + std::to_string(i), out);
        final_ln.collect(prefix + ".final_ln", out);
    }
};

// tokens [m, D] plus a positional encoding of the m center coordinates.
// Throws NumericError with the offending block index if a block emits a
// non-finite activation.
template <typename S>
TensorT<S> encoder_forward(const TensorT<S>& tokens, const TensorT<S>& positions,
                           const EncoderT<S>& enc, const PosEncoderT<S>& pos,
                           EncoderTraceT<S>* trace = nullptr) {
    if (tokens.rows() < 1) throw std::invalid_argument("encoder_forward: need at least one token");
    if (tokens.rows() != positions.rows())
        throw std::invalid_argument("encoder_forward: tokens/positions row mismatch");
    TensorT<S> x = add(tokens, pos_encode(positions, pos));
    for (std::size_t i = 0; i < enc.blocks.size(); ++i) {
        x = transformer_block_forward(x, enc.blocks[i], enc.heads, trace);
        if (!x.all_finite())
            throw NumericError("encoder_forward: non-finite activation in block " + std::to_string(i),
                               static_cast<long long>(i));
    }
    return enc.final_ln.forward(x);
}

// ---------------------------------------------------------------------------
// predictor
// ---------------------------------------------------------------------------

// Narrow transformer that maps projected context tokens plus mask tokens to
// predicted target embeddings.
template <typename S>
struct PredictorT {
    LinearT<S> input_proj;   // D -> P
    LinearT<S> output_proj;  // P -> D
    EncoderT<S> torso;       // width P
    TensorT<S> mask_token;   // [1, P]

    static PredictorT make(const ModelDims& d, Rng& rng) {
        PredictorT p;
        p.input_proj = LinearT<S>::make(d.embed_dim, d.predictor_dim, rng);
        p.torso = EncoderT<S>::make(d.predictor_dim, d.predictor_depth, d.predictor_heads, rng);
        p.output_proj = LinearT<S>::make(d.predictor_dim, d.embed_dim, rng);
        p.mask_token = init::normal<S>({1, d.predictor_dim}, 0.02, rng);
        return p;
    }
    void collect(const std::string& prefix, std::vector<NamedParam<S>>& out) const {
        input_proj.collect(prefix + ".input_proj", out);
        torso.collect(prefix + ".torso", out);
        output_proj.collect(prefix + ".output_proj", out);
        out.push_back({prefix + ".mask_token", mask_token});
    }
};

// For each target block: run the predictor over [projected context tokens;
// one mask token per target position], all positionally encoded at width P,
// and project the mask-token outputs back to D.
template <typename S>
std::vector<TensorT<S>> predict_targets(const TensorT<S>& context_enc,
                                        const TensorT<S>& context_positions,
                                        const std::vector<TensorT<S>>& target_positions,
                                        const PredictorT<S>& pred, const PosEncoderT<S>& pos_p) {
    if (context_enc.rows() < 1) throw std::invalid_argument("predict_targets: empty context");
    if (context_enc.rows() != context_positions.rows())
        throw std::invalid_argument("predict_targets: context/positions row mismatch");

    const std::int64_t m_x = context_enc.rows();
    TensorT<S> ctx = add(pred.input_proj.forward(context_enc), pos_encode(context_positions, pos_p));

    std::vector<TensorT<S>> out;
    out.reserve(target_positions.size());
    for (const auto& tgt_pos : target_positions) {
        const std::int64_t b = tgt_pos.rows();
        if (b < 1) throw std::invalid_argument("predict_targets: empty target block");
        TensorT<S> masks = add(segment_repeat(pred.mask_token, b), pos_encode(tgt_pos, pos_p));
        TensorT<S> x = concat_rows<S>({ctx, masks});
        for (std::size_t i = 0; i < pred.torso.blocks.size(); ++i) {
            x = transformer_block_forward(x, pred.torso.blocks[i], pred.torso.heads);
            if (!x.all_finite())
                throw NumericError("predict_targets: non-finite activation in block " + std::to_string(i),
                                   static_cast<long long>(i));
        }
        x = pred.torso.final_ln.forward(x);
        std::vector<std::int64_t> mask_rows(static_cast<std::size_t>(b));
        for (std::int64_t i = 0; i < b; ++i) mask_rows[static_cast<std::size_t>(i)] = m_x + i;
        out.push_back(pred.output_proj.forward(gather_rows(x, std::move(mask_rows))));
    }
    return out;
}

// Rows of the fully encoded target sequence at each block's positions. Pure
// selection: overlapping blocks share identical rows.
template <typename S>
std::vector<TensorT<S>> select_target_embeddings(const TensorT<S>& full_target_enc,
                                                 const std::vector<std::vector<std::uint32_t>>& blocks) {
    std::vector<TensorT<S>> out;
    out.reserve(blocks.size());
    for (const auto& block : blocks) {
        std::vector<std::int64_t> rows;
        rows.reserve(block.size());
        for (const auto p : block) {
            if (p >= full_target_enc.rows())
                throw std::invalid_argument("select_target_embeddings: block index out of range");
            rows.push_back(static_cast<std::int64_t>(p));
        }
        out.push_back(gather_rows(full_target_enc, std::move(rows)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// full model
// ---------------------------------------------------------------------------

template <typename S>
struct JepaModelT {
    ModelDims dims;
    PointEncoderT<S> point_encoder;
    PosEncoderT<S> pos_encoder_d;  // width D, shared by both encoders
    PosEncoderT<S> pos_encoder_p;  // width P, predictor only
    EncoderT<S> context_encoder;
    EncoderT<S> target_encoder;  // EMA teacher; receives no gradients
    PredictorT<S> predictor;

    static JepaModelT make(const ModelDims& d, Rng& rng) {
        d.validate();
        JepaModelT m;
        m.dims = d;
        m.point_encoder = PointEncoderT<S>::make(d, rng);
        m.pos_encoder_d = PosEncoderT<S>::make(d.pos_hidden, d.embed_dim, rng);
        m.pos_encoder_p = PosEncoderT<S>::make(d.pos_hidden, d.predictor_dim, rng);
        m.context_encoder = EncoderT<S>::make(d.embed_dim, d.encoder_depth, d.encoder_heads, rng);
        m.predictor = PredictorT<S>::make(d, rng);
        // the teacher starts as an exact copy of the context encoder
        m.target_encoder = EncoderT<S>::make(d.embed_dim, d.encoder_depth, d.encoder_heads, rng);
        std::vector<NamedParam<S>> src, dst;
        m.context_encoder.collect("enc", src);
        m.target_encoder.collect("enc", dst);
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i].tensor.data_vec() = src[i].tensor.data_vec();
            dst[i].tensor.set_requires_grad(false);
        }
        return m;
    }

    // Everything the optimizer updates, in a stable order.
    std::vector<NamedParam<S>> trainable_params() const {
        std::vector<NamedParam<S>> out;
        point_encoder.collect("point_encoder", out);
        pos_encoder_d.collect("pos_encoder_d", out);
        pos_encoder_p.collect("pos_encoder_p", out);
        context_encoder.collect("context_encoder", out);
        predictor.collect("predictor", out);
        return out;
    }

    std::vector<NamedParam<S>> target_params() const {
        std::vector<NamedParam<S>> out;
        target_encoder.collect("target_encoder", out);
        return out;
    }

    std::vector<NamedParam<S>> all_params() const {
        auto out = trainable_params();
        auto tgt = target_params();
        out.insert(out.end(), tgt.begin(), tgt.end());
        return out;
    }

    void zero_grad() const {
        for (auto& p : trainable_params()) p.tensor.node()->grad.clear();
    }
};

using JepaModel = JepaModelT<float>;

}  // namespace pointjepa::nn
