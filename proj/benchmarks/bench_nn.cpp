#include <benchmark/benchmark.h>

#include "pointjepa/nn.hpp"
#include "pointjepa/rng.hpp"

using namespace pointjepa;

namespace {

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

nn::Tensor random_tensor(std::int64_t rows, std::int64_t cols, Rng& rng) {
    nn::Tensor t = nn::Tensor::uninit({rows, cols});
    for (auto& v : t.data_vec()) v = static_cast<float>(rng.uniform(-1, 1));
    return t;
}

void BM_EncodePatches(benchmark::State& state) {
    const nn::ModelDims dims = desk_dims();
    Rng rng(1);
    const auto enc = nn::PointEncoderT<float>::make(dims, rng);
    const nn::Tensor coords = random_tensor(dims.c * dims.k, 3, rng);
    nn::NoGradGuard no_grad;
    for (auto _ : state) {
        auto out = nn::encode_patches(coords, dims.k, enc);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_EncoderForward(benchmark::State& state) {
    const nn::ModelDims dims = desk_dims();
    Rng rng(2);
    const auto enc = nn::EncoderT<float>::make(dims.embed_dim, dims.encoder_depth, dims.encoder_heads, rng);
    const auto pos = nn::PosEncoderT<float>::make(dims.pos_hidden, dims.embed_dim, rng);
    const nn::Tensor tokens = random_tensor(dims.c, dims.embed_dim, rng);
    const nn::Tensor centers = random_tensor(dims.c, 3, rng);
    nn::NoGradGuard no_grad;
    for (auto _ : state) {
        auto out = nn::encoder_forward(tokens, centers, enc, pos);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_EncoderBackward(benchmark::State& state) {
    const nn::ModelDims dims = desk_dims();
    Rng rng(3);
    const auto enc = nn::EncoderT<float>::make(dims.embed_dim, dims.encoder_depth, dims.encoder_heads, rng);
    const auto pos = nn::PosEncoderT<float>::make(dims.pos_hidden, dims.embed_dim, rng);
    const nn::Tensor tokens = random_tensor(dims.c, dims.embed_dim, rng);
    const nn::Tensor centers = random_tensor(dims.c, 3, rng);
    for (auto _ : state) {
        auto out = nn::encoder_forward(tokens, centers, enc, pos);
        auto loss = nn::mean_all(out);
        loss.backward();
        benchmark::DoNotOptimize(loss.data());
    }
}

}  // namespace

BENCHMARK(BM_EncodePatches)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EncoderBackward)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
