#include <benchmark/benchmark.h>

#include <random>

#include "maskscope/embedding.hpp"
#include "maskscope/gradcam.hpp"
#include "maskscope/modelcmp.hpp"
#include "maskscope/objstats.hpp"

using namespace maskscope;

namespace {

io::TensorRecord random_maps(std::uint32_t k, std::uint32_t h, std::uint32_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> v(std::size_t{k} * h * w);
    for (auto& x : v) x = g(rng);
    return io::TensorRecord({k, h, w}, std::move(v));
}

// 512x7x7 maps (VGG-style last conv) up to a 224x224 image.
void BM_GradcamPipeline(benchmark::State& state) {
    const auto acts = random_maps(512, 7, 7, 1);
    const auto grads = random_maps(512, 7, 7, 2);
    for (auto _ : state) {
        const auto mask = gradcam::normalize_mask(gradcam::compute_heatmap(acts, gradcam::channel_weights(grads)));
        benchmark::DoNotOptimize(gradcam::expand_mask(mask, 224, 224, 0.5f));
    }
}
BENCHMARK(BM_GradcamPipeline);

void BM_CountPixels(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> label(0, 149);
    Grid<std::uint16_t> seg(224, 224);
    for (auto& v : seg.values()) v = static_cast<std::uint16_t>(label(rng));
    const gradcam::BinaryMask mask{Grid<std::uint8_t>(224, 224, 1), 0.5f};
    for (auto _ : state) benchmark::DoNotOptimize(objstats::count_pixels(seg, mask));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seg.size()));
}
BENCHMARK(BM_CountPixels);

void BM_AverageResidual(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    gradcam::NormalizedMask a{Grid<float>(224, 224)}, b{Grid<float>(224, 224)};
    for (auto& v : a.values.values()) v = u(rng);
    for (auto& v : b.values.values()) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(modelcmp::average_residual(a, b));
}
BENCHMARK(BM_AverageResidual);

void BM_Pca(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Grid<double> x(n, 196);
    for (auto& v : x.values()) v = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(embedding::pca_reduce(x, 50));
}
BENCHMARK(BM_Pca)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Tsne(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    Grid<double> x(n, 50);
    for (auto& v : x.values()) v = g(rng);
    embedding::TsneParams params;
    for (auto _ : state) benchmark::DoNotOptimize(embedding::tsne_embed(x, params));
}
BENCHMARK(BM_Tsne)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
