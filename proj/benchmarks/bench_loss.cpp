#include "crisp/loss.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace crisp;

namespace {

PairedBatch batch(int n, int dim, bool coords) {
    Rng rng(42);
    std::normal_distribution<double> normal;
    Matrix g(n, dim);
    Matrix a(n, dim);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        g.data()[i] = normal(rng);
        a.data()[i] = normal(rng);
    }
    PairedBatch b;
    b.gl = EmbeddingBatch(g);
    b.a = EmbeddingBatch(a);
    for (int i = 0; i < n; ++i) b.pair_index.push_back(static_cast<std::size_t>(i));
    if (coords) {
        // one co-located cluster per ~10 items
        std::vector<GeoPoint> pts;
        std::uniform_real_distribution<double> jitter(0.0, 1e-3);
        for (int i = 0; i < n; ++i) pts.push_back({36.0 + 0.01 * (i / 10) + jitter(rng), -120.0 + jitter(rng)});
        b.coords = pts;
    }
    return b;
}

const Temperature kTau = Temperature::from_log_inverse(kDefaultLogInverseTemperature);

void BM_Standard(benchmark::State& state) {
    const PairedBatch b = batch(static_cast<int>(state.range(0)), 32, false);
    for (auto _ : state) benchmark::DoNotOptimize(standard_crisp_loss(b, kTau).loss);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Parameterized(benchmark::State& state) {
    const PairedBatch b = batch(static_cast<int>(state.range(0)), 32, false);
    for (auto _ : state) benchmark::DoNotOptimize(parameterized_crisp_loss(b, kTau, LossWeight{0.3}).loss);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ManyToOne(benchmark::State& state) {
    const PairedBatch b = batch(static_cast<int>(state.range(0)), 32, true);
    for (auto _ : state) benchmark::DoNotOptimize(many_to_one_crisp_loss(b, kTau).loss);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PositiveMask(benchmark::State& state) {
    const PairedBatch b = batch(static_cast<int>(state.range(0)), 4, true);
    for (auto _ : state) benchmark::DoNotOptimize(build_positive_mask(*b.coords, b.pair_index, kCoLocationRadiusM).sum());
}

}  // namespace

BENCHMARK(BM_Standard)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Parameterized)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_ManyToOne)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_PositiveMask)->RangeMultiplier(4)->Range(16, 1024);
