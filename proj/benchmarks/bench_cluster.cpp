#include "crisp/kmeans.hpp"
#include "crisp/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace crisp;

namespace {

Matrix noise(Eigen::Index rows, Eigen::Index cols) {
    Rng rng(3);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

void BM_KMeans(benchmark::State& state) {
    const Matrix pts = noise(state.range(0), 32);
    const int k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_pp(pts, {k, 300, 1e-10, 0}).inertia);
}

void BM_ClusteringAgreement(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(5);
    std::uniform_int_distribution<int> label(0, static_cast<int>(state.range(1)) - 1);
    ClusteringPair p;
    for (std::size_t i = 0; i < n; ++i) {
        p.predicted_cluster.push_back(label(rng));
        p.true_label.push_back(label(rng));
    }
    for (auto _ : state) benchmark::DoNotOptimize(clustering_agreement(p).adjusted_mutual_info);
}

}  // namespace

BENCHMARK(BM_KMeans)->Args({500, 10})->Args({2000, 50})->Args({2000, 200})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClusteringAgreement)->Args({1000, 20})->Args({2000, 200})->Unit(benchmark::kMillisecond);
