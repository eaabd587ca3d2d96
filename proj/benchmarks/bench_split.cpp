#include "crisp/split.hpp"
#include "crisp/synth.hpp"

#include <benchmark/benchmark.h>

using namespace crisp;

namespace {

const SynthCorpus& corpus(int n) {
    static std::map<int, SynthCorpus> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        SynthConfig cfg;
        cfg.n_observations = n;
        it = cache.emplace(n, generate(cfg)).first;
    }
    return it->second;
}

void BM_BuildSplit(benchmark::State& state) {
    const auto& obs = corpus(static_cast<int>(state.range(0))).observations;
    for (auto _ : state) {
        Rng rng(1);
        SplitManifest m = build_split(obs, assign_blocks(blocks_of(obs), {}, rng));
        add_lambda_subsets(m, kDefaultLambdas, rng);
        benchmark::DoNotOptimize(m.class_universe.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Generate(benchmark::State& state) {
    SynthConfig cfg;
    cfg.n_observations = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate(cfg).size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BuildSplit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
