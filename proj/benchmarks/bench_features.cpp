#include <benchmark/benchmark.h>

#include <random>

#include "mwd/features.hpp"
#include "mwd/synth.hpp"

namespace {

std::vector<double> signal(std::size_t n) {
    std::mt19937_64 rng(n);
    std::normal_distribution<double> g(50.0, 10.0);
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

void BM_Hjorth(benchmark::State& state) {
    const auto x = signal(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mwd::hjorth(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Hjorth)->Arg(120)->Arg(1200);

void BM_SvdEntropy(benchmark::State& state) {
    const auto x = signal(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mwd::svd_entropy(x, 10));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SvdEntropy)->Arg(120)->Arg(1200);

void BM_DescriptiveStats(benchmark::State& state) {
    const auto x = signal(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mwd::descriptive_stats(x));
}
BENCHMARK(BM_DescriptiveStats)->Arg(120)->Arg(1200);

void BM_HoleFeatures(benchmark::State& state) {
    mwd::SiteSpec spec;
    spec.n_regions = 1;
    spec.n_blasts = 1;
    spec.holes_per_blast = 1;
    const auto site = mwd::generate_site(spec);
    const mwd::FeatureConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(mwd::extract_hole_features(site.holes.front(), cfg));
}
BENCHMARK(BM_HoleFeatures);

}  // namespace
