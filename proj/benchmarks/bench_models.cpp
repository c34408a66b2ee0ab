#include <benchmark/benchmark.h>

#include <random>

#include "mwd/gaussian_process.hpp"
#include "mwd/random_forest.hpp"
#include "mwd/svm.hpp"

namespace {

struct Data {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Data make(int n, int p) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(n * 1000 + p));
    std::normal_distribution<double> g;
    Data d{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) d.X(i, j) = g(rng);
        d.y(i) = d.X(i, 0) - 0.5 * d.X(i, 1) + 0.1 * g(rng);
    }
    return d;
}

void BM_TrainRandomForest(benchmark::State& state) {
    const auto d = make(static_cast<int>(state.range(0)), 172);
    mwd::RFParams p;
    p.n_trees = 50;
    for (auto _ : state) benchmark::DoNotOptimize(mwd::train_rf(d.X, d.y, p, mwd::Task::regression));
}
BENCHMARK(BM_TrainRandomForest)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_TrainGaussianProcessGrid(benchmark::State& state) {
    const auto d = make(static_cast<int>(state.range(0)), 20);
    for (auto _ : state) benchmark::DoNotOptimize(mwd::train_gp(d.X, d.y));
}
BENCHMARK(BM_TrainGaussianProcessGrid)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TrainSvm(benchmark::State& state) {
    const auto d = make(static_cast<int>(state.range(0)), 20);
    std::vector<int> labels;
    for (double v : d.y) labels.push_back(v > 0 ? 1 : -1);
    for (auto _ : state) benchmark::DoNotOptimize(mwd::train_svm(d.X, labels, mwd::SVMParams{}));
}
BENCHMARK(BM_TrainSvm)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

}  // namespace
