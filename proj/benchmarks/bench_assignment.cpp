#include "crowdtrack/assignment.hpp"
#include "crowdtrack/association.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

Eigen::MatrixXd random_scores(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-6.0, 4.0);
    Eigen::MatrixXd m(rows, cols);
    for (int q = 0; q < rows; ++q) {
        for (int i = 0; i < cols; ++i) {
            m(q, i) = u(rng);
        }
    }
    return m;
}

void BM_MurtyKBest(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto k = static_cast<int>(state.range(1));
    const auto scores = random_scores(n, n, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crowdtrack::murty_kbest(scores, k));
    }
}
BENCHMARK(BM_MurtyKBest)->Args({2, 10})->Args({4, 10})->Args({6, 10})->Args({8, 10})->Args({8, 50});

void BM_AssociationProbabilities(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto hyps = crowdtrack::murty_kbest(random_scores(n, n, 12), 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crowdtrack::association_probabilities(hyps, static_cast<std::size_t>(n),
                                                                       static_cast<std::size_t>(n)));
    }
}
BENCHMARK(BM_AssociationProbabilities)->Arg(2)->Arg(4)->Arg(8);

void BM_SolveMinAssignment(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd cost = -random_scores(n, n + 2, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crowdtrack::solve_min_assignment(cost));
    }
}
BENCHMARK(BM_SolveMinAssignment)->Arg(4)->Arg(16)->Arg(64);

}  // namespace
