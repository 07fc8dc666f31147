// Microbenchmarks for the hot paths: system assembly (the per-step cost of
// the parameter ODE), the symbolic integral kernel, the constrained solve,
// and raw particle-stepping throughput of the reference ensemble.

#include "ronsfp/assembler.hpp"
#include "ronsfp/oracle.hpp"
#include "ronsfp/problems.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ronsfp;

namespace {

MixtureState bistable_state(int r) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jig(-0.05, 0.05);
    MixtureState s;
    s.dim = 1;
    for (int i = 0; i < r; ++i) {
        s.amp.push_back(0.5 / std::sqrt(static_cast<double>(r)));
        s.width.push_back(1.1 + jig(rng));
        s.center.push_back((i % 2 == 0 ? -1.0 : 1.0) + jig(rng));
    }
    return s;
}

MixtureState duffing_state(int r) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> jig(-0.05, 0.05);
    MixtureState s;
    s.dim = 2;
    for (int i = 0; i < r; ++i) {
        s.amp.push_back(1.0 / std::sqrt(static_cast<double>(r)));
        s.width.push_back(0.35 + jig(rng));
        s.center.push_back((i % 2 == 0 ? -1.0 : 1.0) + jig(rng));
        s.center.push_back(jig(rng));
    }
    return s;
}

void BM_AssembleExactL2_DoubleWell(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const DriftModel drift = problems::bistable_drift(0.5);
    const MixtureState s = bistable_state(r);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_srons(drift, s, 0.0, 1e-4));
    }
}
BENCHMARK(BM_AssembleExactL2_DoubleWell)->Arg(1)->Arg(5)->Arg(10)->Arg(30);

void BM_AssembleExactL2_Oscillator(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const DriftModel drift = problems::duffing_drift(1.0, -0.2, -1.0, 0.3);
    const MixtureState s = duffing_state(r);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_srons(drift, s, 0.0, 1e-3));
    }
}
BENCHMARK(BM_AssembleExactL2_Oscillator)->Arg(10)->Arg(30);

void BM_AssembleWeightedCollocation(benchmark::State& state) {
    const int n_points = static_cast<int>(state.range(0));
    const DriftModel drift = problems::bistable_drift(0.5);
    const MixtureState s = bistable_state(10);
    const int counts[1] = {n_points};
    const CollocationGrid grid = CollocationGrid::equidistant_box(
        std::vector<double>{-4.0}, std::vector<double>{4.0},
        std::span<const int>(counts, 1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_crons(drift, s, 0.0, 1e-4, grid, true));
    }
}
BENCHMARK(BM_AssembleWeightedCollocation)->Arg(100)->Arg(1000);

void BM_PairInnerProduct(benchmark::State& state) {
    GaussPoly a, b;
    a.poly = Poly::axis_power(2, 0, 3, 1.25) + Poly::axis_power(2, 1, 2, -0.5);
    a.center = {0.3, -0.2};
    a.width_sq = 0.8;
    b.poly = Poly::axis_power(2, 0, 2, 0.75) + Poly::constant(2, 0.1);
    b.center = {-0.5, 0.4};
    b.width_sq = 1.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(inner_product_l2(a, b));
    }
}
BENCHMARK(BM_PairInnerProduct);

void BM_ConstrainedSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) B(i, j) = gauss(rng);
    }
    RonsSystem sys;
    sys.metric = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
    sys.rhs.resize(n);
    sys.constraint_grad.resize(n);
    for (int i = 0; i < n; ++i) {
        sys.rhs(i) = gauss(rng);
        sys.constraint_grad(i) = gauss(rng);
    }
    sys.alpha = 1e-6;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_constrained(sys));
    }
}
BENCHMARK(BM_ConstrainedSolve)->Arg(30)->Arg(120);

void BM_ParticleStepping(benchmark::State& state) {
    const DriftModel drift = problems::duffing_drift(1.0, -0.2, -1.0, 0.3);
    MixtureState init = duffing_state(2);
    normalize_total_probability(init);
    EnsembleSpec spec;
    spec.particles = static_cast<std::size_t>(state.range(0));
    spec.h = 1e-3;
    spec.seed = 3;
    const std::vector<double> times{0.1}; // 100 steps per particle
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_sde(drift, init, 0.0, times, spec));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(spec.particles) * 100);
}
BENCHMARK(BM_ParticleStepping)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
