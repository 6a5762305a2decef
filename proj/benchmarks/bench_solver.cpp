#include <benchmark/benchmark.h>

#include <random>

#include "loopflow/sizing.hpp"
#include "loopflow/solver.hpp"
#include "support/fixture.hpp"

using namespace loopflow;

namespace {

void solve_fixture(benchmark::State& state, Method method, bool water) {
    const Network net = water ? loopflow::testing::water_fixture() : loopflow::testing::gas_fixture();
    SolverConfig config;
    config.method = method;
    config.max_iterations = 500;
    int iterations = 0;
    for (auto _ : state) {
        const SolveReport r = solve(net, config);
        iterations = r.iteration_count();
        benchmark::DoNotOptimize(r.final_flows().flows.data());
    }
    state.counters["iterations"] = iterations;
}

// Networks of range(0) nodes with about half as many extra links.
void solve_random(benchmark::State& state, Method method) {
    std::mt19937_64 rng(2024);
    const int nodes = static_cast<int>(state.range(0));
    const Network net = loopflow::testing::random_network(rng, nodes, nodes / 2, FluidSpec::gas(0.6));
    SolverConfig config;
    config.method = method;
    config.max_iterations = 5000;
    for (auto _ : state) {
        const SolveReport r = solve(net, config);
        benchmark::DoNotOptimize(r.final_flows().flows.data());
    }
}

void size_fixture(benchmark::State& state) {
    const Network balanced = loopflow::testing::gas_fixture();
    const FlowState flows = solve(balanced, SolverConfig{}).final_flows();
    std::vector<double> d;
    for (const auto& p : balanced.pipes()) d.push_back(p.diameter * 1.1);
    const Network net = balanced.with_diameters(d);
    const LoopBasis basis = loop_basis_for(net);
    SizingConfig config;
    config.fixed_flows = flows;
    for (auto _ : state) {
        const SizingReport r = optimize_diameters(net, basis, config);
        benchmark::DoNotOptimize(r.diameters.data());
    }
}

}  // namespace

BENCHMARK_CAPTURE(solve_fixture, gas_node_loop, Method::node_loop, false);
BENCHMARK_CAPTURE(solve_fixture, gas_hardy_cross, Method::hardy_cross, false);
BENCHMARK_CAPTURE(solve_fixture, gas_hardy_cross_improved, Method::hardy_cross_improved, false);
BENCHMARK_CAPTURE(solve_fixture, water_node_loop, Method::node_loop, true);
BENCHMARK_CAPTURE(solve_fixture, water_hardy_cross_improved, Method::hardy_cross_improved, true);
BENCHMARK_CAPTURE(solve_random, node_loop, Method::node_loop)->RangeMultiplier(2)->Range(16, 128);
BENCHMARK_CAPTURE(solve_random, hardy_cross_improved, Method::hardy_cross_improved)->RangeMultiplier(2)->Range(16, 128);
BENCHMARK(size_fixture);
BENCHMARK_MAIN();
