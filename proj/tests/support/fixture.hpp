#pragma once

// Shared test data: the 15-pipe / 11-node fixture network, values printed in
// the reference analysis tables, and independent oracles used by several
// suites (brute-force balances, exact rank, finite differences).

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "loopflow/io.hpp"
#include "loopflow/network.hpp"

namespace loopflow::testing {

inline std::filesystem::path data_dir() { return LOOPFLOW_DATA_DIR; }
inline Network gas_fixture() { return parse_network(data_dir() / "fixture_gas.json"); }
inline Network water_fixture() { return parse_network(data_dir() / "fixture_water.json"); }

// ---------------------------------------------------------------------------
// Per-pipe loop analysis at the initial flows. Q and F carry the loop sign as
// printed (s * Q, s * sign(Q) * F); dF is |F'|.
struct LoopRow {
    int loop;  // 1-based
    int pipe;
    double q;  // m^3/s
    double F;
    double dF;
};

inline const std::vector<LoopRow>& gas_loop_table() {
    static const std::vector<LoopRow> rows = {
        {1, 1, 0.0556, 114959, 3766062},          {1, 2, -0.0694, -690438, 18094990},
        {1, 3, -0.5667, -889949040, 2858306918},  {1, 4, 0.6389, 39193885, 111651451},
        {2, 5, 0.0778, 23969880, 560895181},      {2, 6, -0.0139, -73795, 9670144},
        {2, 11, -0.0556, -12993101, 425654001},   {2, 12, -0.0833, -27176838, 593542132},
        {2, 2, 0.0694, 690438, 18094990},         {3, 7, 0.0083, 411338, 89836237},
        {3, 8, -0.0389, -6788773, 317714556},     {3, 9, 0.1139, 1698792, 27147529},
        {3, 10, 0.0361, 5932191, 298982433},      {3, 6, 0.0139, 73795, 9670144},
        {4, 3, 0.5667, 889949040, 2858306918},    {4, 12, 0.0833, 27176838, 593542132},
        {4, 13, -0.0278, -3679919, 241108279},    {4, 14, -0.7222, -12243919, 30854675},
        {5, 15, 0.3889, 897059511, 4198238510},   {5, 9, 0.1139, 1698792, 27147529},
        {5, 10, 0.0361, 5932191, 298982433},      {5, 11, -0.0556, -12993101, 425654001},
        {5, 12, -0.0833, -27176838, 593542132},
    };
    return rows;
}
inline constexpr std::array<double, 5> kGasLoopSums = {-851330634, -15583417, 1327344, 901202040, 864520555};

struct WaterRow {
    int loop;
    int pipe;
    double reynolds;
    double lambda;
    double F;   // signed as printed
    double dF;  // |F'|
};

inline const std::vector<WaterRow>& water_loop_table() {
    static const std::vector<WaterRow> rows = {
        {1, 1, 195566.25, 0.01609, 363.1919278, 13074.9094},
        {1, 2, 325943.75, 0.01492, -2217.677686, 63869.11737},
        {1, 3, 5319401.99, 0.01290, -4084603.502, 14416247.66},
        {1, 4, 2998682.50, 0.01184, 148932.0282, 466222.0014},
        {2, 5, 730114.00, 0.01423, 84860.18126, 2182118.947},
        {2, 6, 65188.75, 0.01998, -237.4945042, 34199.2086},
        {2, 11, 521510.00, 0.01470, -44732.90001, 1610384.4},
        {2, 12, 782265.00, 0.01414, -96832.35986, 2323976.637},
        {2, 2, 325943.75, 0.01492, 2217.677686, 63869.11737},
        {3, 7, 78226.50, 0.01954, 1338.024663, 321125.9191},
        {3, 8, 365057.00, 0.01531, -22830.90776, 1174160.971},
        {3, 9, 534547.75, 0.01391, 5557.748158, 97599.47985},
        {3, 10, 338981.50, 0.01545, 19868.97118, 1100435.327},
        {3, 6, 65188.75, 0.01998, 237.4945042, 34199.2086},
        {4, 3, 5319401.99, 0.01290, 4084603.502, 14416247.66},
        {4, 12, 782265.00, 0.01414, 96832.35986, 2323976.637},
        {4, 13, 260755.00, 0.01600, -12174.73104, 876580.635},
        {4, 14, 2542361.25, 0.01157, -44129.48853, 122204.7375},
        {5, 15, 3650569.99, 0.01302, 3882751.322, 19968435.37},
        {5, 9, 534547.75, 0.01391, 5557.748158, 97599.47985},
        {5, 10, 338981.50, 0.01545, 19868.97118, 1100435.327},
        {5, 11, 521510.00, 0.01470, -44732.90001, 1610384.4},
        {5, 12, 782265.00, 0.01414, -96832.35986, 2323976.637},
    };
    return rows;
}
inline constexpr std::array<double, 5> kWaterLoopSums = {-3937526, -54725, 4171, 4125132, 3766613};

// ---------------------------------------------------------------------------
// Iteration traces (m^3/h), signs relative to the previous column's direction.
// Row = pipe 1..15, column = state.
inline const std::vector<std::vector<double>>& gas_trace_table() {
    static const std::vector<std::vector<double>> t = {
        {200, 687.38, 1172.23, 1225.74, 1228.19, 1228.19},
        {250, 33.55, -307.01, 360.38, 362.80, 362.80},
        {2040, 988.81, 618.87, 550.48, 547.68, 547.68},
        {2300, 2787.38, 3272.23, 3325.74, 3328.19, 3328.19},
        {280, 550.93, 695.22, 695.36, 695.39, 695.39},
        {50, 78.54, -60.99, 50.63, 50.73, 50.73},
        {30, 329.48, 334.23, 344.74, 344.66, 344.66},
        {140, -159.48, 164.23, 174.74, 174.66, 174.66},
        {410, 20.26, -121.61, 115.19, 115.28, 115.28},
        {130, -259.74, 401.61, 395.19, 395.28, 395.28},
        {200, 618.28, 620.62, 624.57, 624.55, 624.55},
        {300, 154.48, 271.72, 260.79, 260.43, 260.43},
        {100, 663.80, 548.90, 563.78, 564.13, 564.13},
        {2600, 3163.80, 3048.90, 3063.78, 3064.13, 3064.13},
        {1400, 710.78, 564.16, 560.07, 560.05, 560.05},
    };
    return t;
}
inline constexpr std::array<double, 15> kGasVelocities = {0.66, 0.35, 2.08, 3.17, 2.65, 0.05, 1.31, 0.66,
                                                          0.11, 1.50, 2.38, 0.99, 2.15, 1.64, 2.13};

inline const std::vector<std::vector<double>>& water_trace_table() {
    static const std::vector<std::vector<double>> t = {
        {200, 619.22, 1117.82, 1205.89, 1214.92, 1215.25, 1215.26},
        {250, 69.21, -260.68, 345.80, 354.68, 355.00, 355.01},
        {2040, 1071.47, 671.88, 567.12, 556.60, 556.22, 556.21},
        {2300, 2719.22, 3217.82, 3305.89, 3314.92, 3315.25, 3315.26},
        {280, 518.43, 687.14, 690.09, 690.24, 690.25, 690.25},
        {50, 90.95, -57.70, 43.41, 43.11, 43.10, 43.10},
        {30, 309.38, 329.44, 346.68, 347.13, 347.15, 347.15},
        {140, -139.38, 159.44, 176.68, 177.13, 177.15, 177.15},
        {410, 47.60, -115.49, 113.24, 113.39, 113.39, 113.39},
        {130, -232.40, 395.49, 393.24, 393.39, 393.39, 393.39},
        {200, 603.35, 617.79, 629.83, 630.28, 630.29, 630.29},
        {300, 154.04, 267.49, 262.84, 261.80, 261.76, 261.76},
        {100, 649.31, 550.30, 566.99, 568.48, 568.53, 568.54},
        {2600, 3149.31, 3050.30, 3066.99, 3068.48, 3068.53, 3068.54},
        {1400, 758.22, 575.07, 560.08, 559.48, 559.46, 559.46},
    };
    return t;
}
inline constexpr std::array<double, 15> kWaterVelocities = {2.6, 1.4, 8.5, 12.6, 10.5, 0.2, 5.3, 2.7,
                                                            0.4, 6.0, 9.6, 4.0, 8.7, 6.6, 8.5};

// The reference traces print the state after the last update twice; the final
// column equals the converged state.
inline constexpr std::array<int, 5> kGasReversedPipes = {2, 6, 8, 9, 10};

// ---------------------------------------------------------------------------
// Oracles

/// Per-node (inflow - outflow - demand), summed pipe by pipe from the raw
/// endpoint ids. Independent of the library's incidence bookkeeping.
inline std::vector<double> brute_force_node_residuals(const Network& net, const FlowState& flows) {
    std::vector<double> r;
    for (const auto& node : net.nodes()) {
        double sum = -node.demand;
        for (std::size_t p = 0; p < net.pipe_count(); ++p) {
            if (net.pipes()[p].to == node.id) sum += flows.flows[p];
            if (net.pipes()[p].from == node.id) sum -= flows.flows[p];
        }
        r.push_back(sum);
    }
    return r;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Exact rank of a small integer matrix by fraction-free (Bareiss) elimination.
inline int exact_rank(std::vector<std::vector<std::int64_t>> a) {
    const std::size_t rows = a.size();
    if (rows == 0) return 0;
    const std::size_t cols = a[0].size();
    std::int64_t prev = 1;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t pivot = rank;
        while (pivot < rows && a[pivot][c] == 0) ++pivot;
        if (pivot == rows) continue;
        std::swap(a[pivot], a[rank]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            for (std::size_t k = c + 1; k < cols; ++k)
                a[r][k] = (a[r][k] * a[rank][c] - a[r][c] * a[rank][k]) / prev;
            a[r][c] = 0;
        }
        prev = a[rank][c];
        ++rank;
    }
    return static_cast<int>(rank);
}

template <class F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Random connected networks: a random spanning tree plus `extra` link pipes
// (no parallel pipes), node 1 supplies everything the others consume.
inline Network random_network(std::mt19937_64& rng, int nodes, int extra, FluidSpec fluid) {
    std::uniform_real_distribution<double> diam(0.1, 0.4);
    std::uniform_real_distribution<double> len(50.0, 400.0);
    std::uniform_real_distribution<double> demand(20.0, 400.0);  // m^3/h
    NetworkData d;
    d.fluid = fluid;
    std::vector<std::vector<bool>> linked(static_cast<std::size_t>(nodes + 1),
                                          std::vector<bool>(static_cast<std::size_t>(nodes + 1), false));
    int pid = 1;
    auto add_pipe = [&](int a, int b) {
        if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
        d.pipes.push_back({PipeId{pid++}, NodeId{a}, NodeId{b}, diam(rng), len(rng), 2e-5});
        linked[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
        linked[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
    };
    for (int n = 2; n <= nodes; ++n) add_pipe(std::uniform_int_distribution<int>(1, n - 1)(rng), n);
    int added = 0;
    for (int attempts = 0; added < extra && attempts < 1000; ++attempts) {
        const int a = std::uniform_int_distribution<int>(1, nodes)(rng);
        const int b = std::uniform_int_distribution<int>(1, nodes)(rng);
        if (a == b || linked[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) continue;
        add_pipe(a, b);
        ++added;
    }
    double total = 0.0;
    for (int n = 2; n <= nodes; ++n) {
        const double q = std::round(demand(rng));
        total += q;
        d.nodes.push_back({NodeId{n}, m3h_to_m3s(q)});
    }
    d.nodes.push_back({NodeId{1}, -m3h_to_m3s(total)});
    return Network(std::move(d));
}

}  // namespace loopflow::testing
