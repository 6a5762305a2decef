#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopflow/friction.hpp"
#include "loopflow/network.hpp"
#include "loopflow/numerics.hpp"
#include "loopflow/topology.hpp"

namespace loopflow {

enum class Method {
    node_loop,             // all pipe flows solved directly each iteration
    hardy_cross,           // independent per-loop corrections
    hardy_cross_improved,  // simultaneous loop corrections
};

enum class Termination { converged, max_iterations, singular_system };

std::string to_string(Method method);
std::string to_string(Termination termination);
std::optional<Method> parse_method(const std::string& name);

struct PressureSource {
    NodeId node;
    double pressure = 4.0e5;  // Pa absolute
};

struct SolverConfig {
    Method method = Method::node_loop;
    double flow_tolerance = 0.01;               // m^3/h, largest per-pipe change between iterates
    std::optional<double> residual_tolerance;   // Pa^2 (gas) or Pa (water); fluid default if unset
    int max_iterations = 50;
    double derivative_flow_floor = 1e-7;        // m^3/s
    bool damping = false;
    std::uint64_t seed = 0;                     // used only when no initial flows are available
    std::optional<FlowState> initial_flows;     // overrides the network's stored pattern
    std::optional<PressureSource> pressure_source;
};

double default_residual_tolerance(FluidKind kind);

/// Loop sums and per-pipe pressure functions for one flow state.
struct LoopEval {
    std::vector<double> loop_sums;      // signed sum of F around each loop
    std::vector<double> pressure_drop;  // F(|Q|) per pipe
    std::vector<double> derivative;     // |F'| per pipe, at max(|Q|, floor)

    double max_abs_loop_sum() const;
};

LoopEval evaluate_loops(const Network& net, const FluidModel& model, const LoopBasis& basis,
                        const FlowState& flows, double derivative_flow_floor = 1e-7);

/// Node rows (reduced incidence, rhs = demand) stacked over linearised loop
/// rows (s * |F'| per pipe, rhs = -sum F + sum s * Q * |F'|).
DenseSystem assemble_node_loop_system(const Network& net, const NodeMatrix& node_matrix,
                                      const LoopBasis& basis, const FlowState& flows,
                                      const LoopEval& loop_eval);

struct SolveReport {
    Method method = Method::node_loop;
    std::vector<FlowState> iterations;                // initial state first
    std::vector<std::vector<double>> loop_residuals;  // |sum F| per loop, per state
    Termination termination = Termination::max_iterations;
    std::vector<double> velocities;                   // m/s, final state, pipe order
    std::map<NodeId, double> node_pressures;          // Pa, filled when a source is configured
    std::optional<std::string> pressure_error;
    std::vector<double> condition_estimates;          // node-loop only, one per solve
    std::vector<int> damped_iterations;
    double residual_tolerance = 0.0;

    const FlowState& final_flows() const { return iterations.back(); }
    /// Number of updates performed (states minus the initial one).
    int iteration_count() const { return static_cast<int>(iterations.size()) - 1; }
    double final_max_residual() const;
};

SolveReport solve_node_loop(const Network& net, const SolverConfig& config);
SolveReport solve_hardy_cross_original(const Network& net, const SolverConfig& config);
SolveReport solve_hardy_cross_improved(const Network& net, const SolverConfig& config);
/// Dispatches on config.method.
SolveReport solve(const Network& net, const SolverConfig& config);

/// Loop corrections of one Hardy Cross step (m^3/s per loop). `simultaneous`
/// selects the improved variant. Throws SingularSystemError on a degenerate
/// loop Jacobian.
std::vector<double> hardy_cross_corrections(const LoopBasis& basis, const LoopEval& loop_eval,
                                            bool simultaneous);

class InfeasiblePressureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Node pressures by breadth-first traversal from the source (ties by
/// ascending node id). Gas works in squared pressure, water in pressure.
/// Throws InfeasiblePressureError if a squared pressure turns negative.
std::map<NodeId, double> propagate_pressures(const Network& net, const FluidModel& model,
                                             const FlowState& flows, NodeId source_node,
                                             double source_pressure);

}  // namespace loopflow
