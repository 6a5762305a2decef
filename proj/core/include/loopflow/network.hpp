#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace loopflow {

// Flows are stored in m^3/s everywhere inside the library. Files and reports
// use m^3/h; convert only at those boundaries.
inline constexpr double kSecondsPerHour = 3600.0;
constexpr double m3h_to_m3s(double m3h) { return m3h / kSecondsPerHour; }
constexpr double m3s_to_m3h(double m3s) { return m3s * kSecondsPerHour; }

template <class Tag>
struct Id {
    int value = 0;
    friend constexpr auto operator<=>(Id, Id) = default;
};

using PipeId = Id<struct PipeTag>;
using NodeId = Id<struct NodeTag>;

struct Pipe {
    PipeId id;
    NodeId from;  // reference orientation: positive flow runs from -> to
    NodeId to;
    double diameter = 0.0;   // m
    double length = 0.0;     // m
    double roughness = 0.0;  // m, absolute
};

struct NodeSpec {
    NodeId id;
    double demand = 0.0;  // m^3/s, consumption positive, supply negative
};

enum class FluidKind { gas, water };

struct FluidSpec {
    FluidKind kind = FluidKind::gas;
    double relative_density = 0.0;    // gas only, dimensionless
    double density = 0.0;             // water only, kg/m^3
    double viscosity = 0.0;           // water only, Pa*s
    double operating_pressure = 0.0;  // Pa absolute
    double normal_pressure = 0.0;     // Pa

    static FluidSpec gas(double relative_density, double operating_pressure = 4.0e5,
                         double normal_pressure = 1.0e5);
    static FluidSpec water(double density = 1000.0, double viscosity = 0.00089);

    /// p_n / p_a for gas (converts normal-condition flow to actual), 1 for water.
    double pressure_ratio() const;
};

/// One entry of a signed loop: the pipe and whether the loop traverses it
/// along (+1) or against (-1) its reference orientation.
struct LoopMember {
    PipeId pipe;
    int sign = 1;
    friend bool operator==(const LoopMember&, const LoopMember&) = default;
};
using SignedLoop = std::vector<LoopMember>;

/// Signed flow per pipe, indexed in the owning network's pipe order.
struct FlowState {
    std::vector<double> flows;  // m^3/s, positive along reference orientation
    friend bool operator==(const FlowState&, const FlowState&) = default;
};

struct NetworkData {
    std::vector<Pipe> pipes;
    std::vector<NodeSpec> nodes;
    FluidSpec fluid;
    std::optional<std::vector<SignedLoop>> explicit_loops;
    std::optional<NodeId> reference_node;  // defaults to the highest node id
    std::optional<std::vector<std::pair<PipeId, double>>> initial_flows;  // m^3/s
};

/// Immutable pipe network. Pipes and nodes are kept sorted by id; every dense
/// vector or matrix column in the library follows that order.
///
/// Construction never rejects a malformed network; call validate() to get the
/// list of problems. Lookups on unknown ids return std::nullopt.
class Network {
public:
    explicit Network(NetworkData data);

    const std::vector<Pipe>& pipes() const { return pipes_; }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const FluidSpec& fluid() const { return fluid_; }
    const std::optional<std::vector<SignedLoop>>& explicit_loops() const { return explicit_loops_; }
    NodeId reference_node() const { return reference_node_; }
    const std::optional<std::vector<std::pair<PipeId, double>>>& initial_flows() const {
        return initial_flows_;
    }

    std::size_t pipe_count() const { return pipes_.size(); }
    std::size_t node_count() const { return nodes_.size(); }
    /// X - Y + 1 for a connected graph.
    int independent_loop_count() const;

    std::optional<std::size_t> pipe_index(PipeId id) const;
    std::optional<std::size_t> node_index(NodeId id) const;
    const Pipe& pipe(PipeId id) const;
    const NodeSpec& node(NodeId id) const;

    /// Pipe indices touching each node (in ascending pipe id), by node index.
    /// Pipes whose endpoints are unknown are skipped.
    const std::vector<std::vector<std::size_t>>& incidence() const { return incidence_; }

    bool is_connected() const;
    double total_supply() const;  // m^3/s, sum of negative demands as a positive number

    /// Copy with the same topology but different pipe diameters (pipe order).
    Network with_diameters(const std::vector<double>& diameters) const;
    /// Copy with a different explicit loop set (nullopt drops it).
    Network with_loops(std::optional<std::vector<SignedLoop>> loops) const;
    Network with_initial_flows(const FlowState& flows) const;

    NetworkData data() const;

private:
    std::vector<Pipe> pipes_;
    std::vector<NodeSpec> nodes_;
    FluidSpec fluid_;
    std::optional<std::vector<SignedLoop>> explicit_loops_;
    NodeId reference_node_;
    std::optional<std::vector<std::pair<PipeId, double>>> initial_flows_;
    std::unordered_map<int, std::size_t> pipe_lookup_;
    std::unordered_map<int, std::size_t> node_lookup_;
    std::vector<std::vector<std::size_t>> incidence_;
};

struct Violation {
    std::string code;     // short machine-readable tag, e.g. "unbalanced demands"
    std::string message;  // names the offending element
};

std::vector<Violation> validate(const Network& net);

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-node mismatch between signed pipe flows and demand (m^3/s), node order.
/// Inflow minus outflow minus demand; zero for every node when the first
/// Kirchhoff law holds.
std::vector<double> node_balance_residuals(const Network& net, const FlowState& flows);
double max_node_imbalance(const Network& net, const FlowState& flows);

/// A flow pattern satisfying every node balance. Seed 0 puts zero flow on the
/// link pipes of a spanning tree; other seeds draw link flows at random. The
/// tree pipes are then solved from the leaves inwards. Ignores any initial
/// flows stored in the network (see initial_flows_or_feasible).
///
/// Throws TopologyError when the graph is disconnected.
FlowState feasible_initial_flows(const Network& net, std::uint64_t seed = 0);

/// The network's stored initial pattern if it has one, otherwise
/// feasible_initial_flows(net, seed).
FlowState initial_flows_or_feasible(const Network& net, std::uint64_t seed = 0);

std::string to_string(FluidKind kind);

}  // namespace loopflow

template <class Tag>
struct std::hash<loopflow::Id<Tag>> {
    std::size_t operator()(loopflow::Id<Tag> id) const noexcept {
        return std::hash<int>{}(id.value);
    }
};
