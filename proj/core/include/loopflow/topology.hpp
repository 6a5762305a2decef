#pragma once

#include <Eigen/Core>
#include <vector>

#include "loopflow/network.hpp"

namespace loopflow {

/// Reduced node-incidence matrix: one row per node except the reference node
/// (ascending node id), one column per pipe (network pipe order). Entry -1
/// where the pipe's reference orientation leaves the node, +1 where it enters.
struct NodeMatrix {
    std::vector<NodeId> row_nodes;
    Eigen::MatrixXi entries;
};

/// Independent loop set. `loops` keeps each loop's members in the order they
/// were supplied (or traversed); `signs` is the dense loops x pipes matrix.
struct LoopBasis {
    std::vector<SignedLoop> loops;
    Eigen::MatrixXi signs;

    std::size_t size() const { return loops.size(); }
};

NodeMatrix build_node_matrix(const Network& net);

/// Fundamental cycle basis of a breadth-first spanning tree rooted at the
/// lowest node id, pipes taken in ascending id. Each link pipe (not in the
/// tree) closes one loop and carries sign +1 in it. Links are processed in
/// ascending pipe id, so the basis is deterministic.
///
/// Throws TopologyError on a disconnected graph.
LoopBasis derive_loop_basis(const Network& net);

/// Checks the network's explicit loops and returns them as a basis. Every loop
/// must be a simple closed cycle whose signs describe a circulation; the set
/// must have X - Y + 1 members and full rank.
///
/// Throws TopologyError ("non-cycle", "wrong loop count", "rank-deficient").
LoopBasis adopt_explicit_loops(const Network& net);

/// adopt_explicit_loops when the network carries loops, else derive_loop_basis.
LoopBasis loop_basis_for(const Network& net);

/// Builds the dense sign matrix for a list of loops (pipe ids must exist).
Eigen::MatrixXi loop_matrix(const Network& net, const std::vector<SignedLoop>& loops);

}  // namespace loopflow
