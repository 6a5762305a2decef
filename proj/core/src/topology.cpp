#include "loopflow/topology.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <queue>
#include <string>

namespace loopflow {

namespace {

struct SpanningTree {
    std::vector<std::optional<std::size_t>> parent_pipe;  // by node index
    std::vector<std::size_t> depth;
    std::vector<bool> in_tree;  // by pipe index
};

std::size_t other_end(const Network& net, std::size_t pipe, std::size_t node) {
    const auto& p = net.pipes()[pipe];
    const std::size_t a = *net.node_index(p.from);
    return a == node ? *net.node_index(p.to) : a;
}

SpanningTree bfs_tree(const Network& net) {
    const std::size_t nn = net.node_count();
    SpanningTree t{std::vector<std::optional<std::size_t>>(nn), std::vector<std::size_t>(nn, 0),
                   std::vector<bool>(net.pipe_count(), false)};
    if (nn == 0) throw TopologyError("network has no nodes");
    std::vector<bool> seen(nn, false);
    std::queue<std::size_t> queue;
    queue.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!queue.empty()) {
        const std::size_t n = queue.front();
        queue.pop();
        for (std::size_t p : net.incidence()[n]) {
            const std::size_t other = other_end(net, p, n);
            if (seen[other]) continue;
            seen[other] = true;
            ++reached;
            t.parent_pipe[other] = p;
            t.depth[other] = t.depth[n] + 1;
            t.in_tree[p] = true;
            queue.push(other);
        }
    }
    if (reached != nn) throw TopologyError("network graph is disconnected");
    return t;
}

int matrix_rank(const Eigen::MatrixXi& m) {
    if (m.size() == 0) return 0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m.cast<double>());
    return static_cast<int>(lu.rank());
}

}  // namespace

NodeMatrix build_node_matrix(const Network& net) {
    NodeMatrix nm;
    for (const auto& n : net.nodes())
        if (n.id != net.reference_node()) nm.row_nodes.push_back(n.id);
    nm.entries = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(nm.row_nodes.size()),
                                       static_cast<Eigen::Index>(net.pipe_count()));
    for (Eigen::Index r = 0; r < nm.entries.rows(); ++r) {
        const NodeId node = nm.row_nodes[static_cast<std::size_t>(r)];
        for (std::size_t p = 0; p < net.pipe_count(); ++p) {
            const auto& pipe = net.pipes()[p];
            if (pipe.from == node) nm.entries(r, static_cast<Eigen::Index>(p)) -= 1;
            if (pipe.to == node) nm.entries(r, static_cast<Eigen::Index>(p)) += 1;
        }
    }
    return nm;
}

Eigen::MatrixXi loop_matrix(const Network& net, const std::vector<SignedLoop>& loops) {
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(loops.size()),
                                              static_cast<Eigen::Index>(net.pipe_count()));
    for (std::size_t l = 0; l < loops.size(); ++l) {
        for (const auto& member : loops[l]) {
            auto idx = net.pipe_index(member.pipe);
            if (!idx) throw TopologyError("loop " + std::to_string(l + 1) + " references unknown pipe " +
                                          std::to_string(member.pipe.value));
            m(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(*idx)) = member.sign;
        }
    }
    return m;
}

LoopBasis derive_loop_basis(const Network& net) {
    for (const auto& p : net.pipes())
        if (!net.node_index(p.from) || !net.node_index(p.to))
            throw TopologyError("pipe " + std::to_string(p.id.value) + " references an unknown node");
    const SpanningTree tree = bfs_tree(net);

    LoopBasis basis;
    for (std::size_t link = 0; link < net.pipe_count(); ++link) {
        if (tree.in_tree[link]) continue;
        const auto& lp = net.pipes()[link];
        // The loop runs along the link (from -> to) and returns through the tree
        // from `to` back to `from`.
        SignedLoop loop{{lp.id, 1}};
        std::size_t a = *net.node_index(lp.to);    // walk start (leaving towards the LCA)
        std::size_t b = *net.node_index(lp.from);  // walk end (arriving from the LCA)
        SignedLoop tail;
        while (a != b) {
            if (tree.depth[a] >= tree.depth[b]) {
                const std::size_t p = *tree.parent_pipe[a];
                const auto& pipe = net.pipes()[p];
                // traversing a -> parent(a)
                loop.push_back({pipe.id, *net.node_index(pipe.from) == a ? 1 : -1});
                a = other_end(net, p, a);
            } else {
                const std::size_t p = *tree.parent_pipe[b];
                const auto& pipe = net.pipes()[p];
                // traversing parent(b) -> b
                tail.push_back({pipe.id, *net.node_index(pipe.to) == b ? 1 : -1});
                b = other_end(net, p, b);
            }
        }
        loop.insert(loop.end(), tail.rbegin(), tail.rend());
        basis.loops.push_back(std::move(loop));
    }
    basis.signs = loop_matrix(net, basis.loops);
    return basis;
}

LoopBasis adopt_explicit_loops(const Network& net) {
    if (!net.explicit_loops()) throw TopologyError("network has no explicit loops");
    const auto& loops = *net.explicit_loops();
    const int expected = net.independent_loop_count();
    if (static_cast<int>(loops.size()) != expected)
        throw TopologyError("wrong loop count: got " + std::to_string(loops.size()) + ", expected " +
                            std::to_string(expected));

    for (std::size_t l = 0; l < loops.size(); ++l) {
        const std::string name = "loop " + std::to_string(l + 1);
        const auto& loop = loops[l];
        if (loop.size() < 2) throw TopologyError("non-cycle: " + name + " has fewer than two pipes");

        std::vector<int> degree(net.node_count(), 0);
        std::vector<int> circulation(net.node_count(), 0);
        std::vector<bool> used(net.pipe_count(), false);
        for (const auto& m : loop) {
            auto idx = net.pipe_index(m.pipe);
            if (!idx) throw TopologyError("non-cycle: " + name + " references unknown pipe " +
                                          std::to_string(m.pipe.value));
            if (m.sign != 1 && m.sign != -1) throw TopologyError("non-cycle: " + name + " has a sign other than +1/-1");
            if (used[*idx]) throw TopologyError("non-cycle: " + name + " lists pipe " +
                                                std::to_string(m.pipe.value) + " twice");
            used[*idx] = true;
            const auto& pipe = net.pipes()[*idx];
            const std::size_t from = *net.node_index(pipe.from);
            const std::size_t to = *net.node_index(pipe.to);
            ++degree[from];
            ++degree[to];
            circulation[from] -= m.sign;
            circulation[to] += m.sign;
        }
        for (std::size_t n = 0; n < net.node_count(); ++n) {
            if (degree[n] != 0 && degree[n] != 2)
                throw TopologyError("non-cycle: " + name + " is not a simple closed path at node " +
                                    std::to_string(net.nodes()[n].id.value));
            if (circulation[n] != 0)
                throw TopologyError("non-cycle: " + name + " has inconsistent signs at node " +
                                    std::to_string(net.nodes()[n].id.value));
        }
        // Degree two everywhere may still be several disjoint cycles.
        std::size_t start = 0;
        while (degree[start] == 0) ++start;
        std::vector<bool> seen(net.node_count(), false);
        std::vector<std::size_t> stack{start};
        seen[start] = true;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const std::size_t n = stack.back();
            stack.pop_back();
            for (std::size_t p : net.incidence()[n]) {
                if (!used[p]) continue;
                const std::size_t o = other_end(net, p, n);
                if (!seen[o]) {
                    seen[o] = true;
                    ++reached;
                    stack.push_back(o);
                }
            }
        }
        const auto touched = static_cast<std::size_t>(std::count_if(degree.begin(), degree.end(), [](int d) { return d > 0; }));
        if (reached != touched) throw TopologyError("non-cycle: " + name + " is not a single connected cycle");
    }

    LoopBasis basis{loops, loop_matrix(net, loops)};
    if (matrix_rank(basis.signs) != expected) throw TopologyError("rank-deficient: explicit loops are not independent");
    return basis;
}

LoopBasis loop_basis_for(const Network& net) {
    return net.explicit_loops() ? adopt_explicit_loops(net) : derive_loop_basis(net);
}

}  // namespace loopflow
