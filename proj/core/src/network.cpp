#include "loopflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

namespace loopflow {

namespace {

// 1e-9 m^3/h expressed in m^3/s.
constexpr double kDemandBalanceTolerance = 1e-9 / kSecondsPerHour;
// Stored initial patterns come from files printed to two decimals in m^3/h.
constexpr double kInitialFlowTolerance = 1e-6 / kSecondsPerHour;

std::string pipe_name(PipeId id) { return "pipe " + std::to_string(id.value); }
std::string node_name(NodeId id) { return "node " + std::to_string(id.value); }

}  // namespace

FluidSpec FluidSpec::gas(double relative_density, double operating_pressure,
                         double normal_pressure) {
    FluidSpec f;
    f.kind = FluidKind::gas;
    f.relative_density = relative_density;
    f.operating_pressure = operating_pressure;
    f.normal_pressure = normal_pressure;
    return f;
}

FluidSpec FluidSpec::water(double density, double viscosity) {
    FluidSpec f;
    f.kind = FluidKind::water;
    f.density = density;
    f.viscosity = viscosity;
    return f;
}

double FluidSpec::pressure_ratio() const {
    if (kind == FluidKind::water) return 1.0;
    return normal_pressure / operating_pressure;
}

std::string to_string(FluidKind kind) { return kind == FluidKind::gas ? "gas" : "water"; }

Network::Network(NetworkData data)
    : pipes_(std::move(data.pipes)),
      nodes_(std::move(data.nodes)),
      fluid_(data.fluid),
      explicit_loops_(std::move(data.explicit_loops)),
      initial_flows_(std::move(data.initial_flows)) {
    std::stable_sort(pipes_.begin(), pipes_.end(),
                     [](const Pipe& a, const Pipe& b) { return a.id < b.id; });
    std::stable_sort(nodes_.begin(), nodes_.end(),
                     [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < pipes_.size(); ++i) pipe_lookup_.try_emplace(pipes_[i].id.value, i);
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_lookup_.try_emplace(nodes_[i].id.value, i);

    if (data.reference_node) {
        reference_node_ = *data.reference_node;
    } else if (!nodes_.empty()) {
        reference_node_ = nodes_.back().id;
    }

    incidence_.assign(nodes_.size(), {});
    for (std::size_t p = 0; p < pipes_.size(); ++p) {
        auto from = node_index(pipes_[p].from);
        auto to = node_index(pipes_[p].to);
        if (!from || !to) continue;
        incidence_[*from].push_back(p);
        if (*to != *from) incidence_[*to].push_back(p);
    }
}

int Network::independent_loop_count() const {
    return static_cast<int>(pipes_.size()) - static_cast<int>(nodes_.size()) + 1;
}

std::optional<std::size_t> Network::pipe_index(PipeId id) const {
    auto it = pipe_lookup_.find(id.value);
    if (it == pipe_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Network::node_index(NodeId id) const {
    auto it = node_lookup_.find(id.value);
    if (it == node_lookup_.end()) return std::nullopt;
    return it->second;
}

const Pipe& Network::pipe(PipeId id) const {
    auto idx = pipe_index(id);
    if (!idx) throw std::out_of_range("unknown " + pipe_name(id));
    return pipes_[*idx];
}

const NodeSpec& Network::node(NodeId id) const {
    auto idx = node_index(id);
    if (!idx) throw std::out_of_range("unknown " + node_name(id));
    return nodes_[*idx];
}

bool Network::is_connected() const {
    if (nodes_.empty()) return false;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        for (std::size_t p : incidence_[n]) {
            const auto& pipe = pipes_[p];
            const std::size_t other =
                *node_index(pipe.from) == n ? *node_index(pipe.to) : *node_index(pipe.from);
            if (!seen[other]) {
                seen[other] = true;
                ++reached;
                stack.push_back(other);
            }
        }
    }
    return reached == nodes_.size();
}

double Network::total_supply() const {
    double s = 0.0;
    for (const auto& n : nodes_)
        if (n.demand < 0.0) s -= n.demand;
    return s;
}

NetworkData Network::data() const {
    NetworkData d;
    d.pipes = pipes_;
    d.nodes = nodes_;
    d.fluid = fluid_;
    d.explicit_loops = explicit_loops_;
    d.reference_node = reference_node_;
    d.initial_flows = initial_flows_;
    return d;
}

Network Network::with_diameters(const std::vector<double>& diameters) const {
    if (diameters.size() != pipes_.size())
        throw std::invalid_argument("with_diameters: expected one diameter per pipe");
    NetworkData d = data();
    for (std::size_t i = 0; i < d.pipes.size(); ++i) d.pipes[i].diameter = diameters[i];
    return Network(std::move(d));
}

Network Network::with_loops(std::optional<std::vector<SignedLoop>> loops) const {
    NetworkData d = data();
    d.explicit_loops = std::move(loops);
    return Network(std::move(d));
}

Network Network::with_initial_flows(const FlowState& flows) const {
    if (flows.flows.size() != pipes_.size())
        throw std::invalid_argument("with_initial_flows: expected one flow per pipe");
    NetworkData d = data();
    std::vector<std::pair<PipeId, double>> init;
    for (std::size_t i = 0; i < pipes_.size(); ++i) init.emplace_back(pipes_[i].id, flows.flows[i]);
    d.initial_flows = std::move(init);
    return Network(std::move(d));
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "network validation failed:";
          for (const auto& v : violations) os << "\n  " << v.code << ": " << v.message;
          return os.str();
      }()),
      violations_(std::move(violations)) {}

std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string msg) {
        out.push_back({std::move(code), std::move(msg)});
    };

    if (net.nodes().empty()) add("no nodes", "network has no nodes");
    if (net.pipes().empty()) add("no pipes", "network has no pipes");

    for (std::size_t i = 1; i < net.pipes().size(); ++i)
        if (net.pipes()[i].id == net.pipes()[i - 1].id)
            add("duplicate pipe id", pipe_name(net.pipes()[i].id) + " is defined more than once");
    for (std::size_t i = 1; i < net.nodes().size(); ++i)
        if (net.nodes()[i].id == net.nodes()[i - 1].id)
            add("duplicate node id", node_name(net.nodes()[i].id) + " is defined more than once");

    bool endpoints_ok = true;
    for (const auto& p : net.pipes()) {
        if (!(p.diameter > 0.0) || !std::isfinite(p.diameter))
            add("invalid diameter", pipe_name(p.id) + " has non-positive diameter");
        if (!(p.length > 0.0) || !std::isfinite(p.length))
            add("invalid length", pipe_name(p.id) + " has non-positive length");
        if (!(p.roughness >= 0.0) || !std::isfinite(p.roughness))
            add("invalid roughness", pipe_name(p.id) + " has negative roughness");
        if (p.from == p.to) add("self-loop pipe", pipe_name(p.id) + " starts and ends at " + node_name(p.from));
        for (NodeId end : {p.from, p.to}) {
            if (!net.node_index(end)) {
                endpoints_ok = false;
                add("unknown node", pipe_name(p.id) + " references missing " + node_name(end));
            }
        }
    }

    double sum = 0.0;
    for (const auto& n : net.nodes()) {
        if (!std::isfinite(n.demand)) add("invalid demand", node_name(n.id) + " has non-finite demand");
        sum += n.demand;
    }
    if (std::abs(sum) > kDemandBalanceTolerance) {
        std::ostringstream os;
        os << "node demands sum to " << m3s_to_m3h(sum) << " m3/h instead of 0";
        add("unbalanced demands", os.str());
    }

    const auto& f = net.fluid();
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (f.kind == FluidKind::gas) {
        if (!positive(f.relative_density)) add("invalid fluid", "gas relative density must be positive");
        if (!positive(f.operating_pressure)) add("invalid fluid", "gas operating pressure must be positive");
        if (!positive(f.normal_pressure)) add("invalid fluid", "gas normal pressure must be positive");
    } else {
        if (!positive(f.density)) add("invalid fluid", "water density must be positive");
        if (!positive(f.viscosity)) add("invalid fluid", "water viscosity must be positive");
    }

    if (!net.nodes().empty() && !net.node_index(net.reference_node()))
        add("unknown reference node", node_name(net.reference_node()) + " does not exist");

    if (endpoints_ok && !net.nodes().empty() && !net.is_connected())
        add("disconnected", "network graph is not connected");
    if (!net.pipes().empty() && net.independent_loop_count() < 1)
        add("no loops", "network has no independent loops (X - Y + 1 < 1)");

    if (net.explicit_loops()) {
        for (std::size_t l = 0; l < net.explicit_loops()->size(); ++l) {
            const auto& loop = (*net.explicit_loops())[l];
            if (loop.empty()) add("invalid loop", "loop " + std::to_string(l + 1) + " is empty");
            for (const auto& m : loop) {
                if (!net.pipe_index(m.pipe))
                    add("invalid loop", "loop " + std::to_string(l + 1) + " references missing " + pipe_name(m.pipe));
                if (m.sign != 1 && m.sign != -1)
                    add("invalid loop", "loop " + std::to_string(l + 1) + " has a sign other than +1/-1");
            }
        }
    }

    if (net.initial_flows()) {
        std::vector<int> seen(net.pipe_count(), 0);
        bool ok = true;
        for (const auto& [id, q] : *net.initial_flows()) {
            auto idx = net.pipe_index(id);
            if (!idx) {
                ok = false;
                add("invalid initial flows", "initial flow given for missing " + pipe_name(id));
            } else {
                ++seen[*idx];
            }
            if (!std::isfinite(q)) {
                ok = false;
                add("invalid initial flows", "initial flow of " + pipe_name(id) + " is not finite");
            }
        }
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (seen[i] != 1) {
                ok = false;
                add("invalid initial flows", "initial flow of " + pipe_name(net.pipes()[i].id) +
                                                 (seen[i] == 0 ? " is missing" : " is given twice"));
            }
        }
        if (ok && endpoints_ok) {
            FlowState fs{std::vector<double>(net.pipe_count(), 0.0)};
            for (const auto& [id, q] : *net.initial_flows()) fs.flows[*net.pipe_index(id)] = q;
            auto res = node_balance_residuals(net, fs);
            for (std::size_t n = 0; n < res.size(); ++n) {
                if (std::abs(res[n]) > kInitialFlowTolerance) {
                    std::ostringstream os;
                    os << "initial flows violate the balance at " << node_name(net.nodes()[n].id) << " by "
                       << m3s_to_m3h(res[n]) << " m3/h";
                    add("infeasible initial flows", os.str());
                }
            }
        }
    }
    return out;
}

std::vector<double> node_balance_residuals(const Network& net, const FlowState& flows) {
    if (flows.flows.size() != net.pipe_count())
        throw std::invalid_argument("node_balance_residuals: flow vector size mismatch");
    std::vector<double> r(net.node_count(), 0.0);
    for (std::size_t n = 0; n < net.node_count(); ++n) r[n] = -net.nodes()[n].demand;
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        const auto& pipe = net.pipes()[p];
        auto from = net.node_index(pipe.from);
        auto to = net.node_index(pipe.to);
        if (from) r[*from] -= flows.flows[p];
        if (to) r[*to] += flows.flows[p];
    }
    return r;
}

double max_node_imbalance(const Network& net, const FlowState& flows) {
    double m = 0.0;
    for (double r : node_balance_residuals(net, flows)) m = std::max(m, std::abs(r));
    return m;
}

FlowState feasible_initial_flows(const Network& net, std::uint64_t seed) {
    const std::size_t nn = net.node_count();
    const std::size_t np = net.pipe_count();
    if (nn == 0) throw TopologyError("feasible_initial_flows: network has no nodes");

    // Breadth-first spanning tree rooted at the lowest node id; pipes are
    // examined in ascending id, which is the order incidence() stores them in.
    std::vector<std::optional<std::size_t>> parent_pipe(nn);
    std::vector<bool> seen(nn, false);
    std::vector<bool> in_tree(np, false);
    std::vector<std::size_t> order;
    std::queue<std::size_t> queue;
    queue.push(0);
    seen[0] = true;
    while (!queue.empty()) {
        const std::size_t n = queue.front();
        queue.pop();
        order.push_back(n);
        for (std::size_t p : net.incidence()[n]) {
            const auto& pipe = net.pipes()[p];
            const std::size_t a = *net.node_index(pipe.from);
            const std::size_t b = *net.node_index(pipe.to);
            const std::size_t other = a == n ? b : a;
            if (seen[other]) continue;
            seen[other] = true;
            parent_pipe[other] = p;
            in_tree[p] = true;
            queue.push(other);
        }
    }
    if (order.size() != nn) throw TopologyError("feasible_initial_flows: network graph is disconnected");

    FlowState fs{std::vector<double>(np, 0.0)};
    if (seed != 0) {
        double scale = 1.0 / kSecondsPerHour;
        for (const auto& node : net.nodes()) scale = std::max(scale, std::abs(node.demand));
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (std::size_t p = 0; p < np; ++p)
            if (!in_tree[p]) fs.flows[p] = dist(rng);
    }

    // Leaves first: each tree pipe carries whatever its child node still needs.
    std::vector<bool> fixed(np, false);
    for (std::size_t p = 0; p < np; ++p) fixed[p] = !in_tree[p];
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::size_t n = *it;
        if (!parent_pipe[n]) continue;
        double need = net.nodes()[n].demand;
        for (std::size_t p : net.incidence()[n]) {
            if (!fixed[p]) continue;
            const auto& pipe = net.pipes()[p];
            if (*net.node_index(pipe.to) == n) need -= fs.flows[p];
            else need += fs.flows[p];
        }
        const std::size_t tp = *parent_pipe[n];
        fs.flows[tp] = *net.node_index(net.pipes()[tp].to) == n ? need : -need;
        fixed[tp] = true;
    }
    return fs;
}

FlowState initial_flows_or_feasible(const Network& net, std::uint64_t seed) {
    if (!net.initial_flows()) return feasible_initial_flows(net, seed);
    FlowState fs{std::vector<double>(net.pipe_count(), 0.0)};
    for (const auto& [id, q] : *net.initial_flows()) {
        auto idx = net.pipe_index(id);
        if (!idx) throw std::invalid_argument("initial flow given for unknown pipe " + std::to_string(id.value));
        fs.flows[*idx] = q;
    }
    return fs;
}

}  // namespace loopflow
