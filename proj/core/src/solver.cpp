#include "loopflow/solver.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <queue>

namespace loopflow {

namespace {

constexpr double kMinLoopDerivativeSum = 1e-30;
constexpr double kDampingTrigger = 10.0;
constexpr int kMaxBisections = 30;
// Hardy Cross variants require a feasible start; tolerance in m^3/s.
constexpr double kFeasibilityTolerance = 1e-6 / kSecondsPerHour;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::vector<double> abs_values(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::abs(x); });
    return out;
}

double max_change(const FlowState& a, const FlowState& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.flows.size(); ++i) m = std::max(m, std::abs(a.flows[i] - b.flows[i]));
    return m;
}

// Slope of the network content sum_p integral F dQ along the segment from
// `from` to `to`, evaluated at `at` (defaults to `to`). Its gradient is the
// signed pressure drop per pipe.
double content_slope(const FlowState& from, const FlowState& to, const LoopEval& at_eval,
                     const FlowState* at = nullptr) {
    const FlowState& point = at ? *at : to;
    double slope = 0.0;
    for (std::size_t i = 0; i < from.flows.size(); ++i)
        slope += (to.flows[i] - from.flows[i]) * sign_of(point.flows[i]) * at_eval.pressure_drop[i];
    return slope;
}

struct Context {
    const Network& net;
    const SolverConfig& config;
    std::unique_ptr<FluidModel> model;
    LoopBasis basis;
    NodeMatrix node_matrix;
};

FlowState node_loop_step(Context& ctx, const FlowState& q, const LoopEval& ev, SolveReport& report) {
    DenseSystem sys = assemble_node_loop_system(ctx.net, ctx.node_matrix, ctx.basis, q, ev);
    report.condition_estimates.push_back(condition_estimate(sys));
    Eigen::VectorXd x = solve_linear(sys);
    return FlowState{std::vector<double>(x.data(), x.data() + x.size())};
}

FlowState hardy_cross_step(Context& ctx, const FlowState& q, const LoopEval& ev, bool simultaneous) {
    const std::vector<double> delta = hardy_cross_corrections(ctx.basis, ev, simultaneous);
    FlowState next = q;
    for (Eigen::Index l = 0; l < ctx.basis.signs.rows(); ++l)
        for (Eigen::Index p = 0; p < ctx.basis.signs.cols(); ++p)
            next.flows[static_cast<std::size_t>(p)] += ctx.basis.signs(l, p) * delta[static_cast<std::size_t>(l)];
    return next;
}

SolveReport run(const Network& net, const SolverConfig& config, Method method) {
    if (config.max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be at least 1");
    if (!(config.flow_tolerance > 0.0)) throw std::invalid_argument("solver: flow tolerance must be positive");
    if (config.residual_tolerance && !(*config.residual_tolerance > 0.0))
        throw std::invalid_argument("solver: residual tolerance must be positive");
    if (auto violations = validate(net); !violations.empty()) throw ValidationError(std::move(violations));

    Context ctx{net, config, make_fluid_model(net.fluid()), loop_basis_for(net), build_node_matrix(net)};

    FlowState q = config.initial_flows ? *config.initial_flows : initial_flows_or_feasible(net, config.seed);
    if (q.flows.size() != net.pipe_count()) throw std::invalid_argument("solver: initial flow vector size mismatch");
    if (method != Method::node_loop && max_node_imbalance(net, q) > kFeasibilityTolerance)
        throw std::invalid_argument("solver: initial flows violate node balances");

    SolveReport report;
    report.method = method;
    report.residual_tolerance = config.residual_tolerance.value_or(default_residual_tolerance(net.fluid().kind));
    const double flow_tol = m3h_to_m3s(config.flow_tolerance);

    LoopEval ev = evaluate_loops(net, *ctx.model, ctx.basis, q, config.derivative_flow_floor);
    report.iterations.push_back(q);
    report.loop_residuals.push_back(abs_values(ev.loop_sums));
    report.termination = Termination::max_iterations;

    for (int k = 1; k <= config.max_iterations; ++k) {
        FlowState next;
        try {
            switch (method) {
                case Method::node_loop: next = node_loop_step(ctx, q, ev, report); break;
                case Method::hardy_cross: next = hardy_cross_step(ctx, q, ev, false); break;
                case Method::hardy_cross_improved: next = hardy_cross_step(ctx, q, ev, true); break;
            }
        } catch (const SingularSystemError&) {
            report.termination = Termination::singular_system;
            break;
        }
        LoopEval next_ev = evaluate_loops(net, *ctx.model, ctx.basis, next, config.derivative_flow_floor);
        // Convergence is judged on the proposed step; a shortened step says
        // nothing about the distance to the solution.
        const double change = max_change(q, next);
        if (method == Method::hardy_cross && content_slope(q, next, next_ev) > 0.0) {
            // Corrections summed on pipes shared by several loops can overshoot
            // the minimum of the network content along the combined step.
            // Bisect on the slope so the content still decreases.
            const FlowState full = next;
            double lo = 0.0, hi = 1.0;
            FlowState best = q;
            LoopEval best_ev = ev;
            for (int b = 0; b < kMaxBisections; ++b) {
                const double mid = 0.5 * (lo + hi);
                FlowState trial = q;
                for (std::size_t i = 0; i < trial.flows.size(); ++i)
                    trial.flows[i] += mid * (full.flows[i] - q.flows[i]);
                LoopEval trial_ev = evaluate_loops(net, *ctx.model, ctx.basis, trial, config.derivative_flow_floor);
                if (content_slope(q, full, trial_ev, &trial) > 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    best = std::move(trial);
                    best_ev = std::move(trial_ev);
                }
            }
            // No decreasing point at all means the slope is rounding noise;
            // keep the full step then.
            if (lo > 0.0) {
                next = std::move(best);
                next_ev = std::move(best_ev);
                report.damped_iterations.push_back(k);
            }
        } else if (config.damping && next_ev.max_abs_loop_sum() > kDampingTrigger * ev.max_abs_loop_sum()) {
            for (std::size_t i = 0; i < next.flows.size(); ++i)
                next.flows[i] = q.flows[i] + 0.5 * (next.flows[i] - q.flows[i]);
            next_ev = evaluate_loops(net, *ctx.model, ctx.basis, next, config.derivative_flow_floor);
            report.damped_iterations.push_back(k);
        }
        q = std::move(next);
        ev = std::move(next_ev);
        report.iterations.push_back(q);
        report.loop_residuals.push_back(abs_values(ev.loop_sums));
        if (change <= flow_tol && ev.max_abs_loop_sum() <= report.residual_tolerance) {
            report.termination = Termination::converged;
            break;
        }
    }

    const FlowState& final_flows = report.final_flows();
    report.velocities.resize(net.pipe_count());
    for (std::size_t p = 0; p < net.pipe_count(); ++p)
        report.velocities[p] = velocity(net.fluid(), std::abs(final_flows.flows[p]), net.pipes()[p].diameter);

    if (config.pressure_source) {
        try {
            report.node_pressures = propagate_pressures(net, *ctx.model, final_flows, config.pressure_source->node,
                                                        config.pressure_source->pressure);
        } catch (const InfeasiblePressureError& e) {
            report.pressure_error = e.what();
        }
    }
    return report;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::node_loop: return "node-loop";
        case Method::hardy_cross: return "hardy-cross";
        case Method::hardy_cross_improved: return "hardy-cross-improved";
    }
    return "unknown";
}

std::string to_string(Termination termination) {
    switch (termination) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max-iterations";
        case Termination::singular_system: return "singular-system";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    for (Method m : {Method::node_loop, Method::hardy_cross, Method::hardy_cross_improved})
        if (to_string(m) == name) return m;
    return std::nullopt;
}

double default_residual_tolerance(FluidKind kind) { return kind == FluidKind::gas ? 1.0e3 : 1.0; }

double LoopEval::max_abs_loop_sum() const {
    double m = 0.0;
    for (double s : loop_sums) m = std::max(m, std::abs(s));
    return m;
}

double SolveReport::final_max_residual() const {
    double m = 0.0;
    for (double r : loop_residuals.back()) m = std::max(m, r);
    return m;
}

LoopEval evaluate_loops(const Network& net, const FluidModel& model, const LoopBasis& basis,
                        const FlowState& flows, double derivative_flow_floor) {
    if (flows.flows.size() != net.pipe_count()) throw std::invalid_argument("evaluate_loops: flow vector size mismatch");
    LoopEval ev;
    ev.pressure_drop.resize(net.pipe_count());
    ev.derivative.resize(net.pipe_count());
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        const double q = std::abs(flows.flows[p]);
        const Pipe& pipe = net.pipes()[p];
        const PipeEval at_flow = model.evaluate(pipe, q);
        ev.pressure_drop[p] = at_flow.F;
        ev.derivative[p] = q >= derivative_flow_floor ? std::abs(at_flow.dF_dQ)
                                                      : std::abs(model.evaluate(pipe, derivative_flow_floor).dF_dQ);
    }
    ev.loop_sums.assign(basis.size(), 0.0);
    for (Eigen::Index l = 0; l < basis.signs.rows(); ++l) {
        double sum = 0.0;
        for (Eigen::Index p = 0; p < basis.signs.cols(); ++p) {
            const int s = basis.signs(l, p);
            if (s == 0) continue;
            const auto pi = static_cast<std::size_t>(p);
            sum += s * sign_of(flows.flows[pi]) * ev.pressure_drop[pi];
        }
        ev.loop_sums[static_cast<std::size_t>(l)] = sum;
    }
    return ev;
}

DenseSystem assemble_node_loop_system(const Network& net, const NodeMatrix& node_matrix, const LoopBasis& basis,
                                      const FlowState& flows, const LoopEval& loop_eval) {
    const auto x = static_cast<Eigen::Index>(net.pipe_count());
    if (node_matrix.entries.cols() != x || basis.signs.cols() != x ||
        node_matrix.entries.rows() + basis.signs.rows() != x)
        throw std::invalid_argument("assemble_node_loop_system: dimension mismatch");
    if (flows.flows.size() != net.pipe_count() || loop_eval.derivative.size() != net.pipe_count() ||
        loop_eval.loop_sums.size() != basis.size())
        throw std::invalid_argument("assemble_node_loop_system: state size mismatch");

    DenseSystem sys{Eigen::MatrixXd::Zero(x, x), Eigen::VectorXd::Zero(x)};
    const Eigen::Index node_rows = node_matrix.entries.rows();
    sys.matrix.topRows(node_rows) = node_matrix.entries.cast<double>();
    for (Eigen::Index r = 0; r < node_rows; ++r)
        sys.rhs(r) = net.node(node_matrix.row_nodes[static_cast<std::size_t>(r)]).demand;

    for (Eigen::Index l = 0; l < basis.signs.rows(); ++l) {
        const Eigen::Index row = node_rows + l;
        double rhs = -loop_eval.loop_sums[static_cast<std::size_t>(l)];
        for (Eigen::Index p = 0; p < x; ++p) {
            const int s = basis.signs(l, p);
            if (s == 0) continue;
            const auto pi = static_cast<std::size_t>(p);
            const double d = loop_eval.derivative[pi];
            sys.matrix(row, p) = s * d;
            rhs += s * flows.flows[pi] * d;
        }
        sys.rhs(row) = rhs;
    }
    return sys;
}

std::vector<double> hardy_cross_corrections(const LoopBasis& basis, const LoopEval& loop_eval, bool simultaneous) {
    const Eigen::Index m = basis.signs.rows();
    std::vector<double> delta(static_cast<std::size_t>(m), 0.0);
    if (m == 0) return delta;
    const Eigen::Map<const Eigen::VectorXd> d(loop_eval.derivative.data(),
                                              static_cast<Eigen::Index>(loop_eval.derivative.size()));
    const Eigen::MatrixXd s = basis.signs.cast<double>();

    if (!simultaneous) {
        for (Eigen::Index l = 0; l < m; ++l) {
            const double denom = s.row(l).cwiseAbs().dot(d);
            if (!(denom >= kMinLoopDerivativeSum))
                throw SingularSystemError("hardy_cross: loop " + std::to_string(l + 1) + " has vanishing derivative sum");
            delta[static_cast<std::size_t>(l)] = -loop_eval.loop_sums[static_cast<std::size_t>(l)] / denom;
        }
        return delta;
    }

    DenseSystem sys{s * d.asDiagonal() * s.transpose(),
                    -Eigen::Map<const Eigen::VectorXd>(loop_eval.loop_sums.data(), m)};
    const Eigen::VectorXd x = solve_linear(sys);
    for (Eigen::Index l = 0; l < m; ++l) delta[static_cast<std::size_t>(l)] = x(l);
    return delta;
}

SolveReport solve_node_loop(const Network& net, const SolverConfig& config) { return run(net, config, Method::node_loop); }

SolveReport solve_hardy_cross_original(const Network& net, const SolverConfig& config) {
    return run(net, config, Method::hardy_cross);
}

SolveReport solve_hardy_cross_improved(const Network& net, const SolverConfig& config) {
    return run(net, config, Method::hardy_cross_improved);
}

SolveReport solve(const Network& net, const SolverConfig& config) { return run(net, config, config.method); }

std::map<NodeId, double> propagate_pressures(const Network& net, const FluidModel& model, const FlowState& flows,
                                             NodeId source_node, double source_pressure) {
    if (flows.flows.size() != net.pipe_count()) throw std::invalid_argument("propagate_pressures: flow vector size mismatch");
    auto source = net.node_index(source_node);
    if (!source) throw std::invalid_argument("propagate_pressures: unknown source node " + std::to_string(source_node.value));
    const bool squared = model.kind() == FluidKind::gas;

    // potential is p^2 for gas, p for water
    std::vector<std::optional<double>> potential(net.node_count());
    potential[*source] = squared ? source_pressure * source_pressure : source_pressure;

    // Breadth-first, level by level. Node indices follow ascending id, so
    // sorting each level and each neighbour list gives the tie order.
    std::vector<std::size_t> frontier{*source};
    while (!frontier.empty()) {
        std::vector<std::size_t> next_level;
        for (std::size_t n : frontier) {
            std::vector<std::pair<std::size_t, std::size_t>> neighbours;  // (node, pipe)
            for (std::size_t p : net.incidence()[n]) {
                const auto& pipe = net.pipes()[p];
                const std::size_t from = *net.node_index(pipe.from);
                neighbours.emplace_back(from == n ? *net.node_index(pipe.to) : from, p);
            }
            std::sort(neighbours.begin(), neighbours.end());
            for (auto [other, p] : neighbours) {
                if (potential[other]) continue;
                const auto& pipe = net.pipes()[p];
                const double q = flows.flows[p];
                const double drop = model.evaluate(pipe, q).F;
                // positive flow runs from -> to; walking with the flow loses pressure
                const bool walking_forward = *net.node_index(pipe.from) == n;
                const double dir = walking_forward ? sign_of(q) : -sign_of(q);
                potential[other] = *potential[n] - dir * drop;
                next_level.push_back(other);
            }
        }
        std::sort(next_level.begin(), next_level.end());
        frontier = std::move(next_level);
    }

    std::map<NodeId, double> out;
    for (std::size_t n = 0; n < net.node_count(); ++n) {
        if (!potential[n]) throw TopologyError("propagate_pressures: network graph is disconnected");
        double v = *potential[n];
        if (squared) {
            if (v < 0.0)
                throw InfeasiblePressureError("squared pressure at node " + std::to_string(net.nodes()[n].id.value) +
                                              " is negative; source pressure too low");
            v = std::sqrt(v);
        }
        out.emplace(net.nodes()[n].id, v);
    }
    return out;
}

}  // namespace loopflow
