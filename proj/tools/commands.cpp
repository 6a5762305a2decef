#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "loopflow/io.hpp"
#include "loopflow/sizing.hpp"
#include "loopflow/solver.hpp"
#include "loopflow/topology.hpp"

namespace loopflow::cli {

namespace {

std::string fixed(double v, int decimals) {
    if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

const char* residual_unit(const Network& net) { return net.fluid().kind == FluidKind::gas ? "Pa^2" : "Pa"; }

/// Node with the largest supply (most negative demand), lowest id on ties.
NodeId default_source(const Network& net) {
    NodeId best = net.nodes().front().id;
    double demand = net.nodes().front().demand;
    for (const auto& n : net.nodes())
        if (n.demand < demand) {
            demand = n.demand;
            best = n.id;
        }
    return best;
}

void print_violations(std::ostream& err, const std::vector<Violation>& violations) {
    for (const auto& v : violations) err << "  " << v.code << ": " << v.message << '\n';
}

/// Loads and validates; on failure prints the reason and returns the exit code.
std::optional<Network> load(const std::string& path, std::ostream& err, int& code) {
    try {
        return parse_network(path);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        code = kIoFailure;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        code = kValidationFailure;
    } catch (const ValidationError& e) {
        err << "error: " << path << " is not a valid network\n";
        print_violations(err, e.violations());
        code = kValidationFailure;
    }
    return std::nullopt;
}

int cmd_check(const std::string& path, std::ostream& out, std::ostream& err) {
    std::optional<Network> net;
    try {
        net = read_network(path);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    }

    const bool connected = net->is_connected();
    out << net->pipe_count() << " pipes, " << net->node_count() << " nodes, " << net->independent_loop_count()
        << " loops\n";
    out << "fluid: " << to_string(net->fluid().kind) << '\n';
    out << "connectivity: " << (connected ? "connected" : "disconnected") << '\n';
    out << "reference node: " << net->reference_node().value << '\n';

    auto violations = validate(*net);
    if (!violations.empty()) {
        err << "invalid network:\n";
        print_violations(err, violations);
        return kValidationFailure;
    }
    try {
        if (net->explicit_loops()) {
            adopt_explicit_loops(*net);
            out << "loops: " << net->explicit_loops()->size() << " supplied, valid\n";
        } else {
            const LoopBasis basis = derive_loop_basis(*net);
            out << "loops will be derived (" << basis.size() << " fundamental loops)\n";
        }
    } catch (const TopologyError& e) {
        err << "invalid loops: " << e.what() << '\n';
        return kValidationFailure;
    }
    out << "initial flows: " << (net->initial_flows() ? "supplied" : "generated from spanning tree") << '\n';
    return kSuccess;
}

struct SolveOptions {
    std::string path;
    std::string method = "node-loop";
    std::string trace_path;
    std::string trace_signs = "reference";
    std::string flows_out;
    bool pressures = false;
    std::optional<int> source_node;
    std::optional<double> source_pressure;
    double flow_tolerance = 0.01;
    std::optional<double> residual_tolerance;
    int max_iterations = 50;
    std::uint64_t seed = 0;
    bool damping = false;
};

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
    int code = kSuccess;
    auto net = load(opt.path, err, code);
    if (!net) return code;

    SolverConfig config;
    config.method = *parse_method(opt.method);
    config.flow_tolerance = opt.flow_tolerance;
    config.residual_tolerance = opt.residual_tolerance;
    config.max_iterations = opt.max_iterations;
    config.seed = opt.seed;
    config.damping = opt.damping;
    if (opt.pressures) {
        PressureSource src;
        src.node = opt.source_node ? NodeId{*opt.source_node} : default_source(*net);
        if (!net->node_index(src.node)) {
            err << "error: unknown source node " << src.node.value << '\n';
            return kValidationFailure;
        }
        if (opt.source_pressure) src.pressure = *opt.source_pressure;
        else if (net->fluid().kind == FluidKind::gas) src.pressure = net->fluid().operating_pressure;
        config.pressure_source = src;
    }

    SolveReport report;
    try {
        report = solve(*net, config);
    } catch (const TopologyError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    }

    if (!opt.trace_path.empty()) {
        std::ofstream trace(opt.trace_path);
        if (!trace) {
            err << "error: cannot write " << opt.trace_path << '\n';
            return kIoFailure;
        }
        write_trace_csv(trace, *net, report,
                        opt.trace_signs == "relative" ? TraceSigns::relative_to_previous : TraceSigns::reference);
    }
    if (!opt.flows_out.empty()) {
        std::ofstream flows(opt.flows_out);
        if (!flows) {
            err << "error: cannot write " << opt.flows_out << '\n';
            return kIoFailure;
        }
        write_flows_csv(flows, *net, report.final_flows());
    }

    out << "network: " << net->pipe_count() << " pipes, " << net->node_count() << " nodes, "
        << net->independent_loop_count() << " loops (" << to_string(net->fluid().kind) << ")\n";
    out << "method: " << to_string(report.method) << '\n';
    out << "termination: " << to_string(report.termination) << '\n';
    out << "iterations: " << report.iteration_count() << '\n';
    out << "max loop residual: " << sci(report.final_max_residual()) << ' ' << residual_unit(*net) << '\n';
    if (!report.damped_iterations.empty()) {
        out << "damped iterations:";
        for (int k : report.damped_iterations) out << ' ' << k;
        out << '\n';
    }
    out << '\n' << std::left << std::setw(6) << "pipe" << std::setw(6) << "from" << std::setw(6) << "to"
        << std::right << std::setw(12) << "flow_m3h" << std::setw(10) << "reversed" << std::setw(14)
        << "velocity_m_s" << '\n';
    const FlowState& q = report.final_flows();
    for (std::size_t p = 0; p < net->pipe_count(); ++p) {
        const Pipe& pipe = net->pipes()[p];
        out << std::left << std::setw(6) << pipe.id.value << std::setw(6) << pipe.from.value << std::setw(6)
            << pipe.to.value << std::right << std::setw(12) << fixed(m3s_to_m3h(q.flows[p]), 2) << std::setw(10)
            << (q.flows[p] < 0.0 ? "yes" : "no") << std::setw(14) << fixed(report.velocities[p], 2) << '\n';
    }

    if (opt.pressures) {
        out << "\nsource: node " << config.pressure_source->node.value << " at "
            << fixed(config.pressure_source->pressure, 0) << " Pa\n";
        if (report.pressure_error) {
            err << "error: " << *report.pressure_error << '\n';
        } else {
            out << std::left << std::setw(6) << "node" << std::right << std::setw(16) << "pressure_pa" << '\n';
            for (const auto& [node, p] : report.node_pressures)
                out << std::left << std::setw(6) << node.value << std::right << std::setw(16) << fixed(p, 2) << '\n';
        }
    }

    if (report.termination != Termination::converged) {
        err << "error: solver stopped with " << to_string(report.termination) << '\n';
        return kNonConvergence;
    }
    return report.pressure_error ? kNonConvergence : kSuccess;
}

struct SizeOptions {
    std::string path;
    std::string flows_path;
    std::string bounds;
    std::string trace_path;
    std::optional<double> residual_tolerance;
    int max_iterations = 200;
};

int cmd_size(const SizeOptions& opt, std::ostream& out, std::ostream& err) {
    int code = kSuccess;
    auto net = load(opt.path, err, code);
    if (!net) return code;

    SizingConfig config;
    config.residual_tolerance = opt.residual_tolerance;
    config.max_iterations = opt.max_iterations;
    if (!opt.bounds.empty()) {
        const auto comma = opt.bounds.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing comma");
            config.bounds.lower = std::stod(opt.bounds.substr(0, comma));
            config.bounds.upper = std::stod(opt.bounds.substr(comma + 1));
        } catch (const std::exception&) {
            err << "error: --bounds expects LOWER,UPPER in metres\n";
            return kValidationFailure;
        }
    }
    try {
        config.fixed_flows = read_flows_csv(opt.flows_path, *net);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    }

    SizingReport report;
    try {
        report = optimize_diameters(*net, loop_basis_for(*net), config);
    } catch (const TopologyError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    }

    if (!opt.trace_path.empty()) {
        std::ofstream trace(opt.trace_path);
        if (!trace) {
            err << "error: cannot write " << opt.trace_path << '\n';
            return kIoFailure;
        }
        trace << "pipe";
        for (std::size_t k = 1; k <= report.diameter_trace.size(); ++k) trace << ',' << k;
        trace << ",velocity_m_s\n";
        for (std::size_t p = 0; p < net->pipe_count(); ++p) {
            trace << net->pipes()[p].id.value;
            for (const auto& d : report.diameter_trace) trace << ',' << fixed(d[p], 6);
            trace << ',' << fixed(report.velocities[p], 2) << '\n';
        }
    }

    const bool gas = net->fluid().kind == FluidKind::gas;
    out << "termination: " << to_string(report.termination) << '\n';
    out << "iterations: " << report.iteration_count() << '\n';
    out << "max loop residual: " << sci(report.final_max_residual()) << ' ' << residual_unit(*net) << '\n';
    out << "loop residuals:";
    for (double r : report.loop_residuals.back()) out << ' ' << sci(r);
    out << '\n' << '\n';
    out << std::left << std::setw(6) << "pipe" << std::right << std::setw(12) << "diameter_m" << std::setw(12)
        << "input_m" << std::setw(14) << "velocity_m_s";
    if (gas) out << std::setw(8) << "band";
    out << "  note\n";
    for (std::size_t p = 0; p < net->pipe_count(); ++p) {
        const Pipe& pipe = net->pipes()[p];
        std::string note;
        if (std::find(report.unconstrained_pipes.begin(), report.unconstrained_pipes.end(), pipe.id) !=
            report.unconstrained_pipes.end())
            note = "in no loop, unchanged";
        else if (std::find(report.pipes_at_bound.begin(), report.pipes_at_bound.end(), pipe.id) !=
                 report.pipes_at_bound.end())
            note = "at bound";
        out << std::left << std::setw(6) << pipe.id.value << std::right << std::setw(12)
            << fixed(report.diameters[p], 6) << std::setw(12) << fixed(pipe.diameter, 6) << std::setw(14)
            << fixed(report.velocities[p], 2);
        if (gas) out << std::setw(8) << to_string(classify_gas_velocity(report.velocities[p]));
        out << "  " << note << '\n';
    }
    if (gas) out << "velocity band: 10-15 m/s recommended for gas (advisory)\n";

    switch (report.termination) {
        case SizingTermination::converged: return kSuccess;
        case SizingTermination::infeasible: err << "error: infeasible within bounds\n"; return kNonConvergence;
        case SizingTermination::max_iterations: err << "error: sizing did not converge\n"; return kNonConvergence;
    }
    return kNonConvergence;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Steady-state flow distribution in looped gas and water pipe networks"};
    app.require_subcommand(1);

    std::string check_path;
    auto* check = app.add_subcommand("check", "Validate a network file and report its topology");
    check->add_option("network", check_path, "Network file (JSON)")->required();

    SolveOptions solve_opt;
    auto* solve_cmd = app.add_subcommand("solve", "Compute the flow distribution");
    solve_cmd->add_option("network", solve_opt.path, "Network file (JSON)")->required();
    solve_cmd->add_option("--method", solve_opt.method, "node-loop | hardy-cross | hardy-cross-improved")
        ->check(CLI::IsMember({"node-loop", "hardy-cross", "hardy-cross-improved"}));
    solve_cmd->add_option("--trace", solve_opt.trace_path, "Write the per-iteration flow table (CSV)");
    solve_cmd->add_option("--trace-signs", solve_opt.trace_signs,
                          "reference: signs against pipe orientation; relative: against previous iteration")
        ->check(CLI::IsMember({"reference", "relative"}));
    solve_cmd->add_option("--flows-out", solve_opt.flows_out, "Write converged flows (CSV, usable by 'size --flows')");
    solve_cmd->add_flag("--pressures", solve_opt.pressures, "Compute node pressures from the source node");
    solve_cmd->add_option("--source-node", solve_opt.source_node, "Source node id (default: largest supply)");
    solve_cmd->add_option("--source-pressure-pa", solve_opt.source_pressure,
                          "Absolute source pressure, Pa (default: operating pressure for gas, 4e5 for water)");
    solve_cmd->add_option("--flow-tolerance", solve_opt.flow_tolerance, "Stop when flows change less than this, m3/h")
        ->check(CLI::PositiveNumber);
    solve_cmd->add_option("--residual-tolerance", solve_opt.residual_tolerance, "Loop residual limit, Pa^2 or Pa")
        ->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iterations", solve_opt.max_iterations)->check(CLI::PositiveNumber);
    solve_cmd->add_option("--seed", solve_opt.seed, "Seed for generated initial flows");
    solve_cmd->add_flag("--damping", solve_opt.damping, "Halve steps that inflate the loop residual tenfold");

    SizeOptions size_opt;
    auto* size_cmd = app.add_subcommand("size", "Adjust pipe diameters for fixed flows");
    size_cmd->add_option("network", size_opt.path, "Network file (JSON)")->required();
    size_cmd->add_option("--flows", size_opt.flows_path, "Fixed flows (CSV: pipe,flow_m3h)")->required();
    size_cmd->add_option("--bounds", size_opt.bounds, "Diameter bounds LOWER,UPPER in metres (default 0.01,2.0)");
    size_cmd->add_option("--trace", size_opt.trace_path, "Write the per-iteration diameter table (CSV)");
    size_cmd->add_option("--residual-tolerance", size_opt.residual_tolerance)->check(CLI::PositiveNumber);
    size_cmd->add_option("--max-iterations", size_opt.max_iterations)->check(CLI::PositiveNumber);

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (e.get_exit_code() == 0) return kSuccess;
        return kValidationFailure;
    }

    if (*check) return cmd_check(check_path, out, err);
    if (*solve_cmd) return cmd_solve(solve_opt, out, err);
    return cmd_size(size_opt, out, err);
}

}  // namespace loopflow::cli
