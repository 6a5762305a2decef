#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "loopflow/network.hpp"
#include "loopflow/solver.hpp"

namespace loopflow {

/// File could not be read or is not syntactically valid JSON.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON is well-formed but does not follow the network schema (missing or
/// unknown keys, wrong types). The message names the section and element.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Network file (JSON):
//   {
//     "fluid": {"kind": "gas", "rel_density": 0.6,
//               "operating_pressure_pa": 4e5, "normal_pressure_pa": 1e5},
//     "nodes": [{"id": 1, "demand_m3h": -6940}, ...],
//     "pipes": [{"id": 1, "from": 2, "to": 3, "diameter_m": 0.4064,
//                "length_m": 100, "roughness_m": 2e-5}, ...],
//     "loops": [[1, -2, -3, 4], ...],                      (optional)
//     "initial_flows": [{"pipe": 1, "flow_m3h": 200}, ...], (optional)
//     "reference_node": 11                                  (optional)
//   }
// Water fluids use "density" and "viscosity" instead of "rel_density"; the
// pressure keys are then optional.

/// Schema-checked read without network validation.
Network read_network_text(const std::string& text, const std::string& source = "<string>");
Network read_network(const std::filesystem::path& path);

/// read_network followed by validate(); throws ValidationError on violations.
Network parse_network_text(const std::string& text, const std::string& source = "<string>");
Network parse_network(const std::filesystem::path& path);

std::string serialize_network(const Network& net);

enum class TraceSigns {
    reference,             // sign relative to the pipe's reference orientation
    relative_to_previous,  // negative only where the direction flipped since the previous column
};

/// One row per pipe, one column per state, then the final velocity. Flows in
/// m^3/h and velocities in m/s, both to two decimals.
void write_trace_csv(std::ostream& os, const Network& net, const SolveReport& report,
                     TraceSigns signs = TraceSigns::reference);

/// Table of flows as printed in a trace: row = pipe, column = state.
std::vector<std::vector<double>> trace_table_m3h(const Network& net, const SolveReport& report, TraceSigns signs);

/// "pipe,flow_m3h" rows.
void write_flows_csv(std::ostream& os, const Network& net, const FlowState& flows);
FlowState read_flows_csv(std::istream& is, const Network& net);
FlowState read_flows_csv(const std::filesystem::path& path, const Network& net);

}  // namespace loopflow
