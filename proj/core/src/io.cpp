#include "loopflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace loopflow {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw FormatError(where + ": unknown key '" + key + "'");
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(where + ": missing '" + key + "'");
    return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw FormatError(where + ": '" + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw FormatError(what + " must be an integer");
    return v.get<int>();
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    // avoid printing "-0.00"
    if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

FluidSpec parse_fluid(const json& f) {
    const std::string where = "fluid";
    if (!f.is_object()) throw FormatError("fluid: must be an object");
    const json& kind = require(f, "kind", where);
    if (!kind.is_string()) throw FormatError("fluid: 'kind' must be a string");
    FluidSpec spec;
    if (kind == "gas") {
        reject_unknown_keys(f, {"kind", "rel_density", "operating_pressure_pa", "normal_pressure_pa"}, where);
        spec = FluidSpec::gas(number(f, "rel_density", where), number(f, "operating_pressure_pa", where),
                              number(f, "normal_pressure_pa", where));
    } else if (kind == "water") {
        reject_unknown_keys(f, {"kind", "density", "viscosity", "operating_pressure_pa", "normal_pressure_pa"}, where);
        spec = FluidSpec::water(number(f, "density", where), number(f, "viscosity", where));
        if (f.contains("operating_pressure_pa")) spec.operating_pressure = number(f, "operating_pressure_pa", where);
        if (f.contains("normal_pressure_pa")) spec.normal_pressure = number(f, "normal_pressure_pa", where);
    } else {
        throw FormatError("fluid: 'kind' must be \"gas\" or \"water\"");
    }
    return spec;
}

Network network_from_json(const json& doc) {
    if (!doc.is_object()) throw FormatError("document: top level must be an object");
    reject_unknown_keys(doc, {"fluid", "nodes", "pipes", "loops", "initial_flows", "reference_node"}, "document");

    NetworkData data;
    data.fluid = parse_fluid(require(doc, "fluid", "document"));

    const json& nodes = require(doc, "nodes", "document");
    if (!nodes.is_array()) throw FormatError("nodes: must be an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const json& n = nodes[i];
        std::string where = "nodes[" + std::to_string(i) + "]";
        if (!n.is_object()) throw FormatError(where + ": must be an object");
        reject_unknown_keys(n, {"id", "demand_m3h"}, where);
        const int id = integer(require(n, "id", where), where + ".id");
        where += " (node " + std::to_string(id) + ")";
        data.nodes.push_back({NodeId{id}, m3h_to_m3s(number(n, "demand_m3h", where))});
    }

    const json& pipes = require(doc, "pipes", "document");
    if (!pipes.is_array()) throw FormatError("pipes: must be an array");
    for (std::size_t i = 0; i < pipes.size(); ++i) {
        const json& p = pipes[i];
        std::string where = "pipes[" + std::to_string(i) + "]";
        if (!p.is_object()) throw FormatError(where + ": must be an object");
        reject_unknown_keys(p, {"id", "from", "to", "diameter_m", "length_m", "roughness_m"}, where);
        const int id = integer(require(p, "id", where), where + ".id");
        where += " (pipe " + std::to_string(id) + ")";
        Pipe pipe;
        pipe.id = PipeId{id};
        pipe.from = NodeId{integer(require(p, "from", where), where + ".from")};
        pipe.to = NodeId{integer(require(p, "to", where), where + ".to")};
        pipe.diameter = number(p, "diameter_m", where);
        pipe.length = number(p, "length_m", where);
        pipe.roughness = number(p, "roughness_m", where);
        data.pipes.push_back(pipe);
    }

    if (auto it = doc.find("loops"); it != doc.end()) {
        if (!it->is_array()) throw FormatError("loops: must be an array of arrays");
        std::vector<SignedLoop> loops;
        for (std::size_t l = 0; l < it->size(); ++l) {
            const json& loop = (*it)[l];
            const std::string where = "loops[" + std::to_string(l) + "]";
            if (!loop.is_array()) throw FormatError(where + ": must be an array of signed pipe ids");
            SignedLoop members;
            for (const json& entry : loop) {
                const int v = integer(entry, where + " entry");
                if (v == 0) throw FormatError(where + ": pipe id 0 cannot carry a sign");
                members.push_back({PipeId{std::abs(v)}, v > 0 ? 1 : -1});
            }
            loops.push_back(std::move(members));
        }
        data.explicit_loops = std::move(loops);
    }

    if (auto it = doc.find("initial_flows"); it != doc.end()) {
        if (!it->is_array()) throw FormatError("initial_flows: must be an array");
        std::vector<std::pair<PipeId, double>> flows;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& f = (*it)[i];
            const std::string where = "initial_flows[" + std::to_string(i) + "]";
            if (!f.is_object()) throw FormatError(where + ": must be an object");
            reject_unknown_keys(f, {"pipe", "flow_m3h"}, where);
            flows.emplace_back(PipeId{integer(require(f, "pipe", where), where + ".pipe")},
                               m3h_to_m3s(number(f, "flow_m3h", where)));
        }
        data.initial_flows = std::move(flows);
    }

    if (auto it = doc.find("reference_node"); it != doc.end())
        data.reference_node = NodeId{integer(*it, "reference_node")};

    return Network(std::move(data));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("error reading " + path.string());
    return os.str();
}

}  // namespace

Network read_network_text(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(source + ": " + e.what());
    }
    try {
        return network_from_json(doc);
    } catch (const FormatError& e) {
        throw FormatError(source + ": " + e.what());
    } catch (const json::exception& e) {
        throw FormatError(source + ": " + e.what());
    }
}

Network read_network(const std::filesystem::path& path) { return read_network_text(slurp(path), path.string()); }

Network parse_network_text(const std::string& text, const std::string& source) {
    Network net = read_network_text(text, source);
    if (auto violations = validate(net); !violations.empty()) throw ValidationError(std::move(violations));
    return net;
}

Network parse_network(const std::filesystem::path& path) { return parse_network_text(slurp(path), path.string()); }

std::string serialize_network(const Network& net) {
    json doc = json::object();
    const FluidSpec& f = net.fluid();
    json fluid = json::object();
    fluid["kind"] = to_string(f.kind);
    if (f.kind == FluidKind::gas) {
        fluid["rel_density"] = f.relative_density;
        fluid["operating_pressure_pa"] = f.operating_pressure;
        fluid["normal_pressure_pa"] = f.normal_pressure;
    } else {
        fluid["density"] = f.density;
        fluid["viscosity"] = f.viscosity;
        if (f.operating_pressure > 0.0) fluid["operating_pressure_pa"] = f.operating_pressure;
        if (f.normal_pressure > 0.0) fluid["normal_pressure_pa"] = f.normal_pressure;
    }
    doc["fluid"] = fluid;

    json nodes = json::array();
    for (const auto& n : net.nodes()) nodes.push_back({{"id", n.id.value}, {"demand_m3h", m3s_to_m3h(n.demand)}});
    doc["nodes"] = nodes;

    json pipes = json::array();
    for (const auto& p : net.pipes())
        pipes.push_back({{"id", p.id.value},
                         {"from", p.from.value},
                         {"to", p.to.value},
                         {"diameter_m", p.diameter},
                         {"length_m", p.length},
                         {"roughness_m", p.roughness}});
    doc["pipes"] = pipes;

    if (net.explicit_loops()) {
        json loops = json::array();
        for (const auto& loop : *net.explicit_loops()) {
            json l = json::array();
            for (const auto& m : loop) l.push_back(m.sign * m.pipe.value);
            loops.push_back(l);
        }
        doc["loops"] = loops;
    }
    if (net.initial_flows()) {
        json flows = json::array();
        for (const auto& [id, q] : *net.initial_flows())
            flows.push_back({{"pipe", id.value}, {"flow_m3h", m3s_to_m3h(q)}});
        doc["initial_flows"] = flows;
    }
    doc["reference_node"] = net.reference_node().value;
    return doc.dump(2) + "\n";
}

std::vector<std::vector<double>> trace_table_m3h(const Network& net, const SolveReport& report, TraceSigns signs) {
    std::vector<std::vector<double>> table(net.pipe_count());
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        for (std::size_t k = 0; k < report.iterations.size(); ++k) {
            double q = report.iterations[k].flows[p];
            if (signs == TraceSigns::relative_to_previous && k > 0 && report.iterations[k - 1].flows[p] < 0.0) q = -q;
            table[p].push_back(m3s_to_m3h(q));
        }
    }
    return table;
}

void write_trace_csv(std::ostream& os, const Network& net, const SolveReport& report, TraceSigns signs) {
    os << "pipe";
    for (std::size_t k = 1; k <= report.iterations.size(); ++k) os << ',' << k;
    os << ",velocity_m_s\n";
    const auto table = trace_table_m3h(net, report, signs);
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        os << net.pipes()[p].id.value;
        for (double v : table[p]) os << ',' << format_fixed(v, 2);
        os << ',' << format_fixed(report.velocities.at(p), 2) << '\n';
    }
}

void write_flows_csv(std::ostream& os, const Network& net, const FlowState& flows) {
    if (flows.flows.size() != net.pipe_count()) throw std::invalid_argument("write_flows_csv: flow vector size mismatch");
    os << "pipe,flow_m3h\n";
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", m3s_to_m3h(flows.flows[p]));
        os << net.pipes()[p].id.value << ',' << buf << '\n';
    }
}

FlowState read_flows_csv(std::istream& is, const Network& net) {
    FlowState fs{std::vector<double>(net.pipe_count(), 0.0)};
    std::vector<bool> seen(net.pipe_count(), false);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("pipe", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("flows line " + std::to_string(line_no) + ": expected 'pipe,flow_m3h'");
        int id = 0;
        double q = 0.0;
        try {
            std::size_t used = 0;
            id = std::stoi(line.substr(0, comma), &used);
            q = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw FormatError("flows line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
        auto idx = net.pipe_index(PipeId{id});
        if (!idx) throw FormatError("flows line " + std::to_string(line_no) + ": unknown pipe " + std::to_string(id));
        if (seen[*idx]) throw FormatError("flows line " + std::to_string(line_no) + ": pipe " + std::to_string(id) + " repeated");
        seen[*idx] = true;
        fs.flows[*idx] = m3h_to_m3s(q);
    }
    for (std::size_t p = 0; p < seen.size(); ++p)
        if (!seen[p]) throw FormatError("flows: no flow given for pipe " + std::to_string(net.pipes()[p].id.value));
    return fs;
}

FlowState read_flows_csv(const std::filesystem::path& path, const Network& net) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_flows_csv(in, net);
}

}  // namespace loopflow
