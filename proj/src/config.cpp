#include "syncscope/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "syncscope/digest.hpp"
#include "syncscope/errors.hpp"

namespace syncscope {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

void check_keys(const ojson& obj, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            fail(path, "unknown key '" + it.key() + "'");
        }
    }
}

const ojson& member(const ojson& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing required key '") + key + "'");
    return *it;
}

Real number_at(const ojson& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const Real x = v.get<Real>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
}

Real number_or(const ojson& obj, const char* key, Real fallback, const std::string& path) {
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : number_at(*it, path + "." + key);
}

std::string string_at(const ojson& obj, const char* key, const std::string& path) {
    const ojson& v = member(obj, key, path);
    if (!v.is_string() || v.get<std::string>().empty()) {
        fail(path + "." + key, "expected a non-empty string");
    }
    return v.get<std::string>();
}

std::vector<Complex> complex_list(const ojson& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) fail(path, "expected a non-empty array of [re, im] pairs");
    std::vector<Complex> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const ojson& e = arr[i];
        if (!e.is_array() || e.size() != 2) fail(p, "expected an [re, im] pair");
        out.emplace_back(number_at(e[0], p + "[0]"), number_at(e[1], p + "[1]"));
    }
    return out;
}

// Reads the poles/residues pair out of `obj`; the caller validates which
// other keys the object may carry.
std::vector<FirstOrderFactor> parse_factors(const ojson& obj, const std::string& path) {
    const std::vector<Complex> poles = complex_list(member(obj, "poles", path), path + ".poles");
    const std::vector<Complex> residues =
        complex_list(member(obj, "residues", path), path + ".residues");
    if (poles.size() != residues.size()) {
        fail(path, "poles and residues must have the same length");
    }
    std::vector<FirstOrderFactor> factors;
    factors.reserve(poles.size());
    for (std::size_t i = 0; i < poles.size(); ++i) {
        factors.push_back({poles[i], residues[i]});
    }
    try {
        const RationalChannel probe(factors); // full validation with channel semantics
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return factors;
}

void parse_units(const ojson& obj, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    check_keys(obj, {"angle", "amplitude"}, path);
    if (const auto it = obj.find("angle"); it != obj.end()) {
        if (!it->is_string() || it->get<std::string>() != "rad") {
            fail(path + ".angle", "angles must be labeled 'rad' (radians)");
        }
    }
    if (const auto it = obj.find("amplitude"); it != obj.end()) {
        if (!it->is_string() || it->get<std::string>() != "linear") {
            fail(path + ".amplitude", "amplitudes must be labeled 'linear'");
        }
    }
}

SystemSettings parse_system(const ojson& obj) {
    const std::string path = "system";
    if (!obj.is_object()) fail(path, "expected an object");
    check_keys(obj, {"omega0", "dt", "dt_out", "duration", "zeta_grid", "units"}, path);
    SystemSettings s;
    s.omega0 = number_or(obj, "omega0", s.omega0, path);
    s.dt = number_or(obj, "dt", s.dt, path);
    s.dt_out = number_or(obj, "dt_out", s.dt_out, path);
    s.duration = number_or(obj, "duration", s.duration, path);
    if (!(s.omega0 > 0.0)) fail(path + ".omega0", "must be positive");
    if (!(s.dt > 0.0)) fail(path + ".dt", "must be positive");
    if (!(s.duration > 0.0)) fail(path + ".duration", "must be positive");
    if (!(s.dt_out >= s.dt)) fail(path + ".dt_out", "must be at least dt");
    if (const auto it = obj.find("zeta_grid"); it != obj.end()) {
        const std::string gp = path + ".zeta_grid";
        if (!it->is_object()) fail(gp, "expected an object");
        check_keys(*it, {"omega_min", "omega_max", "points"}, gp);
        s.zeta_grid.omega_min = number_or(*it, "omega_min", s.zeta_grid.omega_min, gp);
        s.zeta_grid.omega_max = number_or(*it, "omega_max", s.zeta_grid.omega_max, gp);
        if (const auto pit = it->find("points"); pit != it->end()) {
            if (!pit->is_number_integer()) fail(gp + ".points", "expected an integer");
            s.zeta_grid.points = pit->get<int>();
        }
        if (!(s.zeta_grid.omega_min > 0.0) || !(s.zeta_grid.omega_max > s.zeta_grid.omega_min)) {
            fail(gp, "require 0 < omega_min < omega_max");
        }
        if (s.zeta_grid.points < 2) fail(gp + ".points", "must be at least 2");
    }
    if (const auto it = obj.find("units"); it != obj.end()) {
        parse_units(*it, path + ".units");
    }
    return s;
}

NodeConfig parse_node(const ojson& obj, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    check_keys(obj, {"id", "kind", "H", "D", "epsilon", "amplitude", "angle", "self_channel"},
               path);
    NodeConfig n;
    n.id = string_at(obj, "id", path);
    const std::string kind = string_at(obj, "kind", path);
    if (kind == "voltage") {
        n.kind = NodeKind::Voltage;
    } else if (kind == "current") {
        n.kind = NodeKind::Current;
    } else {
        fail(path + ".kind", "expected 'voltage' or 'current', got '" + kind + "'");
    }
    n.inertia = number_or(obj, "H", n.inertia, path);
    if (!(n.inertia > 0.0)) fail(path + ".H", "must be positive");
    n.damping = number_or(obj, "D", n.damping, path);
    if (n.damping < 0.0) fail(path + ".D", "must be non-negative");
    if (const auto it = obj.find("epsilon"); it != obj.end()) {
        const Real eps = number_at(*it, path + ".epsilon");
        if (eps < 0.0 || eps >= 2.0 * pi) fail(path + ".epsilon", "must lie in [0, 2*pi)");
        n.epsilon = eps;
    }
    n.amplitude = number_or(obj, "amplitude", n.amplitude, path);
    if (!(n.amplitude > 0.0)) fail(path + ".amplitude", "must be positive");
    n.angle = number_or(obj, "angle", n.angle, path);
    if (const auto it = obj.find("self_channel"); it != obj.end()) {
        if (!it->is_object()) fail(path + ".self_channel", "expected an object");
        check_keys(*it, {"poles", "residues"}, path + ".self_channel");
        n.self_channel = parse_factors(*it, path + ".self_channel");
    }
    return n;
}

bool is_declared(const std::vector<NodeConfig>& nodes, const std::string& id) {
    return std::any_of(nodes.begin(), nodes.end(),
                       [&](const NodeConfig& n) { return n.id == id; });
}

ojson complex_pair(Complex c) { return ojson::array({c.real(), c.imag()}); }

ojson factors_json(const std::vector<FirstOrderFactor>& factors) {
    ojson poles = ojson::array();
    ojson residues = ojson::array();
    for (const FirstOrderFactor& f : factors) {
        poles.push_back(complex_pair(f.pole));
        residues.push_back(complex_pair(f.residue));
    }
    ojson out;
    out["poles"] = std::move(poles);
    out["residues"] = std::move(residues);
    return out;
}

/// Interior node ids implied by the branch list: endpoints that are neither
/// declared active nodes nor ground, in first-appearance order.
std::vector<std::string> implied_passive_nodes(const SystemConfig& config) {
    std::vector<std::string> out;
    for (const BranchConfig& b : config.branches) {
        for (const std::string& end : {b.from, b.to}) {
            if (is_ground_id(end) || is_declared(config.nodes, end)) continue;
            if (std::find(out.begin(), out.end(), end) == out.end()) out.push_back(end);
        }
    }
    return out;
}

std::string format_real(Real x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

SystemConfig parse_config(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::string what = e.what();
        if (const auto pos = what.find("] "); pos != std::string::npos) what = what.substr(pos + 2);
        constexpr std::string_view prefix = "parse error ";
        if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
        throw ConfigError("syntax error " + what);
    }
    if (!doc.is_object()) fail("document", "expected a top-level object");
    check_keys(doc, {"system", "nodes", "channels", "branches", "passive_nodes", "perturbations"},
               "document");

    SystemConfig cfg;
    if (const auto it = doc.find("system"); it != doc.end()) {
        cfg.system = parse_system(*it);
    }

    const ojson& nodes = member(doc, "nodes", "document");
    if (!nodes.is_array() || nodes.empty()) fail("nodes", "expected a non-empty array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = "nodes[" + std::to_string(i) + "]";
        NodeConfig n = parse_node(nodes[i], path);
        if (is_declared(cfg.nodes, n.id)) fail(path + ".id", "duplicate node id '" + n.id + "'");
        if (is_ground_id(n.id)) fail(path + ".id", "'" + n.id + "' is reserved for ground");
        cfg.nodes.push_back(std::move(n));
    }

    if (const auto it = doc.find("channels"); it != doc.end()) {
        if (!it->is_array()) fail("channels", "expected an array");
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = "channels[" + std::to_string(i) + "]";
            const ojson& e = (*it)[i];
            if (!e.is_object()) fail(path, "expected an object");
            check_keys(e, {"from", "to", "poles", "residues"}, path);
            ChannelConfig ch;
            ch.from = string_at(e, "from", path);
            ch.to = string_at(e, "to", path);
            for (const std::string& end : {ch.from, ch.to}) {
                if (!is_declared(cfg.nodes, end)) {
                    fail(path, "references undeclared node '" + end + "'");
                }
            }
            if (ch.from == ch.to) {
                fail(path, "channel endpoints must differ (use the node's self_channel)");
            }
            auto key = std::minmax(ch.from, ch.to);
            if (!seen.insert(key).second) {
                fail(path, "duplicate channel between '" + key.first + "' and '" + key.second + "'");
            }
            ch.factors = parse_factors(e, path);
            cfg.channels.push_back(std::move(ch));
        }
    }

    if (const auto it = doc.find("branches"); it != doc.end()) {
        if (!it->is_array()) fail("branches", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = "branches[" + std::to_string(i) + "]";
            const ojson& e = (*it)[i];
            if (!e.is_object()) fail(path, "expected an object");
            check_keys(e, {"from", "to", "R", "L"}, path);
            BranchConfig b;
            b.from = string_at(e, "from", path);
            b.to = string_at(e, "to", path);
            b.resistance = number_or(e, "R", 0.0, path);
            b.inductance = number_or(e, "L", 0.0, path);
            if (b.resistance < 0.0) fail(path + ".R", "must be non-negative");
            if (b.inductance < 0.0) fail(path + ".L", "must be non-negative");
            if (b.resistance == 0.0 && b.inductance == 0.0) {
                fail(path, "branch needs a nonzero R or L");
            }
            if (b.from == b.to) fail(path, "branch endpoints must differ");
            cfg.branches.push_back(std::move(b));
        }
    }

    if (!cfg.channels.empty() && !cfg.branches.empty()) {
        fail("document", "specify either channels or branches, not both");
    }
    if (!cfg.branches.empty()) {
        for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
            if (cfg.nodes[i].self_channel) {
                fail("nodes[" + std::to_string(i) + "].self_channel",
                     "self channels cannot be combined with a branch network");
            }
        }
    }

    if (const auto it = doc.find("passive_nodes"); it != doc.end()) {
        if (cfg.branches.empty()) fail("passive_nodes", "only meaningful with a branch network");
        if (!it->is_array()) fail("passive_nodes", "expected an array of node ids");
        std::vector<std::string> declared;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const ojson& e = (*it)[i];
            const std::string path = "passive_nodes[" + std::to_string(i) + "]";
            if (!e.is_string() || e.get<std::string>().empty()) {
                fail(path, "expected a non-empty string");
            }
            const std::string id = e.get<std::string>();
            if (std::find(declared.begin(), declared.end(), id) != declared.end()) {
                fail(path, "duplicate passive node '" + id + "'");
            }
            if (is_declared(cfg.nodes, id)) {
                fail(path, "'" + id + "' is already declared as an active node");
            }
            if (is_ground_id(id)) fail(path, "'" + id + "' is reserved for ground");
            declared.push_back(id);
        }
        const std::vector<std::string> implied = implied_passive_nodes(cfg);
        for (const std::string& id : declared) {
            if (std::find(implied.begin(), implied.end(), id) == implied.end()) {
                fail("passive_nodes", "'" + id + "' does not appear in any branch");
            }
        }
        for (const std::string& id : implied) {
            if (std::find(declared.begin(), declared.end(), id) == declared.end()) {
                fail("passive_nodes",
                     "branch endpoint '" + id + "' is missing from the declared list");
            }
        }
        cfg.passive_nodes = std::move(declared);
    }

    if (const auto it = doc.find("perturbations"); it != doc.end()) {
        if (!it->is_array()) fail("perturbations", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = "perturbations[" + std::to_string(i) + "]";
            const ojson& e = (*it)[i];
            if (!e.is_object()) fail(path, "expected an object");
            check_keys(e, {"node", "delta_theta", "delta_omega"}, path);
            PerturbationConfig p;
            p.node = string_at(e, "node", path);
            if (!is_declared(cfg.nodes, p.node)) {
                fail(path + ".node", "references undeclared node '" + p.node + "'");
            }
            p.delta_theta = number_or(e, "delta_theta", 0.0, path);
            p.delta_omega = number_or(e, "delta_omega", 0.0, path);
            cfg.perturbations.push_back(std::move(p));
        }
    }
    return cfg;
}

std::string serialize_config(const SystemConfig& config) {
    ojson doc;
    ojson sys;
    sys["omega0"] = config.system.omega0;
    sys["dt"] = config.system.dt;
    sys["dt_out"] = config.system.dt_out;
    sys["duration"] = config.system.duration;
    ojson grid;
    grid["omega_min"] = config.system.zeta_grid.omega_min;
    grid["omega_max"] = config.system.zeta_grid.omega_max;
    grid["points"] = config.system.zeta_grid.points;
    sys["zeta_grid"] = std::move(grid);
    doc["system"] = std::move(sys);

    ojson nodes = ojson::array();
    for (const NodeConfig& n : config.nodes) {
        ojson e;
        e["id"] = n.id;
        e["kind"] = n.kind == NodeKind::Voltage ? "voltage" : "current";
        e["H"] = n.inertia;
        e["D"] = n.damping;
        e["epsilon"] = n.epsilon.value_or(default_epsilon(n.kind));
        e["amplitude"] = n.amplitude;
        e["angle"] = n.angle;
        if (n.self_channel) e["self_channel"] = factors_json(*n.self_channel);
        nodes.push_back(std::move(e));
    }
    doc["nodes"] = std::move(nodes);

    if (!config.channels.empty()) {
        ojson channels = ojson::array();
        for (const ChannelConfig& c : config.channels) {
            ojson e = factors_json(c.factors);
            ojson full;
            full["from"] = c.from;
            full["to"] = c.to;
            full["poles"] = std::move(e["poles"]);
            full["residues"] = std::move(e["residues"]);
            channels.push_back(std::move(full));
        }
        doc["channels"] = std::move(channels);
    }
    if (!config.branches.empty()) {
        ojson branches = ojson::array();
        for (const BranchConfig& b : config.branches) {
            ojson e;
            e["from"] = b.from;
            e["to"] = b.to;
            e["R"] = b.resistance;
            e["L"] = b.inductance;
            branches.push_back(std::move(e));
        }
        doc["branches"] = std::move(branches);
        const std::vector<std::string> passive =
            config.passive_nodes ? *config.passive_nodes : implied_passive_nodes(config);
        if (!passive.empty()) doc["passive_nodes"] = passive;
    }
    if (!config.perturbations.empty()) {
        ojson perturbations = ojson::array();
        for (const PerturbationConfig& p : config.perturbations) {
            ojson e;
            e["node"] = p.node;
            e["delta_theta"] = p.delta_theta;
            e["delta_omega"] = p.delta_omega;
            perturbations.push_back(std::move(e));
        }
        doc["perturbations"] = std::move(perturbations);
    }
    return doc.dump(2) + "\n";
}

std::string config_digest(const std::string& text) {
    nlohmann::json doc; // plain json sorts keys: key order never changes the hash
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config_digest: ") + e.what());
    }
    return sha256_hex(doc.dump());
}

NetworkGraph build_graph(const SystemConfig& config) {
    std::vector<Node> nodes;
    nodes.reserve(config.nodes.size());
    for (const NodeConfig& nc : config.nodes) {
        Node n;
        n.id = nc.id;
        n.kind = nc.kind;
        n.inertia = nc.inertia;
        n.damping = nc.damping;
        n.epsilon = nc.epsilon.value_or(default_epsilon(nc.kind));
        n.equilibrium = ComplexAngle{std::log(nc.amplitude), nc.angle};
        if (nc.self_channel) n.self_channel = RationalChannel(*nc.self_channel);
        nodes.push_back(std::move(n));
    }
    if (!config.branches.empty()) {
        std::vector<Branch> branches;
        branches.reserve(config.branches.size());
        for (const BranchConfig& b : config.branches) {
            branches.push_back({b.from, b.to, b.resistance, b.inductance});
        }
        return NetworkGraph::from_branches(std::move(nodes), std::move(branches));
    }
    std::vector<ExplicitEdge> edges;
    edges.reserve(config.channels.size());
    for (const ChannelConfig& c : config.channels) {
        edges.push_back({c.from, c.to, RationalChannel(c.factors)});
    }
    return NetworkGraph::from_channels(std::move(nodes), std::move(edges));
}

InertiaDynamics shared_inertia_dynamics(const SystemConfig& config,
                                        std::vector<std::string>* notes) {
    Real dmin = std::numeric_limits<Real>::infinity();
    Real dmax = 0.0;
    for (const NodeConfig& n : config.nodes) {
        dmin = std::min(dmin, n.damping);
        dmax = std::max(dmax, n.damping);
    }
    if (config.nodes.empty()) dmin = 0.0;
    if (notes != nullptr && dmax > dmin) {
        notes->push_back("per-node damping values differ (min " + format_real(dmin) + ", max " +
                         format_real(dmax) +
                         "); the criterion uses the minimum and treats the surplus only "
                         "heuristically");
    }
    return InertiaDynamics{dmin};
}

std::vector<Perturbation> resolve_perturbations(const SystemConfig& config,
                                                const NetworkGraph& graph) {
    std::vector<Perturbation> out;
    out.reserve(config.perturbations.size());
    for (const PerturbationConfig& p : config.perturbations) {
        out.push_back({graph.index_of(p.node), p.delta_theta, p.delta_omega});
    }
    return out;
}

} // namespace syncscope
