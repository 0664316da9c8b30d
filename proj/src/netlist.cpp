#include "eschil/netlist.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>

namespace eschil {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw SimError("circuit", msg); }

Real require_positive(const json& j, const char* field, const std::string& name) {
    if (!j.contains(field) || !j[field].is_number()) {
        fail("element '" + name + "' missing numeric field '" + field + "'");
    }
    const Real v = j[field].get<Real>();
    if (!(v > 0.0)) fail("element '" + name + "' has non-positive " + field);
    return v;
}

Real optional_number(const json& j, const char* field, Real fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number()) fail(std::string("field '") + field + "' must be numeric");
    return j[field].get<Real>();
}

SourceWaveform parse_waveform(const json& j, const std::string& name) {
    if (!j.is_object() || !j.contains("type")) {
        fail("source '" + name + "' needs a waveform object with a 'type'");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "dc") {
        if (!j.contains("value")) fail("dc waveform of '" + name + "' needs 'value'");
        return SourceWaveform(DcWaveform{j["value"].get<Real>()});
    }
    if (type == "sine") {
        SineWaveform s;
        s.amplitude = optional_number(j, "amplitude", 0.0);
        s.freq_hz = require_positive(j, "freq_hz", name);
        s.phase_rad = optional_number(j, "phase_rad", 0.0);
        s.offset = optional_number(j, "offset", 0.0);
        return SourceWaveform(s);
    }
    if (type == "pwl") {
        if (!j.contains("points") || !j["points"].is_array() || j["points"].size() < 2) {
            fail("pwl waveform of '" + name + "' needs >= 2 points");
        }
        PwlWaveform p;
        for (const auto& pt : j["points"]) {
            if (!pt.is_array() || pt.size() != 2) fail("pwl point of '" + name + "' must be [t, v]");
            p.points.emplace_back(pt[0].get<Real>(), pt[1].get<Real>());
        }
        for (std::size_t i = 1; i < p.points.size(); ++i) {
            if (!(p.points[i].first > p.points[i - 1].first)) {
                fail("pwl times of '" + name + "' must be strictly increasing");
            }
        }
        return SourceWaveform(std::move(p));
    }
    fail("unknown waveform type '" + type + "' in source '" + name + "'");
}

}  // namespace

int Netlist::state_count() const {
    int n = 0;
    for (const auto& e : elements) {
        if (std::holds_alternative<Inductor>(e.kind)) n += 1;
        if (std::holds_alternative<Capacitor>(e.kind)) n += 1;
        if (std::holds_alternative<MutualPair>(e.kind)) n += 2;
    }
    return n;
}

int Netlist::input_count() const {
    int m = 0;
    for (const auto& e : elements) {
        if (std::holds_alternative<VoltageSourceElem>(e.kind) ||
            std::holds_alternative<CurrentSourceElem>(e.kind)) {
            m += 1;
        }
    }
    return m;
}

int Netlist::gate_index(const std::string& id) const {
    auto it = std::find(gate_ids.begin(), gate_ids.end(), id);
    if (it == gate_ids.end()) fail("unknown gate id '" + id + "'");
    return static_cast<int>(it - gate_ids.begin());
}

int Netlist::diode_index(const std::string& id) const {
    auto it = std::find(diode_ids.begin(), diode_ids.end(), id);
    if (it == diode_ids.end()) fail("unknown diode id '" + id + "'");
    return static_cast<int>(it - diode_ids.begin());
}

Vec Netlist::initial_state() const {
    Vec x0(state_count());
    Index i = 0;
    for (const auto& e : elements) {
        if (const auto* l = std::get_if<Inductor>(&e.kind)) {
            x0[i++] = l->i0;
        } else if (const auto* c = std::get_if<Capacitor>(&e.kind)) {
            x0[i++] = c->v0;
        } else if (const auto* mp = std::get_if<MutualPair>(&e.kind)) {
            x0[i++] = mp->i0_1;
            x0[i++] = mp->i0_2;
        }
    }
    return x0;
}

Vec Netlist::input_values(Real t) const { return input_derivatives(0, t); }

Vec Netlist::input_derivatives(int order, Real t) const {
    Vec u(input_count());
    Index i = 0;
    for (const auto& e : elements) {
        if (const auto* vs = std::get_if<VoltageSourceElem>(&e.kind)) {
            u[i++] = vs->waveform.derivative(order, t);
        } else if (const auto* cs = std::get_if<CurrentSourceElem>(&e.kind)) {
            u[i++] = cs->waveform.derivative(order, t);
        }
    }
    return u;
}

std::optional<Real> Netlist::next_source_breakpoint(Real t) const {
    std::optional<Real> best;
    for (const auto& e : elements) {
        std::optional<Real> bp;
        if (const auto* vs = std::get_if<VoltageSourceElem>(&e.kind)) {
            bp = vs->waveform.next_breakpoint(t);
        } else if (const auto* cs = std::get_if<CurrentSourceElem>(&e.kind)) {
            bp = cs->waveform.next_breakpoint(t);
        }
        if (bp && (!best || *bp < *best)) best = bp;
    }
    return best;
}

Netlist parse_netlist(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("netlist JSON parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("elements")) {
        fail("netlist must be an object with 'nodes' and 'elements'");
    }

    Netlist net;
    std::unordered_map<std::string, int> node_index;
    net.node_names.push_back("gnd");
    node_index["gnd"] = 0;
    node_index["0"] = 0;

    bool saw_ground = false;
    for (const auto& n : doc["nodes"]) {
        const std::string name = n.get<std::string>();
        if (name == "gnd" || name == "0") {
            saw_ground = true;
            continue;
        }
        if (node_index.count(name)) fail("duplicate node '" + name + "'");
        node_index[name] = static_cast<int>(net.node_names.size());
        net.node_names.push_back(name);
    }
    if (!saw_ground) fail("node list must contain 'gnd'");

    const Real default_r_on = optional_number(doc.value("switch_defaults", json::object()),
                                              "r_on", 1e-3);
    const Real default_r_off = optional_number(doc.value("switch_defaults", json::object()),
                                               "r_off", 1e6);

    auto node_of = [&](const json& jn) -> int {
        const std::string name = jn.get<std::string>();
        auto it = node_index.find(name);
        if (it == node_index.end()) fail("element references undeclared node '" + name + "'");
        return it->second;
    };

    std::set<std::string> element_names;
    std::set<std::string> gate_seen;
    std::set<std::string> diode_seen;

    for (const auto& je : doc["elements"]) {
        if (!je.is_object() || !je.contains("kind") || !je.contains("name") ||
            !je.contains("nodes")) {
            fail("each element needs 'kind', 'name' and 'nodes'");
        }
        Element e;
        e.name = je["name"].get<std::string>();
        if (!element_names.insert(e.name).second) fail("duplicate element name '" + e.name + "'");
        for (const auto& jn : je["nodes"]) e.nodes.push_back(node_of(jn));

        const std::string kind = je["kind"].get<std::string>();
        const std::size_t expected_nodes = (kind == "mutual_pair") ? 4 : 2;
        if (e.nodes.size() != expected_nodes) {
            fail("element '" + e.name + "' needs " + std::to_string(expected_nodes) + " nodes");
        }

        if (kind == "resistor") {
            e.kind = Resistor{require_positive(je, "ohm", e.name)};
        } else if (kind == "inductor") {
            e.kind = Inductor{require_positive(je, "henry", e.name), optional_number(je, "i0", 0.0)};
        } else if (kind == "capacitor") {
            e.kind = Capacitor{require_positive(je, "farad", e.name), optional_number(je, "v0", 0.0)};
        } else if (kind == "voltage_source") {
            e.kind = VoltageSourceElem{parse_waveform(je.value("waveform", json{}), e.name)};
        } else if (kind == "current_source") {
            e.kind = CurrentSourceElem{parse_waveform(je.value("waveform", json{}), e.name)};
        } else if (kind == "mutual_pair") {
            MutualPair mp;
            mp.l1 = require_positive(je, "l1", e.name);
            mp.l2 = require_positive(je, "l2", e.name);
            mp.m = require_positive(je, "m", e.name);
            mp.i0_1 = optional_number(je, "i0_1", 0.0);
            mp.i0_2 = optional_number(je, "i0_2", 0.0);
            if (!(mp.m * mp.m < mp.l1 * mp.l2)) {
                fail("mutual pair '" + e.name + "' has coupling >= 1 (m^2 >= l1*l2)");
            }
            e.kind = mp;
        } else if (kind == "active_switch") {
            ActiveSwitchElem sw;
            sw.gate_id = je.value("gate", e.name);
            sw.r_on = optional_number(je, "r_on", default_r_on);
            sw.r_off = optional_number(je, "r_off", default_r_off);
            if (!(sw.r_on > 0.0) || !(sw.r_off > 0.0)) fail("switch '" + e.name + "' resistances must be > 0");
            if (!gate_seen.insert(sw.gate_id).second) fail("duplicate gate id '" + sw.gate_id + "'");
            net.gate_ids.push_back(sw.gate_id);
            e.kind = sw;
        } else if (kind == "diode") {
            DiodeElem d;
            d.diode_id = je.value("id", e.name);
            d.r_on = optional_number(je, "r_on", default_r_on);
            d.r_off = optional_number(je, "r_off", default_r_off);
            d.v_threshold = optional_number(je, "v_th", 0.7);
            d.i_threshold = optional_number(je, "i_th", 0.0);
            if (!(d.r_on > 0.0) || !(d.r_off > 0.0)) fail("diode '" + e.name + "' resistances must be > 0");
            if (!diode_seen.insert(d.diode_id).second) fail("duplicate diode id '" + d.diode_id + "'");
            net.diode_ids.push_back(d.diode_id);
            e.kind = d;
        } else {
            fail("unknown element kind '" + kind + "'");
        }
        net.elements.push_back(std::move(e));
    }

    if (net.elements.empty()) fail("netlist has no elements");

    // Connectivity: every node must reach ground through element terminals.
    {
        std::vector<int> parent(net.node_names.size());
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
        std::function<int(int)> find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        for (const auto& e : net.elements) {
            for (std::size_t i = 1; i < e.nodes.size(); ++i) {
                // A mutual pair only couples magnetically; its two windings
                // do not connect their node groups galvanically.
                if (std::holds_alternative<MutualPair>(e.kind) && i == 2) continue;
                int ra = find(e.nodes[i - 1]);
                int rb = find(e.nodes[i]);
                if (ra != rb) parent[ra] = rb;
            }
            if (std::holds_alternative<MutualPair>(e.kind)) {
                int ra = find(e.nodes[2]);
                int rb = find(e.nodes[3]);
                if (ra != rb) parent[ra] = rb;
            }
        }
        const int ground_root = find(0);
        for (int n = 1; n < net.node_count(); ++n) {
            if (find(n) != ground_root) {
                fail("floating node '" + net.node_names[n] + "': no path to ground");
            }
        }
    }

    // Probes.
    if (doc.contains("probes")) {
        for (const auto& jp : doc["probes"]) {
            Probe p;
            p.name = jp.at("name").get<std::string>();
            const std::string kind = jp.at("kind").get<std::string>();
            if (kind == "branch_current") {
                p.kind = ProbeKind::BranchCurrent;
                p.element = jp.at("target").get<std::string>();
                if (!element_names.count(p.element)) {
                    fail("probe '" + p.name + "' targets unknown element '" + p.element + "'");
                }
                p.winding = static_cast<int>(optional_number(jp, "winding", 1));
                if (p.winding != 1 && p.winding != 2) {
                    fail("probe '" + p.name + "' winding must be 1 or 2");
                }
            } else if (kind == "node_voltage") {
                p.kind = ProbeKind::NodeVoltage;
                const auto& t = jp.at("target");
                if (t.is_array() && t.size() == 2) {
                    p.node_a = node_of(t[0]);
                    p.node_b = node_of(t[1]);
                } else {
                    p.node_a = node_of(t);
                    p.node_b = 0;
                }
            } else {
                fail("probe '" + p.name + "' has unknown kind '" + kind + "'");
            }
            net.probes.push_back(std::move(p));
        }
    }

    return net;
}

}  // namespace eschil
