#pragma once

#include "eschil/common.hpp"
#include "eschil/sources.hpp"
#include "eschil/switch_config.hpp"

#include <string>
#include <variant>
#include <vector>

namespace eschil {

// Circuit description as parsed from the netlist JSON. Node 0 is ground;
// all other nodes are numbered in declaration order.

struct Resistor {
    Real ohm = 0.0;
};

struct Inductor {
    Real henry = 0.0;
    Real i0 = 0.0;  // initial current, A
};

struct Capacitor {
    Real farad = 0.0;
    Real v0 = 0.0;  // initial voltage, V
};

struct VoltageSourceElem {
    SourceWaveform waveform;
};

struct CurrentSourceElem {
    SourceWaveform waveform;
};

/// Two magnetically coupled inductors; nodes are (a1,b1,a2,b2).
struct MutualPair {
    Real l1 = 0.0;
    Real l2 = 0.0;
    Real m = 0.0;
    Real i0_1 = 0.0;
    Real i0_2 = 0.0;
};

/// Gate-controlled switch modeled as a binary resistor.
struct ActiveSwitchElem {
    std::string gate_id;
    Real r_on = 1e-3;
    Real r_off = 1e6;
};

/// Diode modeled as a binary resistor with commutation thresholds.
struct DiodeElem {
    std::string diode_id;
    Real r_on = 1e-3;
    Real r_off = 1e6;
    Real v_threshold = 0.7;  // turn-on threshold, V (blocked -> conducting)
    Real i_threshold = 0.0;  // turn-off threshold, A (conducting -> blocked)
};

using ElementKind = std::variant<Resistor, Inductor, Capacitor, VoltageSourceElem,
                                 CurrentSourceElem, MutualPair, ActiveSwitchElem, DiodeElem>;

struct Element {
    std::string name;
    std::vector<int> nodes;  // node indices; 2 for most kinds, 4 for MutualPair
    ElementKind kind;
};

enum class ProbeKind { BranchCurrent, NodeVoltage };

struct Probe {
    std::string name;
    ProbeKind kind = ProbeKind::NodeVoltage;
    // BranchCurrent: element name plus winding (1 or 2, mutual pairs only).
    // NodeVoltage: node pair (b may be "gnd").
    std::string element;
    int winding = 1;
    int node_a = 0;
    int node_b = 0;
};

struct Netlist {
    std::vector<std::string> node_names;  // index 0 is "gnd"
    std::vector<Element> elements;
    std::vector<Probe> probes;

    // Gate / diode id tables in declaration order; SwitchConfig bits
    // index into these.
    std::vector<std::string> gate_ids;
    std::vector<std::string> diode_ids;

    [[nodiscard]] int node_count() const { return static_cast<int>(node_names.size()); }
    [[nodiscard]] std::size_t gate_count() const { return gate_ids.size(); }
    [[nodiscard]] std::size_t diode_count() const { return diode_ids.size(); }

    [[nodiscard]] int state_count() const;
    [[nodiscard]] int input_count() const;

    [[nodiscard]] int gate_index(const std::string& id) const;
    [[nodiscard]] int diode_index(const std::string& id) const;

    /// Initial state vector from the element initial conditions, in state order
    /// (inductor currents and capacitor voltages, element declaration order).
    [[nodiscard]] Vec initial_state() const;

    /// Input values/derivatives at time t, in source declaration order.
    [[nodiscard]] Vec input_values(Real t) const;
    [[nodiscard]] Vec input_derivatives(int order, Real t) const;

    /// Earliest source breakpoint strictly after t, if any.
    [[nodiscard]] std::optional<Real> next_source_breakpoint(Real t) const;

    [[nodiscard]] SwitchConfig initial_config() const {
        return SwitchConfig(gate_count(), diode_count());
    }
};

/// Parse and validate a netlist JSON document. Throws SimError("circuit", ...)
/// on schema violations, unknown element kinds, duplicate ids, floating
/// nodes, non-positive values, or coupling >= 1.
Netlist parse_netlist(const std::string& json_text);

}  // namespace eschil
