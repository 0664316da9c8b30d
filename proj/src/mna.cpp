#include "eschil/mna.hpp"

#include <Eigen/Eigenvalues>

#include <variant>

namespace eschil {

namespace {

// Unknown vector layout: node voltages (nodes 1..N-1), then one branch
// current per voltage-source-like element (voltage sources and capacitors,
// declaration order). Branch currents are defined flowing from the first
// listed node to the second, through the element.
struct Layout {
    int n_nodes = 0;       // including ground
    int n_branch = 0;      // voltage-source-like branch currents
    std::vector<int> branch_row;  // per element index, -1 if none

    [[nodiscard]] int size() const { return n_nodes - 1 + n_branch; }
    [[nodiscard]] int voltage_col(int node) const { return node - 1; }  // node > 0
};

void stamp_conductance(Mat& G, int a, int b, Real g) {
    if (a > 0) G(a - 1, a - 1) += g;
    if (b > 0) G(b - 1, b - 1) += g;
    if (a > 0 && b > 0) {
        G(a - 1, b - 1) -= g;
        G(b - 1, a - 1) -= g;
    }
}

}  // namespace

LtiModel stamp_and_reduce(const Netlist& net, const SwitchConfig& cfg) {
    if (cfg.gate_count() != net.gate_count() || cfg.diode_count() != net.diode_count()) {
        throw SimError("circuit", "switch config bit width does not match netlist");
    }

    Layout lay;
    lay.n_nodes = net.node_count();
    lay.branch_row.assign(net.elements.size(), -1);
    for (std::size_t i = 0; i < net.elements.size(); ++i) {
        const auto& k = net.elements[i].kind;
        if (std::holds_alternative<VoltageSourceElem>(k) ||
            std::holds_alternative<Capacitor>(k)) {
            lay.branch_row[i] = lay.n_nodes - 1 + lay.n_branch++;
        }
    }

    const int nz = lay.size();
    const int n_states = net.state_count();
    const int n_inputs = net.input_count();

    Mat G = Mat::Zero(nz, nz);
    Mat P = Mat::Zero(nz, n_states);  // state contributions to the RHS
    Mat Q = Mat::Zero(nz, n_inputs);  // input contributions to the RHS

    // State / input index assignment in declaration order.
    std::vector<int> state_of_element(net.elements.size(), -1);
    std::vector<int> input_of_element(net.elements.size(), -1);
    {
        int si = 0, ui = 0;
        for (std::size_t i = 0; i < net.elements.size(); ++i) {
            const auto& k = net.elements[i].kind;
            if (std::holds_alternative<Inductor>(k) || std::holds_alternative<Capacitor>(k)) {
                state_of_element[i] = si++;
            } else if (std::holds_alternative<MutualPair>(k)) {
                state_of_element[i] = si;
                si += 2;
            } else if (std::holds_alternative<VoltageSourceElem>(k) ||
                       std::holds_alternative<CurrentSourceElem>(k)) {
                input_of_element[i] = ui++;
            }
        }
    }

    std::size_t gate_i = 0, diode_i = 0;
    std::vector<int> diode_element(net.diode_count(), -1);
    std::vector<Real> element_g(net.elements.size(), 0.0);  // resistive branch conductance

    for (std::size_t i = 0; i < net.elements.size(); ++i) {
        const auto& e = net.elements[i];
        const int a = e.nodes[0];
        const int b = e.nodes.size() > 1 ? e.nodes[1] : 0;

        if (const auto* r = std::get_if<Resistor>(&e.kind)) {
            element_g[i] = 1.0 / r->ohm;
            stamp_conductance(G, a, b, element_g[i]);
        } else if (const auto* sw = std::get_if<ActiveSwitchElem>(&e.kind)) {
            const bool on = cfg.gate(gate_i++);
            element_g[i] = 1.0 / (on ? sw->r_on : sw->r_off);
            stamp_conductance(G, a, b, element_g[i]);
        } else if (const auto* d = std::get_if<DiodeElem>(&e.kind)) {
            const bool conducting = cfg.diode(diode_i);
            diode_element[diode_i++] = static_cast<int>(i);
            element_g[i] = 1.0 / (conducting ? d->r_on : d->r_off);
            stamp_conductance(G, a, b, element_g[i]);
        } else if (std::get_if<Inductor>(&e.kind)) {
            // Known current i_L leaves node a, enters node b.
            const int s = state_of_element[i];
            if (a > 0) P(a - 1, s) -= 1.0;
            if (b > 0) P(b - 1, s) += 1.0;
        } else if (std::get_if<MutualPair>(&e.kind)) {
            const int s = state_of_element[i];
            const int a2 = e.nodes[2], b2 = e.nodes[3];
            if (a > 0) P(a - 1, s) -= 1.0;
            if (b > 0) P(b - 1, s) += 1.0;
            if (a2 > 0) P(a2 - 1, s + 1) -= 1.0;
            if (b2 > 0) P(b2 - 1, s + 1) += 1.0;
        } else if (std::get_if<VoltageSourceElem>(&e.kind)) {
            const int br = lay.branch_row[i];
            if (a > 0) { G(a - 1, br) += 1.0; G(br, a - 1) += 1.0; }
            if (b > 0) { G(b - 1, br) -= 1.0; G(br, b - 1) -= 1.0; }
            Q(br, input_of_element[i]) = 1.0;
        } else if (std::get_if<Capacitor>(&e.kind)) {
            // Stamped like a voltage source whose value is the state v_C.
            const int br = lay.branch_row[i];
            if (a > 0) { G(a - 1, br) += 1.0; G(br, a - 1) += 1.0; }
            if (b > 0) { G(b - 1, br) -= 1.0; G(br, b - 1) -= 1.0; }
            P(br, state_of_element[i]) = 1.0;
        } else if (std::get_if<CurrentSourceElem>(&e.kind)) {
            // Known current u leaves node a, enters node b.
            if (a > 0) Q(a - 1, input_of_element[i]) -= 1.0;
            if (b > 0) Q(b - 1, input_of_element[i]) += 1.0;
        }
    }

    Eigen::PartialPivLU<Mat> lu(G);
    if (nz > 0) {
        const Real rc = lu.rcond();
        if (!(rc > 1e-14)) {
            throw SimError("circuit", "numerically singular nodal matrix (rcond=" +
                                          std::to_string(rc) + ") for config " + cfg.to_string());
        }
    }

    // z = Zx * x + Zu * u
    const Mat Zx = nz > 0 ? Mat(lu.solve(P)) : Mat(0, n_states);
    const Mat Zu = nz > 0 ? Mat(lu.solve(Q)) : Mat(0, n_inputs);

    auto z_row_voltage = [&](int node) -> Eigen::RowVectorXd {
        Eigen::RowVectorXd rx = Eigen::RowVectorXd::Zero(n_states + n_inputs);
        if (node > 0) {
            rx.head(n_states) = Zx.row(lay.voltage_col(node));
            rx.tail(n_inputs) = Zu.row(lay.voltage_col(node));
        }
        return rx;
    };
    auto z_row_branch = [&](int br) -> Eigen::RowVectorXd {
        Eigen::RowVectorXd rx(n_states + n_inputs);
        rx.head(n_states) = Zx.row(br);
        rx.tail(n_inputs) = Zu.row(br);
        return rx;
    };

    LtiModel model;
    model.config = cfg;
    model.A = Mat::Zero(n_states, n_states);
    model.B = Mat::Zero(n_states, n_inputs);

    for (std::size_t i = 0; i < net.elements.size(); ++i) {
        const auto& e = net.elements[i];
        const int a = e.nodes[0];
        const int b = e.nodes.size() > 1 ? e.nodes[1] : 0;
        if (const auto* l = std::get_if<Inductor>(&e.kind)) {
            const Eigen::RowVectorXd v = (z_row_voltage(a) - z_row_voltage(b)) / l->henry;
            model.A.row(state_of_element[i]) = v.head(n_states);
            model.B.row(state_of_element[i]) = v.tail(n_inputs);
            model.state_labels.push_back(e.name + ".i");
        } else if (const auto* c = std::get_if<Capacitor>(&e.kind)) {
            const Eigen::RowVectorXd v = z_row_branch(lay.branch_row[i]) / c->farad;
            model.A.row(state_of_element[i]) = v.head(n_states);
            model.B.row(state_of_element[i]) = v.tail(n_inputs);
            model.state_labels.push_back(e.name + ".v");
        } else if (const auto* mp = std::get_if<MutualPair>(&e.kind)) {
            const int a2 = e.nodes[2], b2 = e.nodes[3];
            Eigen::Matrix2d L;
            L << mp->l1, mp->m, mp->m, mp->l2;
            const Eigen::Matrix2d Linv = L.inverse();
            const Eigen::RowVectorXd v1 = z_row_voltage(a) - z_row_voltage(b);
            const Eigen::RowVectorXd v2 = z_row_voltage(a2) - z_row_voltage(b2);
            const int s = state_of_element[i];
            Eigen::RowVectorXd r1 = Linv(0, 0) * v1 + Linv(0, 1) * v2;
            Eigen::RowVectorXd r2 = Linv(1, 0) * v1 + Linv(1, 1) * v2;
            model.A.row(s) = r1.head(n_states);
            model.B.row(s) = r1.tail(n_inputs);
            model.A.row(s + 1) = r2.head(n_states);
            model.B.row(s + 1) = r2.tail(n_inputs);
            model.state_labels.push_back(e.name + ".i1");
            model.state_labels.push_back(e.name + ".i2");
        } else if (std::get_if<VoltageSourceElem>(&e.kind)) {
            model.input_labels.push_back(e.name + ".u");
        } else if (std::get_if<CurrentSourceElem>(&e.kind)) {
            model.input_labels.push_back(e.name + ".u");
        }
    }

    // Outputs: declared probes, then (current, voltage) per diode.
    const int n_outputs = static_cast<int>(net.probes.size()) + 2 * static_cast<int>(net.diode_count());
    model.C = Mat::Zero(n_outputs, n_states);
    model.D = Mat::Zero(n_outputs, n_inputs);
    model.probe_count = static_cast<int>(net.probes.size());

    auto element_by_name = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < net.elements.size(); ++i) {
            if (net.elements[i].name == name) return static_cast<int>(i);
        }
        throw SimError("circuit", "probe targets unknown element '" + name + "'");
    };

    auto set_output_row = [&](int row, const Eigen::RowVectorXd& r) {
        model.C.row(row) = r.head(n_states);
        model.D.row(row) = r.tail(n_inputs);
    };

    int row = 0;
    for (const auto& p : net.probes) {
        model.output_labels.push_back(p.name);
        if (p.kind == ProbeKind::NodeVoltage) {
            set_output_row(row, z_row_voltage(p.node_a) - z_row_voltage(p.node_b));
        } else {
            const int ei = element_by_name(p.element);
            const auto& e = net.elements[ei];
            const int a = e.nodes[0];
            const int b = e.nodes.size() > 1 ? e.nodes[1] : 0;
            if (std::holds_alternative<Resistor>(e.kind) ||
                std::holds_alternative<ActiveSwitchElem>(e.kind) ||
                std::holds_alternative<DiodeElem>(e.kind)) {
                set_output_row(row, (z_row_voltage(a) - z_row_voltage(b)) * element_g[ei]);
            } else if (std::holds_alternative<Inductor>(e.kind)) {
                model.C(row, state_of_element[ei]) = 1.0;
            } else if (std::holds_alternative<MutualPair>(e.kind)) {
                model.C(row, state_of_element[ei] + (p.winding == 2 ? 1 : 0)) = 1.0;
            } else if (std::holds_alternative<Capacitor>(e.kind) ||
                       std::holds_alternative<VoltageSourceElem>(e.kind)) {
                set_output_row(row, z_row_branch(lay.branch_row[ei]));
            } else {
                model.D(row, input_of_element[ei]) = 1.0;  // current source
            }
        }
        ++row;
    }

    for (std::size_t d = 0; d < net.diode_count(); ++d) {
        const int ei = diode_element[d];
        const auto& e = net.elements[ei];
        const int a = e.nodes[0];
        const int b = e.nodes[1];
        model.output_labels.push_back(net.diode_ids[d] + ".i");
        set_output_row(row, (z_row_voltage(a) - z_row_voltage(b)) * element_g[ei]);
        ++row;
        model.output_labels.push_back(net.diode_ids[d] + ".v");
        set_output_row(row, z_row_voltage(a) - z_row_voltage(b));
        ++row;
    }

    if (n_states > 0) {
        Eigen::EigenSolver<Mat> es(model.A, /*computeEigenvectors=*/false);
        model.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    }

    return model;
}

}  // namespace eschil
