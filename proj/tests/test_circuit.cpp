#include <doctest.h>

#include "eschil/mode_cache.hpp"
#include "test_helpers.hpp"

#include <Eigen/Eigenvalues>

using namespace eschil;
namespace th = eschil::testing;

TEST_CASE("minimal RC parses to one state variable") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    CHECK(net.state_count() == 1);
    CHECK(net.input_count() == 0);
    CHECK(net.initial_state()[0] == 1.0);
}

TEST_CASE("receiver tank parses to two state variables") {
    const Netlist net = parse_netlist(th::receiver_tank_json());
    CHECK(net.state_count() == 2);
    CHECK(net.input_count() == 1);
}

TEST_CASE("undeclared node is rejected") {
    const std::string bad = R"({
      "nodes": ["gnd"],
      "elements": [
        {"kind": "resistor", "name": "R1", "nodes": ["n1", "gnd"], "ohm": 1.0}
      ]
    })";
    CHECK_THROWS_WITH_AS(parse_netlist(bad), doctest::Contains("undeclared node"), SimError);
}

TEST_CASE("node without a path to ground is rejected") {
    const std::string bad = R"({
      "nodes": ["gnd", "n1", "n2", "n3"],
      "elements": [
        {"kind": "resistor", "name": "R1", "nodes": ["n1", "gnd"], "ohm": 1.0},
        {"kind": "resistor", "name": "R2", "nodes": ["n2", "n3"], "ohm": 1.0}
      ]
    })";
    CHECK_THROWS_WITH_AS(parse_netlist(bad), doctest::Contains("floating node"), SimError);
}

TEST_CASE("validation catches bad element values") {
    CHECK_THROWS_AS(parse_netlist(R"({
      "nodes": ["gnd", "n1"],
      "elements": [{"kind": "resistor", "name": "R1", "nodes": ["n1", "gnd"], "ohm": -1.0}]
    })"),
                    SimError);
    CHECK_THROWS_WITH_AS(parse_netlist(R"({
      "nodes": ["gnd", "n1"],
      "elements": [{"kind": "frobnicator", "name": "X1", "nodes": ["n1", "gnd"], "ohm": 1.0}]
    })"),
                         doctest::Contains("unknown element kind"), SimError);
    CHECK_THROWS_WITH_AS(parse_netlist(R"({
      "nodes": ["gnd", "p1", "s1"],
      "elements": [{"kind": "mutual_pair", "name": "T1",
                    "nodes": ["p1", "gnd", "s1", "gnd"],
                    "l1": 1e-6, "l2": 1e-6, "m": 2e-6}]
    })"),
                         doctest::Contains("coupling"), SimError);
    CHECK_THROWS_WITH_AS(parse_netlist(R"({
      "nodes": ["gnd", "n1"],
      "elements": [
        {"kind": "diode", "name": "D1", "nodes": ["n1", "gnd"], "id": "D"},
        {"kind": "diode", "name": "D2", "nodes": ["gnd", "n1"], "id": "D"}
      ]
    })"),
                         doctest::Contains("duplicate diode id"), SimError);
}

TEST_CASE("parallel RC reduces to dv/dt = -v/RC") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    REQUIRE(m.A.rows() == 1);
    CHECK(m.A(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(m.B.cols() == 0);
    REQUIRE(m.C.rows() == 1);
    CHECK(m.C(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("series RL reduces to di/dt = (Vs - R i)/L") {
    const Netlist net = parse_netlist(th::rl_series_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    REQUIRE(m.A.rows() == 1);
    CHECK(m.A(0, 0) == doctest::Approx(-4.0).epsilon(1e-14));
    REQUIRE(m.B.cols() == 1);
    CHECK(m.B(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m.state_labels[0] == "L1.i");
    CHECK(m.input_labels[0] == "Vs.u");
}

TEST_CASE("all-blocked bridge mode is strictly stable") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    Eigen::EigenSolver<Mat> es(m.A);
    for (Index i = 0; i < m.A.rows(); ++i) {
        CHECK(es.eigenvalues()[i].real() < 0.0);
    }
    CHECK(m.spectral_radius > 0.0);
}

TEST_CASE("diode outputs are always present") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    CHECK(m.output_count() == 2 + 8);  // 2 probes + (i, v) per diode
    CHECK(m.output_labels[m.diode_current_output(0)] == "D1.i");
    CHECK(m.output_labels[m.diode_voltage_output(3)] == "D4.v");
}

TEST_CASE("mode cache memoizes per configuration") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    ModeCache cache(net);

    const SwitchConfig cfg = net.initial_config();
    const LtiModel& a = cache.get(cfg);
    const LtiModel& b = cache.get(cfg);
    CHECK(&a == &b);
    CHECK(cache.reduction_count() == 1);

    SwitchConfig c1 = cfg;
    c1.set_diode(0, true);
    SwitchConfig c2 = c1;
    c2.set_diode(3, true);
    cache.get(c1);
    cache.get(c2);
    CHECK(cache.size() == 3);
    CHECK(cache.reduction_count() == 3);

    // One flipped diode bit changes the stamped matrices.
    CHECK((cache.get(c1).A - a.A).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("stamping is deterministic") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    const LtiModel m1 = stamp_and_reduce(net, net.initial_config());
    const LtiModel m2 = stamp_and_reduce(net, net.initial_config());
    CHECK(m1.A == m2.A);
    CHECK(m1.B == m2.B);
    CHECK(m1.C == m2.C);
    CHECK(m1.D == m2.D);
}

TEST_CASE("resistive divider DC gain matches an independent nodal solve") {
    // Ladder: Vs - R1 - n1 - R2 - n2 - R3 - gnd, probes at n1 and n2.
    const std::string ladder = R"({
      "nodes": ["gnd", "top", "n1", "n2"],
      "elements": [
        {"kind": "voltage_source", "name": "Vs", "nodes": ["top", "gnd"],
         "waveform": {"type": "dc", "value": 10.0}},
        {"kind": "resistor", "name": "R1", "nodes": ["top", "n1"], "ohm": 100.0},
        {"kind": "resistor", "name": "R2", "nodes": ["n1", "n2"], "ohm": 220.0},
        {"kind": "resistor", "name": "R3", "nodes": ["n2", "gnd"], "ohm": 330.0}
      ],
      "probes": [
        {"name": "v1", "kind": "node_voltage", "target": "n1"},
        {"name": "v2", "kind": "node_voltage", "target": "n2"}
      ]
    })";
    const Netlist net = parse_netlist(ladder);
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    REQUIRE(m.A.rows() == 0);

    // Independent check: series current from the resistor chain.
    const double i = 10.0 / (100.0 + 220.0 + 330.0);
    const double v1 = 10.0 - 100.0 * i;
    const double v2 = 330.0 * i;
    CHECK(m.D(0, 0) * 10.0 == doctest::Approx(v1).epsilon(1e-12));
    CHECK(m.D(1, 0) * 10.0 == doctest::Approx(v2).epsilon(1e-12));

    // Divider outputs stay within the source bounds.
    CHECK(m.D(0, 0) >= 0.0);
    CHECK(m.D(0, 0) <= 1.0);
}

TEST_CASE("blocked-state resistance scaling only perturbs leakage") {
    const Netlist net_a = parse_netlist(th::bridge_rectifier_json("1e5"));
    const Netlist net_b = parse_netlist(th::bridge_rectifier_json("1e6"));
    // Conducting pair D1/D4, D2/D3 blocked: the loaded mode of each half-wave.
    SwitchConfig cfg = net_a.initial_config();
    cfg.set_diode(0, true);
    cfg.set_diode(3, true);
    const LtiModel ma = stamp_and_reduce(net_a, cfg);
    const LtiModel mb = stamp_and_reduce(net_b, cfg);

    // Steady response at the source frequency via (jwI - A)^-1 B.
    const Real w = 2.0 * M_PI * 40e3;
    using CMat = Eigen::MatrixXcd;
    const auto gain = [&](const LtiModel& m) {
        CMat jw = CMat::Identity(m.A.rows(), m.A.cols()) * std::complex<Real>(0.0, w);
        CMat h = m.C.cast<std::complex<Real>>() *
                     (jw - m.A.cast<std::complex<Real>>()).inverse() *
                     m.B.cast<std::complex<Real>>() +
                 m.D.cast<std::complex<Real>>();
        return h;
    };
    const CMat ha = gain(ma);
    const CMat hb = gain(mb);

    // Blocked diode leakage drops by less than the 10x resistance ratio.
    const int d2_i = static_cast<int>(ma.diode_current_output(1));
    const Real leak_ratio = std::abs(ha(d2_i, 0)) / std::abs(hb(d2_i, 0));
    CHECK(leak_ratio > 1.0);
    CHECK(leak_ratio < 10.0);

    // The DC-side probe voltage barely moves.
    const Real va = std::abs(ha(1, 0));
    const Real vb = std::abs(hb(1, 0));
    CHECK(std::abs(va - vb) / std::max(va, vb) < 1e-3);
}
