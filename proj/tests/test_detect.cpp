#include <doctest.h>

#include "eschil/detect.hpp"
#include "eschil/mode_cache.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace eschil;
namespace th = eschil::testing;

namespace {

DerivativeStack stack_with_y(std::vector<Real> y_coeffs) {
    DerivativeStack s;
    const int p = static_cast<int>(y_coeffs.size()) - 1;
    s.x_derivs.assign(p + 1, Vec::Zero(1));
    s.u_derivs.assign(p + 1, Vec::Zero(0));
    for (Real c : y_coeffs) {
        Vec y(1);
        y << c;
        s.y_derivs.push_back(y);
    }
    return s;
}

}  // namespace

TEST_CASE("output polynomial evaluation") {
    const auto s = stack_with_y({1.0, -2.0, 0.0});
    CHECK(output_poly_eval(s, 0, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(output_poly_eval(s, 0, 0.0) == 1.0);
    CHECK_THROWS_AS(output_poly_eval(s, 3, 0.1), SimError);
}

TEST_CASE("output polynomial tracks the closed form") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    Vec x(1);
    x << 1.0;
    std::vector<Vec> u(5, Vec::Zero(0));
    const auto s = compute_derivatives(m, x, u, 4, 0.0);
    const Real got = output_poly_eval(s, 0, 0.1);
    CHECK(std::abs(got - std::exp(-0.1)) / std::exp(-0.1) < 1e-7);
}

TEST_CASE("secant locates a linear crossing exactly") {
    const auto s = stack_with_y({1.0, -2.0});
    PassiveMonitor mon;
    mon.output_index = 0;
    mon.threshold = 0.0;
    mon.direction = PassiveMonitor::Direction::Falling;

    const auto rep = locate_crossing(s, mon, 1.0);
    REQUIRE(rep.has_value());
    CHECK(rep->offset == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep->iterations <= 2);
    CHECK(rep->residual <= 1e-9);
}

TEST_CASE("no crossing when the output moves away from the threshold") {
    const auto s = stack_with_y({1.0, 1.0});
    PassiveMonitor mon;
    mon.output_index = 0;
    mon.threshold = 0.0;
    mon.direction = PassiveMonitor::Direction::Falling;
    CHECK_FALSE(locate_crossing(s, mon, 1.0).has_value());

    // Rising monitor must not fire on a falling signal either.
    const auto s2 = stack_with_y({1.0, -2.0});
    mon.direction = PassiveMonitor::Direction::Rising;
    CHECK_FALSE(locate_crossing(s2, mon, 1.0).has_value());
}

TEST_CASE("first crossing wins on a wiggly polynomial") {
    // y(t) = -(t - 0.2)(t - 0.5)(t - 0.8): three roots inside the step, the
    // endpoints bracket the falling direction, and the earliest root must
    // win. The stack stores unscaled derivatives.
    const auto s = stack_with_y({0.08, -0.66, 3.0, -6.0});
    PassiveMonitor mon;
    mon.output_index = 0;
    mon.threshold = 0.0;
    mon.direction = PassiveMonitor::Direction::Falling;
    const auto rep = locate_crossing(s, mon, 1.0);
    REQUIRE(rep.has_value());
    CHECK(rep->offset == doctest::Approx(0.2).epsilon(1e-7));
}

TEST_CASE("diode transition toggles exactly one bit") {
    SwitchConfig cfg(0, 4);
    cfg.set_diode(0, true);
    const SwitchConfig next = diode_transition(cfg, 0);
    CHECK_FALSE(next.diode(0));
    for (std::size_t d = 1; d < 4; ++d) CHECK(next.diode(d) == cfg.diode(d));
    CHECK(diode_transition(next, 2).diode(2));
}

TEST_CASE("armed monitors match the conduction bits") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    SwitchConfig cfg = net.initial_config();
    cfg.set_diode(1, true);
    const auto monitors = armed_monitors(net, cfg);
    REQUIRE(monitors.size() == 4);
    for (const auto& m : monitors) {
        if (m.diode_index == 1) {
            CHECK(m.watch == PassiveMonitor::Watch::CurrentZero);
            CHECK(m.direction == PassiveMonitor::Direction::Falling);
            CHECK(m.threshold == 0.0);
        } else {
            CHECK(m.watch == PassiveMonitor::Watch::VoltageThreshold);
            CHECK(m.direction == PassiveMonitor::Direction::Rising);
            CHECK(m.threshold == 0.7);
        }
    }
}

TEST_CASE("consistency pass accepts a settled DCM mode") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    ModeCache cache(net);
    auto provider = [&](const SwitchConfig& c) -> const LtiModel& { return cache.get(c); };

    // Zero tank current, source at zero volts: every diode voltage is far
    // below the turn-on threshold.
    Vec x = net.initial_state();
    const auto result = post_event_consistency(provider, net, net.initial_config(), x,
                                               net.input_values(0.0));
    CHECK(result.toggled.empty());
    CHECK(result.config == net.initial_config());
}

TEST_CASE("consistency pass turns on a forward-biased pair at once") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    ModeCache cache(net);
    auto provider = [&](const SwitchConfig& c) -> const LtiModel& { return cache.get(c); };

    // Positive tank current pushed through the blocked bridge: D1 and D4
    // see forward voltages far above threshold and must both turn on.
    Vec x = net.initial_state();
    x[0] = 0.01;  // i_s
    x[1] = 10.0;  // v_dc
    const auto result =
        post_event_consistency(provider, net, net.initial_config(), x, net.input_values(0.0));
    CHECK(result.config.diode(0));
    CHECK(result.config.diode(3));
    CHECK_FALSE(result.config.diode(1));
    CHECK_FALSE(result.config.diode(2));
    CHECK(result.toggled.size() == 2);
}

TEST_CASE("mode cycle is detected and reported") {
    // Two hand-built modes that each invalidate themselves: the blocked
    // mode shows a forward voltage above threshold, the conducting mode a
    // current below the hysteresis band.
    const std::string json = R"({
      "nodes": ["gnd", "n1"],
      "elements": [
        {"kind": "voltage_source", "name": "Vs", "nodes": ["n1", "gnd"],
         "waveform": {"type": "dc", "value": 1.0}},
        {"kind": "diode", "name": "D1", "nodes": ["n1", "gnd"], "id": "D1"}
      ]
    })";
    const Netlist net = parse_netlist(json);

    LtiModel blocked;
    blocked.A = Mat(0, 0);
    blocked.B = Mat(0, 1);
    blocked.C = Mat::Zero(2, 0);
    blocked.D = Mat::Zero(2, 1);
    blocked.D(1, 0) = 2.0;  // v_D = 2 V > 0.7: wants to conduct
    LtiModel conducting = blocked;
    conducting.D(1, 0) = 0.0;
    conducting.D(0, 0) = -1.0;  // i_D = -1 A < 0: wants to block

    auto provider = [&](const SwitchConfig& c) -> const LtiModel& {
        return c.diode(0) ? conducting : blocked;
    };
    Vec x(0);
    Vec u(1);
    u << 1.0;
    CHECK_THROWS_WITH_AS(post_event_consistency(provider, net, SwitchConfig(0, 1), x, u),
                         doctest::Contains("cycle"), SimError);
}
