#include <doctest.h>

#include "eschil/integrate.hpp"
#include "eschil/mode_cache.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <cstdio>

using namespace eschil;
namespace th = eschil::testing;

namespace {

LtiModel scalar_model(Real a, std::vector<Real> b = {}) {
    LtiModel m;
    m.A = Mat::Constant(1, 1, a);
    m.B = Mat(1, static_cast<Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) m.B(0, static_cast<Index>(i)) = b[i];
    m.C = Mat::Identity(1, 1);
    m.D = Mat::Zero(1, static_cast<Index>(b.size()));
    m.spectral_radius = std::abs(a);
    m.state_labels = {"x"};
    m.output_labels = {"x"};
    return m;
}

std::vector<Vec> zero_inputs(int p, Index m) {
    std::vector<Vec> u(p + 1, Vec::Zero(m));
    return u;
}

}  // namespace

TEST_CASE("derivative recursion on x' = -x") {
    const LtiModel m = scalar_model(-1.0);
    Vec x(1);
    x << 1.0;
    const auto s = compute_derivatives(m, x, zero_inputs(3, 0), 3, 0.0);
    REQUIRE(s.order() == 3);
    CHECK(s.x_derivs[0][0] == 1.0);
    CHECK(s.x_derivs[1][0] == -1.0);
    CHECK(s.x_derivs[2][0] == 1.0);
    CHECK(s.x_derivs[3][0] == -1.0);
}

TEST_CASE("derivative recursion on the harmonic oscillator") {
    LtiModel m;
    m.A = Mat(2, 2);
    m.A << 0.0, 1.0, -1.0, 0.0;
    m.B = Mat(2, 0);
    m.C = Mat::Identity(2, 2);
    m.D = Mat(2, 0);
    Vec x(2);
    x << 0.0, 1.0;
    const auto s = compute_derivatives(m, x, zero_inputs(2, 0), 2, 0.0);
    CHECK(s.x_derivs[1][0] == 1.0);
    CHECK(s.x_derivs[1][1] == 0.0);
    CHECK(s.x_derivs[2][0] == 0.0);
    CHECK(s.x_derivs[2][1] == -1.0);
}

TEST_CASE("derivative recursion with a DC input") {
    const LtiModel m = scalar_model(-4.0, {2.0});
    Vec x(1);
    x << 0.0;
    std::vector<Vec> u(3, Vec::Zero(1));
    u[0][0] = 1.0;
    const auto s = compute_derivatives(m, x, u, 2, 0.0);
    CHECK(s.x_derivs[0][0] == 0.0);
    CHECK(s.x_derivs[1][0] == 2.0);
    CHECK(s.x_derivs[2][0] == -8.0);
}

TEST_CASE("recursion invariants hold after the fact") {
    const Netlist net = parse_netlist(th::receiver_tank_json());
    const LtiModel m = stamp_and_reduce(net, net.initial_config());
    Vec x(2);
    x << 0.3, -0.7;
    std::vector<Vec> u(6);
    for (int i = 0; i <= 5; ++i) u[i] = net.input_derivatives(i, 1e-5);
    const auto s = compute_derivatives(m, x, u, 5, 1e-5);
    for (int i = 0; i < 5; ++i) {
        const Vec expect = m.A * s.x_derivs[i] + m.B * s.u_derivs[i];
        for (Index j = 0; j < expect.size(); ++j) {
            const Real scale = std::max(std::abs(expect[j]), 1.0);
            CHECK(std::abs(expect[j] - s.x_derivs[i + 1][j]) <=
                  8 * std::numeric_limits<Real>::epsilon() * scale);
        }
    }
    for (int i = 0; i <= 5; ++i) {
        const Vec expect = m.C * s.x_derivs[i] + m.D * s.u_derivs[i];
        CHECK((expect - s.y_derivs[i]).lpNorm<Eigen::Infinity>() <=
              8 * std::numeric_limits<Real>::epsilon() *
                  std::max(Real(1), expect.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("taylor advance reproduces the truncated exponential") {
    const LtiModel m = scalar_model(-1.0);
    Vec x(1);
    x << 1.0;
    const auto s = compute_derivatives(m, x, zero_inputs(4, 0), 4, 0.0);
    const Real got = taylor_advance(s, 0.1)[0];
    CHECK(got == doctest::Approx(0.9048375000).epsilon(1e-12));
    CHECK(std::abs(got - std::exp(-0.1)) == doctest::Approx(8.2e-8).epsilon(0.02));
}

TEST_CASE("taylor advance at a vanishing step is the identity") {
    const LtiModel m = scalar_model(-1.0);
    Vec x(1);
    x << 1.0;
    const auto s = compute_derivatives(m, x, zero_inputs(4, 0), 4, 0.0);
    CHECK(taylor_advance(s, 1e-300)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("LTE estimate is the highest retained term") {
    const LtiModel m = scalar_model(-1.0);
    Vec x(1);
    x << 1.0;
    const auto s = compute_derivatives(m, x, zero_inputs(4, 0), 4, 0.0);
    CHECK(estimate_lte(s, 0.1) == doctest::Approx(std::pow(0.1, 4) / 24.0).epsilon(1e-12));

    // Halving dt scales the estimate by exactly 2^-p.
    CHECK(estimate_lte(s, 0.05) == doctest::Approx(estimate_lte(s, 0.1) / 16.0).epsilon(1e-14));

    // Order-of-magnitude proxy for the true one-step error.
    const Real true_err = std::abs(taylor_advance(s, 0.1)[0] - std::exp(-0.1));
    CHECK(estimate_lte(s, 0.1) / true_err < 100.0);
    CHECK(estimate_lte(s, 0.1) / true_err > 0.01);
}

TEST_CASE("step adaptation follows the controller formula") {
    StepControl ctrl;
    ctrl.dt = 1.0;
    ctrl.p = 3;
    ctrl.abs_tol = 1e-6;
    ctrl.rel_tol = 0.0;
    ctrl.dt_min = 1e-12;
    ctrl.dt_max = 10.0;

    SUBCASE("error exactly at tolerance") {
        CHECK(adapt_step(ctrl, 1e-6, 1.0));
        CHECK(ctrl.dt == doctest::Approx(0.9));
    }
    SUBCASE("zero error grows at the cap") {
        CHECK(adapt_step(ctrl, 0.0, 1.0));
        CHECK(ctrl.dt == doctest::Approx(2.0));
        ctrl.dt = 9.0;
        CHECK(adapt_step(ctrl, 0.0, 1.0));
        CHECK(ctrl.dt == doctest::Approx(10.0));  // clamped at dt_max
    }
    SUBCASE("sixteenfold overshoot rejects and shrinks by 0.45") {
        CHECK_FALSE(adapt_step(ctrl, 16e-6, 1.0));
        CHECK(ctrl.dt == doctest::Approx(0.45));
    }
    SUBCASE("rejection at dt_min reports stiffness failure") {
        ctrl.dt = ctrl.dt_min;
        CHECK_THROWS_AS(adapt_step(ctrl, 1.0, 1.0), SimError);
    }
    SUBCASE("order rises after two accepted steps pinned at dt_max") {
        ctrl.dt = ctrl.dt_max;
        CHECK(adapt_step(ctrl, 0.0, 1.0));
        CHECK(adapt_step(ctrl, 0.0, 1.0));
        CHECK(ctrl.p == 4);
    }
    SUBCASE("rounding-dominated error lowers the order") {
        CHECK(adapt_step(ctrl, 1e-15, 1.0));
        CHECK(ctrl.p == 2);
    }
}

TEST_CASE("single-step order of accuracy on closed forms") {
    // Exponential and oscillator; halving dt must shrink the one-step error
    // by 2^(p+1) within a factor of 2.
    for (int p : {2, 4}) {
        {
            const LtiModel m = scalar_model(-1.0);
            Vec x(1);
            x << 1.0;
            const auto s = compute_derivatives(m, x, zero_inputs(p, 0), p, 0.0);
            const Real dt = 0.2;
            const Real e1 = std::abs(taylor_advance(s, dt)[0] - std::exp(-dt));
            const Real e2 = std::abs(taylor_advance(s, dt / 2)[0] - std::exp(-dt / 2));
            const Real ratio = e1 / e2;
            const Real expect = std::pow(2.0, p + 1);
            CHECK(ratio > expect / 2);
            CHECK(ratio < expect * 2);
        }
        {
            LtiModel m;
            m.A = Mat(2, 2);
            m.A << 0.0, 1.0, -1.0, 0.0;
            m.B = Mat(2, 0);
            m.C = Mat::Identity(2, 2);
            m.D = Mat(2, 0);
            Vec x(2);
            x << 1.0, 0.0;
            const auto s = compute_derivatives(m, x, zero_inputs(p, 0), p, 0.0);
            const Real dt = 0.2;
            auto err = [&](Real h) {
                const Vec got = taylor_advance(s, h);
                Vec exact(2);
                exact << std::cos(h), -std::sin(h);
                return (got - exact).lpNorm<Eigen::Infinity>();
            };
            const Real ratio = err(dt) / err(dt / 2);
            const Real expect = std::pow(2.0, p + 1);
            CHECK(ratio > expect / 2);
            CHECK(ratio < expect * 2);
        }
    }
}

TEST_CASE("integration lands on the barrier bit-exactly") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    ModeCache cache(net);
    const LtiModel& m = cache.get(net.initial_config());

    StepControl ctrl;
    ctrl.dt_max = 0.25;
    ctrl.dt = 1e-4;

    std::vector<Real> times;
    const Real barrier = 1.0;
    const auto out = integrate_to_barrier(m, net, net.initial_state(), 0.0, barrier, {}, ctrl,
                                          [&](Real t, const Vec&) { times.push_back(t); });

    CHECK(out.terminal == IntegrateOutcome::Terminal::ReachedBarrier);
    CHECK(times.back() == barrier);  // bit-exact landing
    CHECK(out.x_end[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("integration is deterministic") {
    const Netlist net = parse_netlist(th::receiver_tank_json());
    ModeCache cache(net);
    const LtiModel& m = cache.get(net.initial_config());

    auto run = [&] {
        StepControl ctrl;
        ctrl.dt_max = 1e-5;
        std::vector<Real> log;
        auto out = integrate_to_barrier(m, net, net.initial_state(), 0.0, 2e-4, {}, ctrl,
                                        [&](Real t, const Vec& y) {
                                            log.push_back(t);
                                            log.push_back(y[0]);
                                        });
        log.push_back(out.x_end[0]);
        log.push_back(out.x_end[1]);
        return log;
    };
    CHECK(run() == run());
}

TEST_CASE("oscillator round trip at 40 kHz") {
    // LC tank tuned so that one carrier period is one oscillation period.
    const Real f = 40e3;
    const Real c_farad = 1e-9;
    const Real l_henry = 1.0 / (std::pow(2.0 * M_PI * f, 2) * c_farad);
    char lbuf[40];
    std::snprintf(lbuf, sizeof lbuf, "%.17g", l_henry);
    const std::string json = R"({
      "nodes": ["gnd", "n1"],
      "elements": [
        {"kind": "inductor", "name": "L1", "nodes": ["n1", "gnd"], "henry": )" +
                             std::string(lbuf) + R"(},
        {"kind": "capacitor", "name": "C1", "nodes": ["n1", "gnd"], "farad": 1e-9, "v0": 1.0}
      ],
      "probes": [{"name": "v", "kind": "node_voltage", "target": "n1"}]
    })";
    const Netlist net = parse_netlist(json);
    ModeCache cache(net);
    const LtiModel& m = cache.get(net.initial_config());

    StepControl ctrl;
    ctrl.abs_tol = 1e-12;
    ctrl.rel_tol = 1e-9;
    ctrl.dt_max = 1.0 / f / 4.0;
    ctrl.dt = 1e-8;

    const auto out =
        integrate_to_barrier(m, net, net.initial_state(), 0.0, 1.0 / f, {}, ctrl, nullptr);
    CHECK(std::abs(out.x_end[0]) < 1e-6);         // i_L back to zero (state-norm relative)
    CHECK(std::abs(out.x_end[1] - 1.0) < 1e-6);   // v_C back to one volt
}

TEST_CASE("linear monitor crossing truncates the trajectory") {
    // dv/dt = -2 from a current source into a 1 F capacitor, v0 = 1:
    // the probe crosses zero at exactly t = 0.5.
    const std::string json = R"({
      "nodes": ["gnd", "n1"],
      "elements": [
        {"kind": "capacitor", "name": "C1", "nodes": ["n1", "gnd"], "farad": 1.0, "v0": 1.0},
        {"kind": "current_source", "name": "Is", "nodes": ["n1", "gnd"],
         "waveform": {"type": "dc", "value": 2.0}}
      ],
      "probes": [{"name": "v", "kind": "node_voltage", "target": "n1"}]
    })";
    const Netlist net = parse_netlist(json);
    ModeCache cache(net);
    const LtiModel& m = cache.get(net.initial_config());

    PassiveMonitor mon;
    mon.diode_index = 0;
    mon.output_index = 0;
    mon.threshold = 0.0;
    mon.direction = PassiveMonitor::Direction::Falling;

    StepControl ctrl;
    ctrl.dt_max = 0.25;
    ctrl.dt = 0.01;

    const std::vector<PassiveMonitor> monitors{mon};
    const auto out =
        integrate_to_barrier(m, net, net.initial_state(), 0.0, 1.0, monitors, ctrl, nullptr);
    CHECK(out.terminal == IntegrateOutcome::Terminal::PassiveEvent);
    REQUIRE(out.diodes.size() == 1);
    CHECK(out.diodes[0] == 0);
    CHECK(out.t_end == doctest::Approx(0.5).epsilon(1e-12));
}
