#include <doctest.h>

#include "eschil/baseline.hpp"
#include "eschil/mode_cache.hpp"
#include "test_helpers.hpp"

#include <cmath>

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
    return m;
}

}  // namespace

TEST_CASE("forward Euler step") {
    const LtiModel m = scalar_model(-1.0);
    Vec x(1);
    x << 1.0;
    CHECK(fe_step(m, x, Vec(0), 0.1)[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(fe_step(m, x, Vec(0), 0.0)[0] == 1.0);
}

TEST_CASE("forward Euler inflates the energy of an undamped oscillator") {
    LtiModel m;
    m.A = Mat(2, 2);
    m.A << 0.0, 1.0, -1.0, 0.0;
    m.B = Mat(2, 0);
    m.C = Mat::Identity(2, 2);
    m.D = Mat(2, 0);
    Vec x(2);
    x << 1.0, 0.0;
    Real prev_energy = 1.0;
    for (int i = 0; i < 100; ++i) {
        x = fe_step(m, x, Vec(0), 0.05);
        const Real energy = x.squaredNorm();
        CHECK(energy > prev_energy);
        prev_energy = energy;
    }
}

TEST_CASE("backward Euler step") {
    const LtiModel m = scalar_model(-1.0);
    ImplicitFactorCache cache;
    Vec x(1);
    x << 1.0;
    CHECK(be_step(cache, m, x, Vec(0), 0.1)[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
    CHECK(be_step(cache, m, x, Vec(0), 1e-300)[0] == doctest::Approx(1.0).epsilon(1e-12));

    // A-stability on a stiff decay.
    const LtiModel stiff = scalar_model(-1e6);
    CHECK(std::abs(be_step(cache, stiff, x, Vec(0), 1e-3)[0]) < 1.0);
}

TEST_CASE("trapezoidal step is second order") {
    const LtiModel m = scalar_model(-1.0);
    ImplicitFactorCache cache;
    Vec x(1);
    x << 1.0;
    auto err = [&](Real h) {
        return std::abs(trap_step(cache, m, x, Vec(0), Vec(0), h)[0] - std::exp(-h));
    };
    CHECK(err(0.1) / err(0.05) == doctest::Approx(8.0).epsilon(0.3));
}

TEST_CASE("fixed-step runs converge at first order on the RC decay") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    NoneController ctl;

    auto end_error = [&](FixedMethod method, Real h) {
        ModeCache cache(net);
        FixedStepOptions opt;
        opt.method = method;
        opt.h = h;
        opt.record_stride = 1000000;  // endpoints only
        const Waveform wf = run_ts_chil(net, cache, ctl, 0.25, 1.0, opt);
        return std::abs(wf.cols[0].back() - std::exp(-1.0));
    };

    for (FixedMethod method : {FixedMethod::ForwardEuler, FixedMethod::BackwardEuler}) {
        const Real e1 = end_error(method, 1e-3);
        const Real e2 = end_error(method, 5e-4);
        CHECK(e1 / e2 > 2.0 / 1.5);
        CHECK(e1 / e2 < 2.0 * 1.5);
    }
}

TEST_CASE("grid rows land on exact step multiples") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    NoneController ctl;
    ModeCache cache(net);
    FixedStepOptions opt;
    opt.method = FixedMethod::ForwardEuler;
    opt.h = 1e-7;
    opt.record_stride = 10;
    const Waveform wf = run_ts_chil(net, cache, ctl, 25e-6, 100e-6, opt);
    for (const Real t : wf.t) {
        const Real steps = t / opt.h;
        CHECK(std::abs(steps - std::round(steps)) < 1e-6);
    }
}

TEST_CASE("step must divide the control period") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    NoneController ctl;
    ModeCache cache(net);
    FixedStepOptions opt;
    opt.h = 0.3;
    CHECK_THROWS_AS(run_ts_chil(net, cache, ctl, 0.25, 1.0, opt), SimError);
}

TEST_CASE("reference run agrees with the closed form on the RC decay") {
    const Netlist net = parse_netlist(th::rc_parallel_json());
    NoneController ctl;
    ModeCache cache(net);
    const Waveform wf = run_oracle(net, cache, ctl, 0.25, 1.0, 1e-5, 100);
    CHECK(std::abs(wf.cols[0].back() - std::exp(-1.0)) / std::exp(-1.0) < 1e-7);
}

TEST_CASE("reference run pins commutation instants of the rectifier") {
    const Netlist net = parse_netlist(th::bridge_rectifier_json());
    NoneController ctl;
    ModeCache cache(net);
    std::vector<std::pair<Real, std::size_t>> events;
    run_oracle(net, cache, ctl, 25e-6, 100e-6, 1e-9, 100, &events);
    // Light-load rectification must commutate several times over 4 periods.
    CHECK(events.size() >= 8);
    for (std::size_t i = 1; i < events.size(); ++i) {
        CHECK(events[i].first >= events[i - 1].first);
    }
}
