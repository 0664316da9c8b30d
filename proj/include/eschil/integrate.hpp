#pragma once

#include "eschil/detect.hpp"
#include "eschil/solver.hpp"

#include <functional>
#include <span>

namespace eschil {

struct IntegrateOutcome {
    enum class Terminal { ReachedBarrier, PassiveEvent };
    Terminal terminal = Terminal::ReachedBarrier;
    Vec x_end;
    Real t_end = 0.0;  // == t_barrier, or the event instant t*
    // Fired diodes for PassiveEvent: the earliest crossing plus any others
    // tied with it within 1e-15 s, with their crossing reports.
    std::vector<std::size_t> diodes;
    std::vector<CrossingReport> crossings;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
};

/// Row sink invoked at every accepted step end and at located events with
/// (t, full output vector y).
using SampleFn = std::function<void(Real t, const Vec& y)>;

/// Advance x from t0 towards t_barrier under one LTI mode, with adaptive
/// Taylor steps that never cross the barrier. Every accepted step is checked
/// against the armed monitors; the earliest located crossing truncates the
/// trajectory exactly at t*. Barrier landing uses the barrier time itself.
IntegrateOutcome integrate_to_barrier(const LtiModel& model, const Netlist& net, const Vec& x0,
                                      Real t0, Real t_barrier,
                                      std::span<const PassiveMonitor> monitors,
                                      StepControl& ctrl, const SampleFn& on_sample);

}  // namespace eschil
