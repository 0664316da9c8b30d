#pragma once

#include "eschil/netlist.hpp"
#include "eschil/solver.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace eschil {

/// One armed watcher on a diode output: conducting diodes watch their
/// current falling through ~0 A, blocked diodes watch their forward voltage
/// rising through the turn-on threshold.
struct PassiveMonitor {
    enum class Watch { CurrentZero, VoltageThreshold };
    enum class Direction { Falling, Rising };

    std::size_t diode_index = 0;
    Watch watch = Watch::CurrentZero;
    Index output_index = 0;
    Real threshold = 0.0;
    Direction direction = Direction::Falling;
};

struct CrossingReport {
    Real t_star = 0.0;   // absolute event time (s)
    Real offset = 0.0;   // t_star - t_k, inside [0, dt_step]
    int iterations = 0;
    Real residual = 0.0;  // |y(t*) - threshold|
};

/// Exactly one armed monitor per diode, matching its conduction bit.
std::vector<PassiveMonitor> armed_monitors(const Netlist& net, const SwitchConfig& cfg);

Real monitor_hysteresis(const PassiveMonitor& monitor, Real scale = 1e-6);

/// A monitor whose output already sits past the nominal threshold (inside
/// the hysteresis band, after a reverted toggle) is re-armed one band
/// further out so that it can fire again instead of going silent.
PassiveMonitor effective_monitor(const PassiveMonitor& monitor, Real y0);

/// Evaluate the output Taylor polynomial y(t_k + dt) from the stack's
/// already-computed y derivatives.
Real output_poly_eval(const DerivativeStack& stack, Index output_index, Real dt);

/// Locate the smallest directed threshold crossing of the monitored output
/// inside (0, dt_step]. Secant iteration seeded from the bracketing
/// endpoints, bisection fallback when an iterate leaves the bracket.
/// Returns nullopt when no directed crossing exists.
std::optional<CrossingReport> locate_crossing(const DerivativeStack& stack,
                                              const PassiveMonitor& monitor, Real dt_step);

/// Toggle the fired diode's conduction bit.
SwitchConfig diode_transition(const SwitchConfig& cfg, std::size_t diode_index);

using ModelProvider = std::function<const LtiModel&(const SwitchConfig&)>;

struct ConsistencyResult {
    SwitchConfig config;
    std::vector<std::size_t> toggled;  // re-toggled diodes, application order
};

/// After any switch event, settle the diode bits to a mode consistent with
/// the state at the event instant: blocked diodes already past their forward
/// threshold turn on, conducting diodes already below -hysteresis turn off,
/// all simultaneous violators per round, repeated to a fixed point. Throws
/// SimError("detect", ...) when the modes cycle (degenerate model).
ConsistencyResult post_event_consistency(const ModelProvider& model_of, const Netlist& net,
                                         SwitchConfig cfg, const Vec& x, const Vec& u,
                                         Real hysteresis_scale = 1e-6);

}  // namespace eschil
