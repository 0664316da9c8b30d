#include "eschil/detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace eschil {

namespace {

const DiodeElem& diode_elem(const Netlist& net, std::size_t diode_index) {
    std::size_t d = 0;
    for (const auto& e : net.elements) {
        if (const auto* de = std::get_if<DiodeElem>(&e.kind)) {
            if (d == diode_index) return *de;
            ++d;
        }
    }
    throw SimError("detect", "diode index out of range");
}

}  // namespace

std::vector<PassiveMonitor> armed_monitors(const Netlist& net, const SwitchConfig& cfg) {
    std::vector<PassiveMonitor> out;
    const Index probe_count = static_cast<Index>(net.probes.size());
    for (std::size_t d = 0; d < net.diode_count(); ++d) {
        const auto& de = diode_elem(net, d);
        PassiveMonitor m;
        m.diode_index = d;
        if (cfg.diode(d)) {
            m.watch = PassiveMonitor::Watch::CurrentZero;
            m.output_index = probe_count + 2 * static_cast<Index>(d);
            m.threshold = de.i_threshold;
            m.direction = PassiveMonitor::Direction::Falling;
        } else {
            m.watch = PassiveMonitor::Watch::VoltageThreshold;
            m.output_index = probe_count + 2 * static_cast<Index>(d) + 1;
            m.threshold = de.v_threshold;
            m.direction = PassiveMonitor::Direction::Rising;
        }
        out.push_back(m);
    }
    return out;
}

Real monitor_hysteresis(const PassiveMonitor& monitor, Real scale) {
    return scale * std::max(Real(1), std::abs(monitor.threshold));
}

PassiveMonitor effective_monitor(const PassiveMonitor& monitor, Real y0) {
    PassiveMonitor m = monitor;
    const Real h = monitor_hysteresis(monitor);
    if (m.direction == PassiveMonitor::Direction::Rising) {
        if (y0 >= m.threshold) m.threshold = std::max(m.threshold, y0) + 2.0 * h;
    } else {
        if (y0 <= m.threshold) m.threshold = std::min(m.threshold, y0) - 2.0 * h;
    }
    return m;
}

Real output_poly_eval(const DerivativeStack& stack, Index output_index, Real dt) {
    if (output_index < 0 || output_index >= static_cast<Index>(stack.y_derivs[0].size())) {
        throw SimError("detect", "output index out of range");
    }
    const int p = stack.order();
    Real acc = stack.y_derivs[p][output_index];
    for (int i = p; i >= 1; --i) {
        acc = stack.y_derivs[i - 1][output_index] + (dt / static_cast<Real>(i)) * acc;
    }
    return acc;
}

std::optional<CrossingReport> locate_crossing(const DerivativeStack& stack,
                                              const PassiveMonitor& monitor, Real dt_step) {
    const bool falling = monitor.direction == PassiveMonitor::Direction::Falling;
    auto g = [&](Real tau) {
        return output_poly_eval(stack, monitor.output_index, tau) - monitor.threshold;
    };

    const Real g0 = g(0.0);
    const Real g1 = g(dt_step);
    // Directed endpoint bracket; a start already past the threshold is the
    // consistency pass's business, not a new crossing.
    if (falling ? !(g0 > 0.0 && g1 <= 0.0) : !(g0 < 0.0 && g1 >= 0.0)) {
        return std::nullopt;
    }

    // Coarse scan for the first directed sign change so that the smallest
    // root wins when the polynomial wiggles.
    const int scan = std::max(8, 2 * stack.order());
    Real a = 0.0, ga = g0;
    Real b = dt_step, gb = g1;
    for (int i = 1; i <= scan; ++i) {
        const Real tau = dt_step * static_cast<Real>(i) / static_cast<Real>(scan);
        const Real gt = g(tau);
        if (falling ? gt <= 0.0 : gt >= 0.0) {
            b = tau;
            gb = gt;
            break;
        }
        a = tau;
        ga = gt;
    }

    const Real residual_tol = 1e-9 * std::max(Real(1), std::abs(monitor.threshold));
    const Real time_tol = 1e-15;

    CrossingReport rep;
    Real lo = a, hi = b;
    Real t = b, gt = gb;

    if (std::abs(gb) > residual_tol) {
        Real xa = a, fa = ga;  // secant iterates
        Real xb = b, fb = gb;
        bool converged = false;
        for (int it = 1; it <= 50; ++it) {
            rep.iterations = it;
            if (fb == fa) {
                t = 0.5 * (lo + hi);
            } else {
                t = xb - fb * (xb - xa) / (fb - fa);
                if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);  // bisection fallback
            }
            gt = g(t);
            if (std::abs(gt) <= residual_tol || (hi - lo) <= time_tol) {
                converged = true;
                break;
            }
            // Shrink the bracket around the directed crossing.
            if (falling ? gt <= 0.0 : gt >= 0.0) {
                hi = t;
            } else {
                lo = t;
            }
            xa = xb;
            fa = fb;
            xb = t;
            fb = gt;
        }
        if (!converged) {
            throw SimError("detect", "crossing search failed to converge");
        }
    } else {
        rep.iterations = 1;  // the scan endpoint already sits on the root
    }

    rep.offset = t;
    rep.t_star = stack.t_k + t;
    rep.residual = std::abs(gt);
    return rep;
}

SwitchConfig diode_transition(const SwitchConfig& cfg, std::size_t diode_index) {
    SwitchConfig next = cfg;
    next.toggle_diode(diode_index);
    return next;
}

ConsistencyResult post_event_consistency(const ModelProvider& model_of, const Netlist& net,
                                         SwitchConfig cfg, const Vec& x, const Vec& u,
                                         Real hysteresis_scale) {
    ConsistencyResult result;
    std::set<std::uint64_t> visited;
    visited.insert(cfg.key());

    const std::size_t nd = net.diode_count();
    const std::size_t max_rounds = (nd >= 20) ? (1u << 20) : (std::size_t(1) << nd) + 1;

    for (std::size_t round = 0; round <= max_rounds; ++round) {
        const LtiModel& model = model_of(cfg);
        const Vec y = model.C * x + model.D * u;

        // A conducting diode next to blocked ones carries their leakage at
        // the event instant, so the reverse-current test must tolerate the
        // total leakage level on top of the hysteresis band.
        Real leakage = 0.0;
        for (std::size_t d = 0; d < nd; ++d) {
            if (!cfg.diode(d)) leakage += std::abs(y[model.diode_current_output(d)]);
        }

        std::vector<std::size_t> violators;
        for (std::size_t d = 0; d < nd; ++d) {
            const auto& de = diode_elem(net, d);
            if (cfg.diode(d)) {
                const Real hyst = hysteresis_scale * std::max(Real(1), std::abs(de.i_threshold));
                if (y[model.diode_current_output(d)] < de.i_threshold - hyst - leakage) {
                    violators.push_back(d);
                }
            } else {
                const Real hyst = hysteresis_scale * std::max(Real(1), std::abs(de.v_threshold));
                if (y[model.diode_voltage_output(d)] > de.v_threshold + hyst) violators.push_back(d);
            }
        }
        if (violators.empty()) {
            result.config = cfg;
            return result;
        }
        for (std::size_t d : violators) {
            cfg.toggle_diode(d);
            result.toggled.push_back(d);
        }
        if (!visited.insert(cfg.key()).second) {
            std::string cycle = "no consistent diode mode: configs cycle through";
            for (auto k : visited) cycle += " " + std::to_string(k);
            throw SimError("detect", cycle);
        }
    }
    throw SimError("detect", "diode consistency did not reach a fixed point");
}

}  // namespace eschil
