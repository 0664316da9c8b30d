#include "eschil/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace eschil {

namespace {

// Real-axis stability reach of the order-p Taylor update, conservative for
// every p >= 1. Keeps fast blocked-switch modes from amplifying roundoff
// once their transient has decayed below the error estimate.
constexpr Real kStabilityReach = 2.0;

std::vector<Vec> input_stack(const Netlist& net, int p, Real t) {
    std::vector<Vec> u(p + 1);
    for (int i = 0; i <= p; ++i) u[i] = net.input_derivatives(i, t);
    return u;
}

}  // namespace

IntegrateOutcome integrate_to_barrier(const LtiModel& model, const Netlist& net, const Vec& x0,
                                      Real t0, Real t_barrier,
                                      std::span<const PassiveMonitor> monitors,
                                      StepControl& ctrl, const SampleFn& on_sample) {
    if (!(t0 < t_barrier)) {
        throw SimError("solver", "integration window is empty", t0);
    }

    ctrl.stability_cap = model.spectral_radius > 0.0
                             ? kStabilityReach / model.spectral_radius
                             : std::numeric_limits<Real>::infinity();
    ctrl.p = std::clamp(ctrl.p, std::max(ctrl.p_min, 2), ctrl.p_max);
    ctrl.dt = std::clamp(ctrl.dt, ctrl.dt_min, ctrl.dt_ceiling());

    IntegrateOutcome out;
    Vec x = x0;
    Real t = t0;

    while (t < t_barrier) {
        const auto stack = compute_derivatives(model, x, input_stack(net, ctrl.p, t), ctrl.p, t);
        const Real norm_x = x.size() > 0 ? x.lpNorm<Eigen::Infinity>() : 0.0;

        bool accepted = false;
        Real dt_taken = 0.0;
        bool landed_on_barrier = false;

        Real land_target = 0.0;
        bool lands = false;
        while (!accepted) {
            Real dt_try = ctrl.dt;

            // Absolute landing target: the barrier, or an earlier source
            // breakpoint the Taylor expansion must not smooth over.
            Real target = t_barrier;
            if (auto bp = net.next_source_breakpoint(t)) {
                if (*bp < target) target = *bp;
            }
            lands = dt_try >= target - t;
            if (lands) dt_try = target - t;

            const Real err = estimate_lte(stack, dt_try);
            const Real saved_proposal = ctrl.dt;
            ctrl.dt = dt_try;
            accepted = adapt_step(ctrl, err, norm_x);
            if (accepted) {
                dt_taken = dt_try;
                land_target = target;
                landed_on_barrier = lands;
                // A step truncated by a landing must not feed its artificially
                // small error back into the step proposal.
                if (lands) ctrl.dt = std::max(ctrl.dt, saved_proposal);
            } else {
                ++out.steps_rejected;
            }
        }

        // Check all armed monitors over the accepted step. The earliest t*
        // wins; crossings tied with it within 1e-15 s fire together so that
        // symmetric bridge pairs commutate in one event.
        std::vector<std::size_t> fired;
        std::vector<CrossingReport> reports;
        Real earliest = std::numeric_limits<Real>::infinity();
        for (const auto& m : monitors) {
            const Real y0 = stack.y_derivs[0][m.output_index];
            if (auto rep = locate_crossing(stack, effective_monitor(m, y0), dt_taken)) {
                fired.push_back(m.diode_index);
                reports.push_back(*rep);
                earliest = std::min(earliest, rep->offset);
            }
        }
        for (std::size_t i = fired.size(); i-- > 0;) {
            if (reports[i].offset - earliest > 1e-15) {
                fired.erase(fired.begin() + static_cast<std::ptrdiff_t>(i));
                reports.erase(reports.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }

        if (!fired.empty()) {
            const Real t_star = t + earliest;
            for (auto& rep : reports) rep.t_star = t + rep.offset;
            out.terminal = IntegrateOutcome::Terminal::PassiveEvent;
            out.x_end = taylor_advance(stack, earliest);
            out.t_end = t_star;
            out.diodes = std::move(fired);
            out.crossings = std::move(reports);
            ++out.steps_accepted;
            if (on_sample) {
                const Vec y = model.C * out.x_end + model.D * net.input_values(t_star);
                on_sample(t_star, y);
            }
            return out;
        }

        x = taylor_advance(stack, dt_taken);
        t = landed_on_barrier ? land_target : t + dt_taken;
        ++out.steps_accepted;
        if (on_sample) {
            const Vec y = model.C * x + model.D * net.input_values(t);
            on_sample(t, y);
        }
    }

    out.terminal = IntegrateOutcome::Terminal::ReachedBarrier;
    out.x_end = x;
    out.t_end = t_barrier;
    return out;
}

}  // namespace eschil
