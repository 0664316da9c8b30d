#include "eschil/solver.hpp"

#include <algorithm>
#include <cmath>

namespace eschil {

DerivativeStack compute_derivatives(const LtiModel& model, const Vec& x,
                                    std::vector<Vec> u_derivs, int p, Real t_k) {
    if (p < 1) throw SimError("solver", "derivative order must be >= 1");
    if (x.size() != model.state_count()) {
        throw SimError("solver", "state dimension mismatch", t_k);
    }
    if (static_cast<int>(u_derivs.size()) != p + 1) {
        throw SimError("solver", "need p+1 input derivative vectors", t_k);
    }
    for (const auto& u : u_derivs) {
        if (u.size() != model.input_count()) {
            throw SimError("solver", "input dimension mismatch", t_k);
        }
    }

    DerivativeStack s;
    s.t_k = t_k;
    s.model = &model;
    s.u_derivs = std::move(u_derivs);
    s.x_derivs.resize(p + 1);
    s.y_derivs.resize(p + 1);
    s.x_derivs[0] = x;
    for (int i = 0; i < p; ++i) {
        s.x_derivs[i + 1] = model.A * s.x_derivs[i] + model.B * s.u_derivs[i];
    }
    for (int i = 0; i <= p; ++i) {
        s.y_derivs[i] = model.C * s.x_derivs[i] + model.D * s.u_derivs[i];
    }
    return s;
}

Vec taylor_advance(const DerivativeStack& stack, Real dt) {
    // Horner form: x0 + dt*(x1 + dt/2*(x2 + dt/3*(x3 + ...)))
    const int p = stack.order();
    Vec acc = stack.x_derivs[p];
    for (int i = p; i >= 1; --i) {
        acc = stack.x_derivs[i - 1] + (dt / static_cast<Real>(i)) * acc;
    }
    return acc;
}

Real estimate_lte(const DerivativeStack& stack, Real dt) {
    const int p = stack.order();
    Real factorial = 1.0;
    for (int i = 2; i <= p; ++i) factorial *= static_cast<Real>(i);
    return stack.x_derivs[p].lpNorm<Eigen::Infinity>() * std::pow(dt, p) / factorial;
}

bool adapt_step(StepControl& ctrl, Real err, Real norm_x) {
    if (!(err >= 0.0)) throw SimError("solver", "negative error estimate");
    ctrl.lte_estimate = err;

    const Real tol = ctrl.abs_tol + ctrl.rel_tol * norm_x;
    const bool accept = err <= tol;
    const Real ceiling = ctrl.dt_ceiling();

    Real factor;
    if (err == 0.0) {
        factor = 2.0;
    } else {
        factor = 0.9 * std::pow(tol / err, 1.0 / static_cast<Real>(ctrl.p + 1));
        factor = std::clamp(factor, 0.25, 2.0);  // 4x shrink cap, 2x growth cap
    }

    if (accept) {
        const Real proposed = ctrl.dt * factor;
        ctrl.dt = std::clamp(proposed, ctrl.dt_min, ceiling);

        // Order control: raise when the configured dt_max keeps binding,
        // lower when the estimate is dominated by rounding noise.
        const bool hit_configured_max =
            ceiling == ctrl.dt_max && proposed >= ctrl.dt_max;
        ctrl.dtmax_streak = hit_configured_max ? ctrl.dtmax_streak + 1 : 0;
        if (ctrl.dtmax_streak >= 2 && ctrl.p < ctrl.p_max) {
            ctrl.p += 1;
            ctrl.dtmax_streak = 0;
        } else if (!hit_configured_max &&
                   err < 1e2 * std::numeric_limits<Real>::epsilon() * norm_x &&
                   ctrl.p > std::max(ctrl.p_min, 1)) {
            ctrl.p -= 1;
        }
        return true;
    }

    if (ctrl.dt <= ctrl.dt_min) {
        throw SimError("solver", "step size underflow at dt_min (stiffness failure), err=" +
                                     std::to_string(err));
    }
    ctrl.dt = std::max(ctrl.dt * factor, ctrl.dt_min);
    ctrl.dtmax_streak = 0;
    return false;
}

}  // namespace eschil
