#pragma once

#include "eschil/lti_model.hpp"

#include <limits>
#include <vector>

namespace eschil {

/// Taylor derivatives of state, input and output at one expansion point t_k,
/// obtained from the LTI recursion
///   x^(i+1) = A x^(i) + B u^(i),   y^(i) = C x^(i) + D u^(i).
struct DerivativeStack {
    std::vector<Vec> x_derivs;  // p+1 vectors of length n
    std::vector<Vec> u_derivs;  // p+1 vectors of length m
    std::vector<Vec> y_derivs;  // p+1 vectors of length q
    Real t_k = 0.0;
    const LtiModel* model = nullptr;

    [[nodiscard]] int order() const { return static_cast<int>(x_derivs.size()) - 1; }
};

/// Adaptive step/order state of one solver session.
struct StepControl {
    Real dt = 1e-8;
    int p = 4;
    Real abs_tol = 1e-9;
    Real rel_tol = 1e-6;
    Real dt_min = 1e-12;
    Real dt_max = 1.0;
    int p_max = 8;
    // Floor for the order-lowering rule. The dominant-term error proxy needs
    // at least one term beyond the first derivative, so this defaults to 2.
    int p_min = 2;
    Real lte_estimate = 0.0;

    // Explicit-stability ceiling for the current mode; refreshed by the
    // integration loop from the model's spectral radius.
    Real stability_cap = std::numeric_limits<Real>::infinity();

    // consecutive accepted steps clamped at dt_max (order-raise trigger)
    int dtmax_streak = 0;

    [[nodiscard]] Real dt_ceiling() const { return std::min(dt_max, stability_cap); }
};

/// Build the derivative stack at (t_k, x) for order p. u_derivs must hold
/// p+1 input derivative vectors evaluated at t_k.
DerivativeStack compute_derivatives(const LtiModel& model, const Vec& x,
                                    std::vector<Vec> u_derivs, int p, Real t_k);

/// Evaluate the state Taylor polynomial at offset dt from t_k.
Vec taylor_advance(const DerivativeStack& stack, Real dt);

/// Dominant-term local-truncation-error proxy: ||x^(p) dt^p / p!||_inf.
Real estimate_lte(const DerivativeStack& stack, Real dt);

/// Accept/reject a step of size ctrl.dt that produced the given error
/// estimate, and update dt (and occasionally the order p). Returns true on
/// accept. Throws SimError("solver", ...) when a rejected step is already
/// at dt_min (stiffness failure for this mode).
bool adapt_step(StepControl& ctrl, Real err, Real norm_x);

}  // namespace eschil
