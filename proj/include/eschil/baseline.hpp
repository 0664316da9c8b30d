#pragma once

#include "eschil/analysis.hpp"
#include "eschil/controller.hpp"
#include "eschil/detect.hpp"
#include "eschil/mode_cache.hpp"

#include <map>
#include <utility>

namespace eschil {

enum class FixedMethod { ForwardEuler, BackwardEuler, Trapezoidal };

const char* fixed_method_name(FixedMethod m);

/// x' = x + h (A x + B u)
Vec fe_step(const LtiModel& model, const Vec& x, const Vec& u, Real h);

/// LU factorizations of (I - c h A) keyed by (config, h), shared by the
/// implicit steppers.
class ImplicitFactorCache {
public:
    const Eigen::PartialPivLU<Mat>& factor(const LtiModel& model, Real coeff_h);

private:
    std::map<std::pair<std::uint64_t, Real>, Eigen::PartialPivLU<Mat>> factors_;
};

/// x' = (I - h A)^{-1} (x + h B u_next)
Vec be_step(ImplicitFactorCache& cache, const LtiModel& model, const Vec& x, const Vec& u_next,
            Real h);

/// x' = (I - h/2 A)^{-1} ((I + h/2 A) x + h/2 B (u + u_next))
Vec trap_step(ImplicitFactorCache& cache, const LtiModel& model, const Vec& x, const Vec& u,
              const Vec& u_next, Real h);

struct FixedStepOptions {
    FixedMethod method = FixedMethod::ForwardEuler;
    Real h = 1e-7;
    std::size_t record_stride = 1;  // record every n-th grid point
};

/// Fixed-step TS-CHIL run: PWM gate states sampled on the step grid, diode
/// states flipped at step boundaries from the previous step's outputs (no
/// root finding), controller synchronized every T_c/h steps. h must divide
/// T_c within 1 ulp.
Waveform run_ts_chil(const Netlist& net, ModeCache& cache, CycleController& controller, Real t_c,
                     Real duration, const FixedStepOptions& options);

/// Fine-step reference run: trapezoidal stepping with exact landing on
/// active switch-event times and bisection of diode crossings to machine
/// precision, with the same controller synchronization as the ES engine.
Waveform run_oracle(const Netlist& net, ModeCache& cache, CycleController& controller, Real t_c,
                    Real duration, Real h, std::size_t record_stride,
                    std::vector<std::pair<Real, std::size_t>>* event_times = nullptr);

}  // namespace eschil
