#pragma once

#include "eschil/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eschil {

enum class CarrierKind { Sawtooth, Triangle };

/// PWM program for one gate. Carriers are anchored to absolute time zero,
/// so a command latched at a sync keeps the carrier phase continuous.
struct GatePwm {
    int gate_index = -1;  // netlist gate index
    CarrierKind carrier = CarrierKind::Sawtooth;
    Real period = 0.0;         // s
    Real duty = 0.0;           // [0, 1]
    Real phase = 0.0;          // carrier offset as a fraction of period, [0, 1)
    bool polarity_invert = false;
    int complementary_of = -1;  // index into PwmConfig::gates; -1 = primary
    Real dead_time = 0.0;       // s, < period/2
};

struct PwmConfig {
    std::vector<GatePwm> gates;

    void validate() const;  // throws SimError("controller", ...)
};

struct AseEdge {
    Real t = 0.0;
    std::size_t gate = 0;  // index into PwmConfig::gates / netlist gate order
    bool on = false;
};

/// Pre-known active switch-event times inside one control window, sorted.
struct AseSchedule {
    std::vector<AseEdge> edges;
};

/// Scheduled gate state at absolute time t under the config (dead time and
/// polarity applied).
bool pwm_gate_state(const PwmConfig& cfg, std::size_t gate, Real t);

/// Expand a command into the edges inside [t0, t1). prev_states is the gate
/// state the circuit is actually in at t0; a mismatch with the scheduled
/// state produces a correction edge at the window start.
AseSchedule pwm_edges(const PwmConfig& cfg, Real t0, Real t1,
                      const std::vector<bool>& prev_states);

/// Sensor conditioning from probe values to controller inputs.
struct Sensor {
    int probe_index = -1;
    Real gain = 1.0;
    Real offset = 0.0;
    int quant_bits = 0;     // 0 disables the quantizer
    Real full_scale = 0.0;  // quantizer range is [-full_scale, full_scale)
};

std::vector<Real> sample_map(const std::vector<Real>& probe_values,
                             const std::vector<Sensor>& sensors);

/// Discrete controller model: one pure cycle function clocked by the
/// scheduler's sync-events.
class CycleController {
public:
    virtual ~CycleController() = default;

    /// Startup command delivered with the first sync, before any samples.
    virtual PwmConfig initial_command() = 0;

    /// Cycle k at simulation time t with conditioned samples; returns the
    /// command latched at the next sync.
    virtual PwmConfig on_cycle(std::uint64_t k, Real t, const std::vector<Real>& samples) = 0;
};

/// No gates (uncontrolled circuit).
class NoneController : public CycleController {
public:
    PwmConfig initial_command() override { return {}; }
    PwmConfig on_cycle(std::uint64_t, Real, const std::vector<Real>&) override { return {}; }
};

/// Emits a fixed PwmConfig every cycle.
class ConstantDutyController : public CycleController {
public:
    explicit ConstantDutyController(PwmConfig cfg) : cfg_(std::move(cfg)) {}
    PwmConfig initial_command() override { return cfg_; }
    PwmConfig on_cycle(std::uint64_t, Real, const std::vector<Real>&) override { return cfg_; }

private:
    PwmConfig cfg_;
};

/// Transmitter bridge + receiver buck control of the WPT submodule.
/// The bridge legs run open-loop at fixed 50% duty; the leg-B phase shift
/// ramps linearly from zero to the steady value over the startup interval
/// and is not adjusted afterwards. The buck runs a discrete PI on the mean
/// of the output-current samples seen since its previous update, enabled
/// only after the startup interval, with the integrator clamped while the
/// duty saturates.
struct WptControllerParams {
    // gate slots in PwmConfig order: legA hi, legA lo, legB hi, legB lo[, buck]
    int gate_a_hi = 0, gate_a_lo = 1, gate_b_hi = 2, gate_b_lo = 3;
    int gate_buck = -1;  // -1 = no buck stage
    Real bridge_period = 25e-6;
    Real dead_time = 0.0;
    Real steady_shift = 0.25;      // fraction of period
    Real ramp_duration = 0.01;     // s
    Real buck_period = 200e-6;     // 1/f_buck
    Real rx_enable_time = 0.01;    // s
    int current_sample_index = 0;  // index into the conditioned samples
    Real setpoint = 0.0;           // A
    Real kp = 0.0;
    Real ki = 0.0;                 // per update
    Real initial_duty = 0.0;
};

class WptController : public CycleController {
public:
    explicit WptController(WptControllerParams params);
    PwmConfig initial_command() override;
    PwmConfig on_cycle(std::uint64_t k, Real t, const std::vector<Real>& samples) override;

    [[nodiscard]] Real shift_at(Real t) const;
    [[nodiscard]] Real buck_duty() const { return duty_; }

private:
    PwmConfig build(Real shift, Real duty) const;

    WptControllerParams p_;
    Real duty_;
    Real integrator_;
    Real carry_sample_ = 0.0;
    std::vector<Real> pending_samples_;
    std::uint64_t cycles_per_buck_update_ = 1;
};

}  // namespace eschil
