#pragma once

#include "eschil/analysis.hpp"
#include "eschil/events.hpp"
#include "eschil/integrate.hpp"
#include "eschil/mode_cache.hpp"

#include <vector>

namespace eschil {

struct SolverSettings {
    Real abs_tol = 1e-9;
    Real rel_tol = 1e-6;
    int p_init = 4;
    int p_max = 8;
    Real dt_min = 1e-12;
    Real dt_max = 0.0;  // 0 = T_c / 4
    Real dt_init = 1e-8;
};

/// One event-synchronized solver session: owns the state vector, the switch
/// configuration, the armed monitor table and the recorded waveform. The
/// scheduler drives it one control window at a time; inside a window it
/// splits at every pre-known active switch-event, swaps models through the
/// mode cache, and lets the detector truncate segments at passive events.
class EsSession : public SimulationSession {
public:
    EsSession(const Netlist& net, ModeCache& cache, SolverSettings settings, Real t_c,
              std::vector<Sensor> sensors = {});

    std::vector<Real> sync_samples() override;
    Real simulate_window(std::uint64_t k, Real t0, Real t1, const PwmConfig& command,
                         EventLog& log) override;

    [[nodiscard]] const Waveform& waveform() const { return waveform_; }
    [[nodiscard]] Waveform& waveform() { return waveform_; }
    [[nodiscard]] const Vec& state() const { return x_; }
    [[nodiscard]] const SwitchConfig& config() const { return config_; }
    [[nodiscard]] Real time() const { return t_; }
    [[nodiscard]] const StepControl& step_control() const { return ctrl_; }

private:
    void apply_passive_event(const IntegrateOutcome& outcome, EventLog& log, std::uint64_t k);
    void settle_consistency(Real t, EventLog& log, std::uint64_t k);
    std::vector<Real> probe_values(Real t) const;

    const Netlist* net_;
    ModeCache* cache_;
    std::vector<Sensor> sensors_;

    Vec x_;
    Real t_ = 0.0;
    SwitchConfig config_;
    std::vector<bool> gate_states_;
    std::vector<PassiveMonitor> monitors_;
    StepControl ctrl_;
    Waveform waveform_;
};

}  // namespace eschil
