#pragma once

#include "eschil/common.hpp"
#include "eschil/controller.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eschil {

// Four-layer event taxonomy: controller clock ticks, control actions
// (sampling / PWM update), scheduler sync exchanges, and switch events
// inside the simulated circuit, plus the solver's completion signal.
enum class EventKind {
    ClockP1,
    ClockP2,
    ControlA,
    ControlB,
    SyncA,
    SyncB,
    SimDone,
    ActiveSwitch,
    PassiveSwitch,
};

const char* event_kind_name(EventKind k);

struct Event {
    std::uint64_t seq = 0;
    Real t_sim = 0.0;
    EventKind kind = EventKind::ClockP1;
    std::int64_t cycle = -1;
    std::string payload;  // payload_summary column of the trace CSV
    int target = -1;      // gate / diode index for switch events
    int new_state = -1;   // 1 = on/conducting, 0 = off/blocked
    // Crossing residual for detected passive events; -1 marks a toggle
    // forced by the consistency pass rather than a located crossing.
    Real residual = -1.0;
};

class EventLog {
public:
    Event& emit(EventKind kind, Real t_sim, std::int64_t cycle, std::string payload = "",
                int target = -1, int new_state = -1, Real residual = -1.0) {
        Event e;
        e.seq = next_seq_++;
        e.t_sim = t_sim;
        e.kind = kind;
        e.cycle = cycle;
        e.payload = std::move(payload);
        e.target = target;
        e.new_state = new_state;
        e.residual = residual;
        events_.push_back(std::move(e));
        return events_.back();
    }

    [[nodiscard]] const std::vector<Event>& events() const { return events_; }

    /// Trace ordered by (t_sim, seq).
    [[nodiscard]] std::vector<Event> ordered() const;

private:
    std::vector<Event> events_;
    std::uint64_t next_seq_ = 0;
};

/// Per-cycle timing parameters plus the logged wall bookkeeping.
struct CycleTiming {
    Real t_c = 25e-6;  // control period, s
    Real t_d = 0.0;    // sampling delay, s; 0 <= t_d < t_c

    void validate() const {
        if (!(t_c > 0.0)) throw SimError("events", "control period must be > 0");
        if (t_d < 0.0 || t_d >= t_c) throw SimError("events", "need 0 <= t_d < t_c");
    }
};

/// Injectable wall-duration model for the frozen-state decisions: real
/// measured time, scripted durations for deterministic tests, or the
/// default instant solver.
class DurationSource {
public:
    virtual ~DurationSource() = default;
    /// Wall seconds the window-k computation is modeled to take; `measured`
    /// is the actually measured duration of the call.
    virtual Real window_wall_seconds(std::uint64_t k, Real measured) = 0;
};

class InstantDuration : public DurationSource {
public:
    Real window_wall_seconds(std::uint64_t, Real) override { return 0.0; }
};

class MeasuredDuration : public DurationSource {
public:
    Real window_wall_seconds(std::uint64_t, Real measured) override { return measured; }
};

class ScriptedDuration : public DurationSource {
public:
    explicit ScriptedDuration(std::vector<Real> script, Real fallback = 0.0)
        : script_(std::move(script)), fallback_(fallback) {}
    Real window_wall_seconds(std::uint64_t k, Real) override {
        return k < script_.size() ? script_[k] : fallback_;
    }

private:
    std::vector<Real> script_;
    Real fallback_;
};

/// Window-simulation side of the rendezvous contract.
class SimulationSession {
public:
    virtual ~SimulationSession() = default;

    /// Conditioned controller samples of the state now held by the session
    /// (taken at the window-start sync instant, before command application).
    virtual std::vector<Real> sync_samples() = 0;

    /// Simulate [t0, t1) under the command latched at this window's sync.
    /// Switch events are appended to the log. Returns measured wall seconds.
    virtual Real simulate_window(std::uint64_t k, Real t0, Real t1, const PwmConfig& command,
                                 EventLog& log) = 0;
};

/// ES-CHIL event scheduler: rendezvous of controller and simulator at
/// sync-events, with frozen-state accounting when the modeled wall time of
/// a window overruns the control period.
class EventScheduler {
public:
    EventScheduler(CycleTiming timing, DurationSource& durations, CycleController& controller,
                   SimulationSession& session);

    /// Run whole cycles until t_sim reaches `duration` (final window
    /// truncated at `duration`).
    void run(Real duration);

    /// Emit and process exactly cycle k (must be the next expected cycle).
    void run_cycle(std::uint64_t k);

    [[nodiscard]] const EventLog& log() const { return log_; }
    [[nodiscard]] std::uint64_t frozen_cycles() const { return frozen_cycles_; }
    [[nodiscard]] const std::vector<Real>& wall_log() const { return wall_log_; }
    [[nodiscard]] const std::vector<std::vector<Real>>& sync_a_payloads() const {
        return sync_a_payloads_;
    }

private:
    CycleTiming timing_;
    DurationSource* durations_;
    CycleController* controller_;
    SimulationSession* session_;

    EventLog log_;
    std::uint64_t next_cycle_ = 0;
    std::uint64_t sync_edge_index_ = 0;  // wall-clock edge of the last sync
    std::uint64_t frozen_cycles_ = 0;
    Real duration_ = 0.0;
    PwmConfig latched_command_;   // applied to the window being simulated
    PwmConfig pending_command_;   // controller output awaiting the next sync
    bool have_pending_ = false;
    std::vector<Real> wall_log_;
    std::vector<std::vector<Real>> sync_a_payloads_;
};

}  // namespace eschil
