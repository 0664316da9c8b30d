#include "eschil/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace eschil {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::ClockP1: return "clock_p1";
        case EventKind::ClockP2: return "clock_p2";
        case EventKind::ControlA: return "control_a";
        case EventKind::ControlB: return "control_b";
        case EventKind::SyncA: return "sync_a";
        case EventKind::SyncB: return "sync_b";
        case EventKind::SimDone: return "sim_done";
        case EventKind::ActiveSwitch: return "active_switch";
        case EventKind::PassiveSwitch: return "passive_switch";
    }
    return "?";
}

std::vector<Event> EventLog::ordered() const {
    std::vector<Event> out = events_;
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
        if (a.t_sim != b.t_sim) return a.t_sim < b.t_sim;
        return a.seq < b.seq;
    });
    return out;
}

namespace {

std::string format_g17(Real v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_samples(const std::vector<Real>& samples) {
    std::string s;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i) s += ';';
        s += format_g17(samples[i]);
    }
    return s;
}

}  // namespace

EventScheduler::EventScheduler(CycleTiming timing, DurationSource& durations,
                               CycleController& controller, SimulationSession& session)
    : timing_(timing), durations_(&durations), controller_(&controller), session_(&session) {
    timing_.validate();
    latched_command_ = controller_->initial_command();
}

void EventScheduler::run(Real duration) {
    if (!(duration > 0.0)) throw SimError("events", "duration must be > 0");
    duration_ = duration;
    const auto cycles = static_cast<std::uint64_t>(std::ceil(duration / timing_.t_c - 1e-12));
    for (std::uint64_t k = 0; k < cycles; ++k) run_cycle(k);
}

void EventScheduler::run_cycle(std::uint64_t k) {
    if (k != next_cycle_) {
        throw SimError("events",
                       "protocol violation: expected cycle " + std::to_string(next_cycle_) +
                           ", got " + std::to_string(k),
                       -1.0, static_cast<std::int64_t>(k));
    }
    if (duration_ <= 0.0) duration_ = std::numeric_limits<Real>::infinity();

    const Real t_edge = static_cast<Real>(k) * timing_.t_c;

    // Frozen-state accounting: the previous window's modeled completion time
    // decides which wall-clock edge carries this cycle's sync pair. A
    // completion at or before an edge syncs on that edge.
    if (k > 0) {
        const Real simdone_wall =
            static_cast<Real>(sync_edge_index_) * timing_.t_c + wall_log_.back();
        auto edge = static_cast<std::uint64_t>(std::ceil(simdone_wall / timing_.t_c - 1e-9));
        edge = std::max(edge, sync_edge_index_ + 1);
        const std::uint64_t frozen = edge - sync_edge_index_ - 1;
        for (std::uint64_t i = 0; i < frozen; ++i) {
            log_.emit(EventKind::ClockP1, t_edge, static_cast<std::int64_t>(k), "frozen");
        }
        frozen_cycles_ += frozen;
        sync_edge_index_ = edge;
    }

    log_.emit(EventKind::ClockP1, t_edge, static_cast<std::int64_t>(k));

    // Sync pair: samples out first, then the previous cycle's commands in.
    const std::vector<Real> samples = session_->sync_samples();
    sync_a_payloads_.push_back(samples);
    log_.emit(EventKind::SyncA, t_edge, static_cast<std::int64_t>(k), join_samples(samples));
    if (have_pending_) {
        latched_command_ = pending_command_;
        have_pending_ = false;
    }
    log_.emit(EventKind::SyncB, t_edge, static_cast<std::int64_t>(k) - 1,
              "gates=" + std::to_string(latched_command_.gates.size()));

    // Controller cycle k.
    const Real t_ctl = t_edge + timing_.t_d;
    log_.emit(EventKind::ControlA, t_ctl, static_cast<std::int64_t>(k));
    pending_command_ = controller_->on_cycle(k, t_ctl, samples);
    have_pending_ = true;
    log_.emit(EventKind::ControlB, t_ctl, static_cast<std::int64_t>(k));

    // Simulate window k under the latched command.
    const Real t_end = std::min(static_cast<Real>(k + 1) * timing_.t_c, duration_);
    const Real measured = session_->simulate_window(k, t_edge, t_end, latched_command_, log_);
    const Real wall = durations_->window_wall_seconds(k, measured);
    wall_log_.push_back(wall);
    log_.emit(EventKind::SimDone, t_end, static_cast<std::int64_t>(k), "wall=" + format_g17(wall));

    next_cycle_ = k + 1;
}

}  // namespace eschil
