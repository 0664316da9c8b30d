#include "eschil/session.hpp"

#include <algorithm>
#include <chrono>

namespace eschil {

namespace {

std::vector<Sensor> identity_sensors(const Netlist& net) {
    std::vector<Sensor> out;
    for (std::size_t i = 0; i < net.probes.size(); ++i) {
        Sensor s;
        s.probe_index = static_cast<int>(i);
        out.push_back(s);
    }
    return out;
}

}  // namespace

EsSession::EsSession(const Netlist& net, ModeCache& cache, SolverSettings settings, Real t_c,
                     std::vector<Sensor> sensors)
    : net_(&net),
      cache_(&cache),
      sensors_(sensors.empty() ? identity_sensors(net) : std::move(sensors)),
      x_(net.initial_state()),
      config_(net.initial_config()),
      gate_states_(net.gate_count(), false) {
    ctrl_.abs_tol = settings.abs_tol;
    ctrl_.rel_tol = settings.rel_tol;
    ctrl_.p = settings.p_init;
    ctrl_.p_max = settings.p_max;
    ctrl_.dt_min = settings.dt_min;
    ctrl_.dt_max = settings.dt_max > 0.0 ? settings.dt_max : t_c / 4.0;
    ctrl_.dt = std::clamp(settings.dt_init, ctrl_.dt_min, ctrl_.dt_max);

    monitors_ = armed_monitors(*net_, config_);

    const LtiModel& model = cache_->get(config_);
    waveform_.set_signals(model.output_labels);
    const Vec y0 = model.C * x_ + model.D * net_->input_values(0.0);
    waveform_.append(0.0, y0);
}

std::vector<Real> EsSession::probe_values(Real t) const {
    const LtiModel& model = cache_->get(config_);
    const Vec y = model.C * x_ + model.D * net_->input_values(t);
    std::vector<Real> probes(model.probe_count);
    for (int i = 0; i < model.probe_count; ++i) probes[i] = y[i];
    return probes;
}

std::vector<Real> EsSession::sync_samples() {
    return sample_map(probe_values(t_), sensors_);
}

void EsSession::apply_passive_event(const IntegrateOutcome& outcome, EventLog& log,
                                    std::uint64_t k) {
    for (std::size_t i = 0; i < outcome.diodes.size(); ++i) {
        const std::size_t diode = outcome.diodes[i];
        config_ = diode_transition(config_, diode);
        log.emit(EventKind::PassiveSwitch, outcome.t_end, static_cast<std::int64_t>(k),
                 net_->diode_ids[diode] + (config_.diode(diode) ? "=on" : "=off"),
                 static_cast<int>(diode), config_.diode(diode) ? 1 : 0,
                 outcome.crossings[i].residual);
    }
    settle_consistency(outcome.t_end, log, k);
}

void EsSession::settle_consistency(Real t, EventLog& log, std::uint64_t k) {
    auto provider = [this](const SwitchConfig& c) -> const LtiModel& { return cache_->get(c); };
    const auto result =
        post_event_consistency(provider, *net_, config_, x_, net_->input_values(t));
    for (std::size_t d : result.toggled) {
        log.emit(EventKind::PassiveSwitch, t, static_cast<std::int64_t>(k),
                 net_->diode_ids[d] + (result.config.diode(d) ? "=on" : "=off"),
                 static_cast<int>(d), result.config.diode(d) ? 1 : 0);
    }
    config_ = result.config;
    monitors_ = armed_monitors(*net_, config_);
}

Real EsSession::simulate_window(std::uint64_t k, Real t0, Real t1, const PwmConfig& command,
                                EventLog& log) {
    const auto wall_start = std::chrono::steady_clock::now();
    if (t_ != t0) {
        throw SimError("events", "window start does not match session time", t0,
                       static_cast<std::int64_t>(k));
    }

    // The full schedule is known before integration starts; the controller
    // is never queried mid-window.
    const AseSchedule schedule = pwm_edges(command, t0, t1, gate_states_);

    std::size_t next_edge = 0;
    auto sink = [this](Real t, const Vec& y) { waveform_.append(t, y); };

    while (t_ < t1) {
        // Barrier: the next group of gate edges, or the window end.
        Real barrier = t1;
        if (next_edge < schedule.edges.size()) barrier = schedule.edges[next_edge].t;

        if (barrier > t_) {
            try {
                const auto outcome =
                    integrate_to_barrier(cache_->get(config_), *net_, x_, t_, barrier, monitors_,
                                         ctrl_, sink);
                x_ = outcome.x_end;
                t_ = outcome.t_end;
                if (outcome.terminal == IntegrateOutcome::Terminal::PassiveEvent) {
                    apply_passive_event(outcome, log, k);
                    continue;
                }
            } catch (const SimError& e) {
                if (e.t_sim() >= 0.0) throw;
                throw SimError(e.module(), e.message(), t_, static_cast<std::int64_t>(k));
            }
        }

        // Apply every gate edge scheduled at this instant, then re-settle
        // the diode modes once.
        bool toggled = false;
        while (next_edge < schedule.edges.size() && schedule.edges[next_edge].t <= t_) {
            const auto& e = schedule.edges[next_edge];
            if (gate_states_[e.gate] != e.on) {
                gate_states_[e.gate] = e.on;
                config_.set_gate(e.gate, e.on);
                log.emit(EventKind::ActiveSwitch, t_, static_cast<std::int64_t>(k),
                         net_->gate_ids[e.gate] + (e.on ? "=on" : "=off"),
                         static_cast<int>(e.gate), e.on ? 1 : 0);
                toggled = true;
            }
            ++next_edge;
        }
        if (toggled) settle_consistency(t_, log, k);
    }

    const auto wall_end = std::chrono::steady_clock::now();
    return std::chrono::duration<Real>(wall_end - wall_start).count();
}

}  // namespace eschil
