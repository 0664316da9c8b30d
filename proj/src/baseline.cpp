#include "eschil/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eschil {

const char* fixed_method_name(FixedMethod m) {
    switch (m) {
        case FixedMethod::ForwardEuler: return "fe";
        case FixedMethod::BackwardEuler: return "be";
        case FixedMethod::Trapezoidal: return "trap";
    }
    return "?";
}

Vec fe_step(const LtiModel& model, const Vec& x, const Vec& u, Real h) {
    return x + h * (model.A * x + model.B * u);
}

const Eigen::PartialPivLU<Mat>& ImplicitFactorCache::factor(const LtiModel& model, Real coeff_h) {
    const auto key = std::make_pair(model.config.key(), coeff_h);
    auto it = factors_.find(key);
    if (it == factors_.end()) {
        const Mat M = Mat::Identity(model.state_count(), model.state_count()) - coeff_h * model.A;
        Eigen::PartialPivLU<Mat> lu(M);
        if (!(lu.rcond() > 1e-15)) {
            throw SimError("baseline", "singular (I - hA) for config " + model.config.to_string());
        }
        it = factors_.emplace(key, std::move(lu)).first;
    }
    return it->second;
}

Vec be_step(ImplicitFactorCache& cache, const LtiModel& model, const Vec& x, const Vec& u_next,
            Real h) {
    return cache.factor(model, h).solve(x + h * (model.B * u_next));
}

Vec trap_step(ImplicitFactorCache& cache, const LtiModel& model, const Vec& x, const Vec& u,
              const Vec& u_next, Real h) {
    const Vec rhs = x + 0.5 * h * (model.A * x + model.B * (u + u_next));
    return cache.factor(model, 0.5 * h).solve(rhs);
}

namespace {

struct DiodeThresholds {
    Real i_th, v_th;
};

std::vector<DiodeThresholds> diode_thresholds(const Netlist& net) {
    std::vector<DiodeThresholds> out;
    for (const auto& e : net.elements) {
        if (const auto* d = std::get_if<DiodeElem>(&e.kind)) {
            out.push_back({d->i_threshold, d->v_threshold});
        }
    }
    return out;
}

}  // namespace

Waveform run_ts_chil(const Netlist& net, ModeCache& cache, CycleController& controller, Real t_c,
                     Real duration, const FixedStepOptions& options) {
    const Real h = options.h;
    if (!(h > 0.0)) throw SimError("baseline", "step must be > 0");
    const auto n_c = static_cast<std::uint64_t>(std::llround(t_c / h));
    if (n_c == 0 || std::abs(static_cast<Real>(n_c) * h - t_c) >
                        std::numeric_limits<Real>::epsilon() * t_c * 2.0) {
        throw SimError("baseline", "step does not divide the control period");
    }
    const auto n_steps = static_cast<std::uint64_t>(std::llround(duration / h));

    ImplicitFactorCache factors;
    const auto thresholds = diode_thresholds(net);

    Vec x = net.initial_state();
    SwitchConfig cfg = net.initial_config();
    PwmConfig latched = controller.initial_command();
    PwmConfig pending;
    bool have_pending = false;

    const LtiModel& model0 = cache.get(cfg);
    Waveform wf;
    wf.set_signals(model0.output_labels);

    // Outputs at the previous grid point: sync samples and the per-step
    // diode decision both read these.
    Vec y_last = model0.C * x + model0.D * net.input_values(0.0);

    for (std::uint64_t j = 0; j < n_steps; ++j) {
        const Real t = static_cast<Real>(j) * h;

        if (j % n_c == 0) {
            const std::uint64_t k = j / n_c;
            std::vector<Real> samples(y_last.data(), y_last.data() + net.probes.size());
            if (have_pending) latched = pending;
            pending = controller.on_cycle(k, t, samples);
            have_pending = true;
        }

        // Gate states sampled on the grid; diode flips from the previous
        // step's outputs, applied at this boundary.
        for (std::size_t g = 0; g < net.gate_count(); ++g) {
            cfg.set_gate(g, latched.gates.empty() ? false : pwm_gate_state(latched, g, t));
        }
        const LtiModel& model_prev = cache.get(cfg);
        for (std::size_t d = 0; d < net.diode_count(); ++d) {
            if (cfg.diode(d)) {
                if (y_last[model_prev.diode_current_output(d)] < thresholds[d].i_th) {
                    cfg.set_diode(d, false);
                }
            } else {
                if (y_last[model_prev.diode_voltage_output(d)] > thresholds[d].v_th) {
                    cfg.set_diode(d, true);
                }
            }
        }

        const LtiModel& model = cache.get(cfg);
        const Vec u = net.input_values(t);
        const Vec y = model.C * x + model.D * u;
        if (j % options.record_stride == 0) wf.append(t, y);

        if (options.method == FixedMethod::ForwardEuler) {
            x = fe_step(model, x, u, h);
        } else if (options.method == FixedMethod::BackwardEuler) {
            x = be_step(factors, model, x, net.input_values(t + h), h);
        } else {
            x = trap_step(factors, model, x, u, net.input_values(t + h), h);
        }
        if (!x.allFinite()) {
            throw SimError("baseline", "state diverged", t);
        }
        y_last = y;
    }

    const Real t_end = static_cast<Real>(n_steps) * h;
    const LtiModel& model = cache.get(cfg);
    wf.append(t_end, Vec(model.C * x + model.D * net.input_values(t_end)));
    return wf;
}

Waveform run_oracle(const Netlist& net, ModeCache& cache, CycleController& controller, Real t_c,
                    Real duration, Real h, std::size_t record_stride,
                    std::vector<std::pair<Real, std::size_t>>* event_times) {
    if (!(h > 0.0)) throw SimError("baseline", "oracle step must be > 0");
    ImplicitFactorCache factors;

    Vec x = net.initial_state();
    Real t = 0.0;
    SwitchConfig cfg = net.initial_config();
    std::vector<bool> gate_states(net.gate_count(), false);
    PwmConfig latched = controller.initial_command();
    PwmConfig pending;
    bool have_pending = false;

    const LtiModel& model0 = cache.get(cfg);
    Waveform wf;
    wf.set_signals(model0.output_labels);
    wf.append(0.0, Vec(model0.C * x + model0.D * net.input_values(0.0)));

    auto provider = [&cache](const SwitchConfig& c) -> const LtiModel& { return cache.get(c); };

    const auto n_cycles = static_cast<std::uint64_t>(std::ceil(duration / t_c - 1e-12));
    std::size_t since_record = 0;

    for (std::uint64_t k = 0; k < n_cycles; ++k) {
        const Real t0 = static_cast<Real>(k) * t_c;
        const Real t1 = std::min(static_cast<Real>(k + 1) * t_c, duration);

        {
            const LtiModel& m = cache.get(cfg);
            const Vec y = m.C * x + m.D * net.input_values(t0);
            std::vector<Real> samples(y.data(), y.data() + net.probes.size());
            if (have_pending) latched = pending;
            pending = controller.on_cycle(k, t0, samples);
            have_pending = true;
        }

        const AseSchedule schedule = pwm_edges(latched, t0, t1, gate_states);
        std::size_t next_edge = 0;
        std::vector<PassiveMonitor> monitors = armed_monitors(net, cfg);

        // Trapezoidal substep with a one-off factorization, for event bisection.
        auto substep = [&](const LtiModel& model, const Vec& u0, Real tau) -> Vec {
            const Mat M = Mat::Identity(model.state_count(), model.state_count()) -
                          0.5 * tau * model.A;
            const Vec rhs =
                x + 0.5 * tau * (model.A * x + model.B * (u0 + net.input_values(t + tau)));
            return M.partialPivLu().solve(rhs);
        };

        while (t < t1) {
            Real barrier = t1;
            if (next_edge < schedule.edges.size()) barrier = schedule.edges[next_edge].t;

            // Uniform steps with an exact final landing on the barrier.
            while (t < barrier) {
                const LtiModel& model = cache.get(cfg);
                const Real step = std::min(h, barrier - t);
                const bool lands = step >= barrier - t;
                const Vec u0 = net.input_values(t);
                const Vec y_cur = model.C * x + model.D * u0;
                Vec x_new = trap_step(factors, model, x, u0, net.input_values(t + step), step);
                Real t_new = lands ? barrier : t + step;
                Vec y_new = model.C * x_new + model.D * net.input_values(t_new);

                // Directed crossing of any armed monitor inside the step:
                // bisect the substep to machine precision. Crossings tied
                // with the earliest within 1e-15 s fire together.
                std::vector<std::size_t> fired;
                std::vector<Real> taus;
                Real best_tau = step;
                for (const auto& raw : monitors) {
                    const PassiveMonitor m = effective_monitor(raw, y_cur[raw.output_index]);
                    const Real g0 = y_cur[m.output_index] - m.threshold;
                    const Real g1 = y_new[m.output_index] - m.threshold;
                    const bool falling = m.direction == PassiveMonitor::Direction::Falling;
                    if (falling ? !(g0 > 0.0 && g1 <= 0.0) : !(g0 < 0.0 && g1 >= 0.0)) continue;
                    Real lo = 0.0, hi = step;
                    for (int it = 0; it < 60 && (hi - lo) > 1e-18; ++it) {
                        const Real mid = 0.5 * (lo + hi);
                        const Vec xm = substep(model, u0, mid);
                        const Real gm =
                            (model.C * xm + model.D * net.input_values(t + mid))(m.output_index) -
                            m.threshold;
                        if (falling ? gm <= 0.0 : gm >= 0.0) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    fired.push_back(m.diode_index);
                    taus.push_back(hi);
                    best_tau = std::min(best_tau, hi);
                }
                for (std::size_t i = fired.size(); i-- > 0;) {
                    if (taus[i] - best_tau > 1e-15) {
                        fired.erase(fired.begin() + static_cast<std::ptrdiff_t>(i));
                        taus.erase(taus.begin() + static_cast<std::ptrdiff_t>(i));
                    }
                }

                if (!fired.empty()) {
                    const Real t_star = t + best_tau;
                    x = substep(model, u0, best_tau);
                    t = t_star;
                    for (std::size_t d : fired) {
                        cfg = diode_transition(cfg, d);
                        if (event_times) event_times->emplace_back(t_star, d);
                    }
                    const auto settle =
                        post_event_consistency(provider, net, cfg, x, net.input_values(t));
                    if (event_times) {
                        for (std::size_t d : settle.toggled) event_times->emplace_back(t_star, d);
                    }
                    cfg = settle.config;
                    monitors = armed_monitors(net, cfg);
                    const LtiModel& m2 = cache.get(cfg);
                    if (t > wf.t.back()) {
                        wf.append(t, Vec(m2.C * x + m2.D * net.input_values(t)));
                    }
                    since_record = 0;
                    continue;
                }

                x = x_new;
                t = t_new;
                if (++since_record >= record_stride || t == barrier) {
                    if (t > wf.t.back()) wf.append(t, y_new);
                    since_record = 0;
                }
            }

            bool toggled = false;
            while (next_edge < schedule.edges.size() && schedule.edges[next_edge].t <= t) {
                const auto& e = schedule.edges[next_edge];
                if (gate_states[e.gate] != e.on) {
                    gate_states[e.gate] = e.on;
                    cfg.set_gate(e.gate, e.on);
                    toggled = true;
                }
                ++next_edge;
            }
            if (toggled) {
                const auto settle =
                    post_event_consistency(provider, net, cfg, x, net.input_values(t));
                if (event_times) {
                    for (std::size_t d : settle.toggled) event_times->emplace_back(t, d);
                }
                cfg = settle.config;
                monitors = armed_monitors(net, cfg);
            }
        }
    }

    return wf;
}

}  // namespace eschil
