#include "eschil/controller.hpp"

#include <algorithm>
#include <cmath>

namespace eschil {

namespace {

// On-intervals of one PWM period starting at period index kp, before
// dead-time shaping: [on, off) within [start, start + T).
struct OnInterval {
    Real on, off;
};

std::optional<OnInterval> period_interval(const GatePwm& g, Real period_start) {
    if (g.duty <= 0.0) return std::nullopt;
    if (g.duty >= 1.0) return OnInterval{period_start, period_start + g.period};
    if (g.carrier == CarrierKind::Sawtooth) {
        return OnInterval{period_start, period_start + g.duty * g.period};
    }
    // Triangle: pulse of width duty*T centered on the period midpoint.
    const Real half_gap = 0.5 * (1.0 - g.duty) * g.period;
    return OnInterval{period_start + half_gap, period_start + g.period - half_gap};
}

// Scheduled state of the *comparison* output (before pairing/dead time).
bool raw_state(const GatePwm& g, Real t) {
    if (g.period <= 0.0) return false;
    const Real local = t - g.phase * g.period;
    const Real k = std::floor(local / g.period);
    const Real start = k * g.period + g.phase * g.period;
    auto iv = period_interval(g, start);
    bool on = iv && t >= iv->on && t < iv->off;
    return g.polarity_invert ? !on : on;
}

}  // namespace

void PwmConfig::validate() const {
    for (std::size_t i = 0; i < gates.size(); ++i) {
        const auto& g = gates[i];
        if (g.complementary_of < 0 && !(g.period > 0.0)) {
            throw SimError("controller", "gate " + std::to_string(i) + " needs a carrier period");
        }
        if (g.duty < 0.0 || g.duty > 1.0) {
            throw SimError("controller", "duty out of [0,1] on gate " + std::to_string(i));
        }
        if (g.phase < 0.0 || g.phase >= 1.0) {
            throw SimError("controller", "phase out of [0,1) on gate " + std::to_string(i));
        }
        if (g.complementary_of >= 0) {
            if (g.complementary_of >= static_cast<int>(gates.size()) ||
                g.complementary_of == static_cast<int>(i)) {
                throw SimError("controller", "bad complementary link on gate " + std::to_string(i));
            }
            const auto& prim = gates[g.complementary_of];
            if (prim.period > 0.0 && !(g.dead_time < prim.period / 2.0)) {
                throw SimError("controller", "dead time must be < period/2 on gate " + std::to_string(i));
            }
        }
    }
}

bool pwm_gate_state(const PwmConfig& cfg, std::size_t gate, Real t) {
    const auto& g = cfg.gates.at(gate);
    if (g.complementary_of < 0) {
        // A primary paired with a complementary partner delays its own
        // turn-on by the partner's dead time.
        Real dead = 0.0;
        for (const auto& other : cfg.gates) {
            if (other.complementary_of == static_cast<int>(gate)) dead = other.dead_time;
        }
        if (dead <= 0.0) return raw_state(g, t);
        return raw_state(g, t) && raw_state(g, t - dead);
    }
    const auto& prim = cfg.gates.at(g.complementary_of);
    const bool comp_now = !raw_state(prim, t);
    if (g.dead_time <= 0.0) return comp_now;
    return comp_now && !raw_state(prim, t - g.dead_time);
}

AseSchedule pwm_edges(const PwmConfig& cfg, Real t0, Real t1,
                      const std::vector<bool>& prev_states) {
    cfg.validate();
    if (prev_states.size() != cfg.gates.size()) {
        throw SimError("controller", "prev_states size mismatch");
    }

    // Carrier boundaries computed as k*period can land a few ulps on either
    // side of a window boundary computed as k*T_c; candidates are therefore
    // gathered with a snap tolerance and the gate state is sampled at
    // segment midpoints, never at the ambiguous boundaries themselves.
    const Real tol = 1e-12 + 4.0 * std::numeric_limits<Real>::epsilon() * std::abs(t1);

    AseSchedule sched;
    for (std::size_t gi = 0; gi < cfg.gates.size(); ++gi) {
        const auto& g = cfg.gates[gi];
        const GatePwm& timing = g.complementary_of >= 0 ? cfg.gates[g.complementary_of] : g;
        if (timing.period <= 0.0) continue;

        // Candidate transition times: raw interval boundaries of the timing
        // gate, with shifted copies covering dead-time delays.
        std::vector<Real> candidates{t0};
        const Real dead = g.complementary_of >= 0 ? g.dead_time : [&] {
            Real d = 0.0;
            for (const auto& other : cfg.gates) {
                if (other.complementary_of == static_cast<int>(gi)) d = other.dead_time;
            }
            return d;
        }();
        const Real t_lo = t0 - timing.period;
        const Real k_lo = std::floor((t_lo - timing.phase * timing.period) / timing.period);
        for (Real k = k_lo;; k += 1.0) {
            const Real start = k * timing.period + timing.phase * timing.period;
            if (start > t1 + timing.period) break;
            auto iv = period_interval(timing, start);
            if (iv) {
                for (Real b : {iv->on, iv->off, iv->on + dead, iv->off + dead}) {
                    if (b >= t0 - tol && b < t1 - tol) candidates.push_back(std::max(b, t0));
                }
            }
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end(),
                                     [&](Real a, Real b) { return b - a <= tol; }),
                         candidates.end());

        bool state = prev_states[gi];
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Real seg_start = candidates[i];
            const Real seg_end = i + 1 < candidates.size() ? candidates[i + 1] : t1;
            if (seg_end - seg_start <= tol) continue;
            const bool want = pwm_gate_state(cfg, gi, 0.5 * (seg_start + seg_end));
            if (want != state) {
                sched.edges.push_back({seg_start, gi, want});
                state = want;
            }
        }
    }

    std::stable_sort(sched.edges.begin(), sched.edges.end(),
                     [](const AseEdge& a, const AseEdge& b) { return a.t < b.t; });
    return sched;
}

std::vector<Real> sample_map(const std::vector<Real>& probe_values,
                             const std::vector<Sensor>& sensors) {
    std::vector<Real> out;
    out.reserve(sensors.size());
    for (const auto& s : sensors) {
        if (s.probe_index < 0 || s.probe_index >= static_cast<int>(probe_values.size())) {
            throw SimError("controller", "sensor references unknown probe");
        }
        Real v = s.gain * probe_values[s.probe_index] + s.offset;
        if (s.quant_bits > 0) {
            const Real levels = std::pow(2.0, s.quant_bits);
            const Real step = 2.0 * s.full_scale / levels;
            v = std::clamp(std::round(v / step) * step, -s.full_scale, s.full_scale - step);
        }
        out.push_back(v);
    }
    return out;
}

WptController::WptController(WptControllerParams params)
    : p_(std::move(params)), duty_(p_.initial_duty), integrator_(p_.initial_duty) {
    if (p_.gate_buck >= 0 && p_.buck_period > 0.0 && p_.bridge_period > 0.0) {
        cycles_per_buck_update_ = static_cast<std::uint64_t>(
            std::llround(p_.buck_period / p_.bridge_period));
        if (cycles_per_buck_update_ == 0) cycles_per_buck_update_ = 1;
    }
}

Real WptController::shift_at(Real t) const {
    if (p_.ramp_duration <= 0.0) return p_.steady_shift;
    const Real frac = std::clamp(t / p_.ramp_duration, 0.0, 1.0);
    return p_.steady_shift * frac;
}

PwmConfig WptController::build(Real shift, Real duty) const {
    PwmConfig cfg;
    const int n_gates = std::max({p_.gate_a_hi, p_.gate_a_lo, p_.gate_b_hi, p_.gate_b_lo,
                                  p_.gate_buck}) + 1;
    cfg.gates.resize(n_gates);
    for (int i = 0; i < n_gates; ++i) cfg.gates[i].gate_index = i;

    auto& a_hi = cfg.gates[p_.gate_a_hi];
    a_hi.carrier = CarrierKind::Sawtooth;
    a_hi.period = p_.bridge_period;
    a_hi.duty = 0.5;
    a_hi.phase = 0.0;

    auto& a_lo = cfg.gates[p_.gate_a_lo];
    a_lo.complementary_of = p_.gate_a_hi;
    a_lo.dead_time = p_.dead_time;

    auto& b_hi = cfg.gates[p_.gate_b_hi];
    b_hi.carrier = CarrierKind::Sawtooth;
    b_hi.period = p_.bridge_period;
    b_hi.duty = 0.5;
    b_hi.phase = shift - std::floor(shift);

    auto& b_lo = cfg.gates[p_.gate_b_lo];
    b_lo.complementary_of = p_.gate_b_hi;
    b_lo.dead_time = p_.dead_time;

    if (p_.gate_buck >= 0) {
        auto& buck = cfg.gates[p_.gate_buck];
        buck.carrier = CarrierKind::Sawtooth;
        buck.period = p_.buck_period;
        buck.duty = duty;
        buck.phase = 0.0;
    }
    return cfg;
}

PwmConfig WptController::initial_command() { return build(0.0, 0.0); }

PwmConfig WptController::on_cycle(std::uint64_t k, Real t, const std::vector<Real>& samples) {
    if (p_.gate_buck >= 0) {
        if (p_.current_sample_index < static_cast<int>(samples.size())) {
            pending_samples_.push_back(samples[p_.current_sample_index]);
        }
        const bool rx_on = t >= p_.rx_enable_time;
        if ((k + 1) % cycles_per_buck_update_ == 0) {
            if (rx_on && !pending_samples_.empty()) {
                // Trapezoidal mean over the buck period: the samples span
                // (t0, t0+T] uniformly, with the previous period's final
                // sample carried over as the left endpoint.
                const std::size_t n = pending_samples_.size();
                Real mean = 0.5 * (carry_sample_ + pending_samples_.back());
                for (std::size_t i = 0; i + 1 < n; ++i) mean += pending_samples_[i];
                mean /= static_cast<Real>(n);
                const Real error = p_.setpoint - mean;
                const Real unclamped = p_.kp * error + integrator_ + p_.ki * error;
                if (unclamped > 1.0) {
                    duty_ = 1.0;  // integrator frozen while saturated
                } else if (unclamped < 0.0) {
                    duty_ = 0.0;
                } else {
                    integrator_ += p_.ki * error;
                    duty_ = p_.kp * error + integrator_;
                }
            } else if (!rx_on) {
                duty_ = 0.0;
                integrator_ = p_.initial_duty;
            }
            if (!pending_samples_.empty()) carry_sample_ = pending_samples_.back();
            pending_samples_.clear();
        }
    }
    return build(shift_at(t), duty_);
}

}  // namespace eschil
