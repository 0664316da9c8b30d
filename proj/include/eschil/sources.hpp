#pragma once

#include "eschil/common.hpp"

#include <cmath>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace eschil {

// Source waveform descriptors. Each kind supplies its value and its exact
// i-th time derivative, which feed the input-derivative stack of the
// Taylor recursion. PWL tables are smooth only inside a segment, so they
// also expose their breakpoints for the step controller to land on.

struct DcWaveform {
    Real value = 0.0;
};

struct SineWaveform {
    Real amplitude = 0.0;
    Real freq_hz = 0.0;
    Real phase_rad = 0.0;
    Real offset = 0.0;
};

struct PwlWaveform {
    // (t, value) pairs, strictly increasing in t. Constant extrapolation
    // outside the table.
    std::vector<std::pair<Real, Real>> points;
};

class SourceWaveform {
public:
    SourceWaveform() : desc_(DcWaveform{}) {}
    explicit SourceWaveform(DcWaveform d) : desc_(d) {}
    explicit SourceWaveform(SineWaveform s) : desc_(s) {}
    explicit SourceWaveform(PwlWaveform p) : desc_(std::move(p)) {}

    [[nodiscard]] Real value(Real t) const { return derivative(0, t); }

    /// Exact i-th derivative at time t (i = 0 gives the value itself).
    [[nodiscard]] Real derivative(int i, Real t) const {
        if (const auto* dc = std::get_if<DcWaveform>(&desc_)) {
            return i == 0 ? dc->value : 0.0;
        }
        if (const auto* s = std::get_if<SineWaveform>(&desc_)) {
            const Real w = 2.0 * M_PI * s->freq_hz;
            // d^i/dt^i [A sin(wt+phi)] = A w^i sin(wt + phi + i*pi/2)
            Real v = s->amplitude * std::pow(w, i) *
                     std::sin(w * t + s->phase_rad + 0.5 * M_PI * static_cast<Real>(i));
            if (i == 0) v += s->offset;
            return v;
        }
        const auto& p = std::get<PwlWaveform>(desc_);
        return pwl_derivative(p, i, t);
    }

    /// First PWL breakpoint strictly after t, if any. Smooth sources have none.
    [[nodiscard]] std::optional<Real> next_breakpoint(Real t) const {
        const auto* p = std::get_if<PwlWaveform>(&desc_);
        if (!p) return std::nullopt;
        for (const auto& [tb, vb] : p->points) {
            (void)vb;
            if (tb > t) return tb;
        }
        return std::nullopt;
    }

private:
    static Real pwl_derivative(const PwlWaveform& p, int i, Real t) {
        if (p.points.empty()) return 0.0;
        if (t <= p.points.front().first) {
            return i == 0 ? p.points.front().second : 0.0;
        }
        if (t >= p.points.back().first) {
            return i == 0 ? p.points.back().second : 0.0;
        }
        for (std::size_t j = 1; j < p.points.size(); ++j) {
            if (t < p.points[j].first) {
                const auto& [t0, v0] = p.points[j - 1];
                const auto& [t1, v1] = p.points[j];
                const Real slope = (v1 - v0) / (t1 - t0);
                if (i == 0) return v0 + slope * (t - t0);
                if (i == 1) return slope;
                return 0.0;
            }
        }
        return i == 0 ? p.points.back().second : 0.0;
    }

    std::variant<DcWaveform, SineWaveform, PwlWaveform> desc_;
};

}  // namespace eschil
