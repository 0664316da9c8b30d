#include "eschil/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace eschil {

void Waveform::append(Real time, const Vec& values) {
    if (static_cast<std::size_t>(values.size()) != cols.size()) {
        throw SimError("analysis", "waveform row width mismatch");
    }
    if (!t.empty() && !(time > t.back())) {
        throw SimError("analysis", "waveform times must be strictly increasing", time);
    }
    t.push_back(time);
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i].push_back(values[static_cast<Index>(i)]);
}

void Waveform::append(Real time, const std::vector<Real>& values) {
    if (values.size() != cols.size()) {
        throw SimError("analysis", "waveform row width mismatch");
    }
    if (!t.empty() && !(time > t.back())) {
        throw SimError("analysis", "waveform times must be strictly increasing", time);
    }
    t.push_back(time);
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i].push_back(values[i]);
}

int Waveform::signal_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    throw SimError("analysis", "unknown signal '" + name + "'");
}

Real Waveform::value_at(int signal, Real time) const {
    const auto& v = cols.at(signal);
    if (t.empty()) throw SimError("analysis", "empty waveform");
    if (time <= t.front()) return v.front();
    if (time >= t.back()) return v.back();
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const Real t0 = t[j - 1], t1 = t[j];
    const Real a = (time - t0) / (t1 - t0);
    return v[j - 1] + a * (v[j] - v[j - 1]);
}

Real Waveform::median_spacing(Real t1, Real t2) const {
    std::vector<Real> gaps;
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (t[j] >= t1 && t[j] <= t2) gaps.push_back(t[j] - t[j - 1]);
    }
    if (gaps.empty()) throw SimError("analysis", "no samples in window");
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

Real rms(const Waveform& w, const std::string& signal, Real t1, Real t2) {
    if (!(t2 > t1)) throw SimError("analysis", "empty rms window");
    const int s = w.signal_index(signal);
    if (w.rows() < 2) throw SimError("analysis", "rms needs >= 2 samples");

    // Trapezoidal integral of v^2 with interpolated window endpoints.
    Real integral = 0.0;
    Real prev_t = t1;
    Real prev_v = w.value_at(s, t1);
    for (std::size_t j = 0; j < w.rows(); ++j) {
        if (w.t[j] <= t1) continue;
        if (w.t[j] >= t2) break;
        const Real v = w.cols[s][j];
        integral += 0.5 * (prev_v * prev_v + v * v) * (w.t[j] - prev_t);
        prev_t = w.t[j];
        prev_v = v;
    }
    const Real v_end = w.value_at(s, t2);
    integral += 0.5 * (prev_v * prev_v + v_end * v_end) * (t2 - prev_t);
    return std::sqrt(integral / (t2 - t1));
}

Real relative_error(const Waveform& test, const Waveform& reference, const std::string& signal,
                    Real t1, Real t2) {
    if (!(t2 > t1)) throw SimError("analysis", "empty comparison window");
    if (test.t.empty() || reference.t.empty() || test.t.front() > t1 || test.t.back() < t2 ||
        reference.t.front() > t1 || reference.t.back() < t2) {
        throw SimError("analysis", "waveforms do not cover the comparison window");
    }
    const int st = test.signal_index(signal);
    const int sr = reference.signal_index(signal);

    const Real step = std::min(test.median_spacing(t1, t2), reference.median_spacing(t1, t2));
    const std::size_t n = static_cast<std::size_t>(std::floor((t2 - t1) / step)) + 1;

    Real num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Real time = t1 + static_cast<Real>(j) * step;
        const Real a = test.value_at(st, time);
        const Real b = reference.value_at(sr, time);
        num += (a - b) * (a - b);
        den += b * b;
    }
    if (den == 0.0) throw SimError("analysis", "reference RMS is zero");
    return std::sqrt(num / den);
}

namespace {

void fft_radix2(std::vector<std::complex<Real>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const Real ang = -2.0 * M_PI / static_cast<Real>(len);
        const std::complex<Real> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<Real> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace

Real Spectrum::dominant_frequency() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < magnitude.size(); ++i) {
        if (magnitude[i] > magnitude[best]) best = i;
    }
    return freq_hz.empty() ? 0.0 : freq_hz[best];
}

Spectrum fft_spectrum(const Waveform& w, const std::string& signal, Real t1, Real t2, int bins) {
    if (!(t2 > t1) || bins < 2) throw SimError("analysis", "bad fft window or bin count");
    std::size_t n = 1;
    while (n < static_cast<std::size_t>(bins)) n <<= 1;

    const Real step = (t2 - t1) / static_cast<Real>(n);
    if (w.rows() >= 2 && (t2 - t1) < step * 2.0) throw SimError("analysis", "fft window too short");
    const int s = w.signal_index(signal);

    std::vector<std::complex<Real>> a(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Real time = t1 + static_cast<Real>(j) * step;
        const Real hann = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<Real>(j) /
                                                static_cast<Real>(n - 1)));
        a[j] = hann * w.value_at(s, time);
    }
    fft_radix2(a);

    Spectrum sp;
    const Real df = 1.0 / (t2 - t1);
    const Real scale = 1.0 / std::sqrt(static_cast<Real>(n));
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const Real fold = (k == 0 || k == n / 2) ? 1.0 : std::sqrt(2.0);
        sp.freq_hz.push_back(static_cast<Real>(k) * df);
        sp.magnitude.push_back(std::abs(a[k]) * scale * fold);
    }
    return sp;
}

DcmErrorTable dcm_error_table(const std::vector<const Waveform*>& runs,
                              const std::vector<std::string>& run_ids, const Waveform& oracle,
                              const std::string& signal, const std::vector<Real>& sample_times) {
    DcmErrorTable table;
    table.run_ids = run_ids;
    table.sample_times = sample_times;
    const int so = oracle.signal_index(signal);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const int sr = runs[r]->signal_index(signal);
        std::vector<Real> errs;
        Real sum = 0.0;
        for (Real time : sample_times) {
            const Real e = std::abs(runs[r]->value_at(sr, time) - oracle.value_at(so, time));
            errs.push_back(e);
            sum += e;
        }
        table.abs_errors.push_back(std::move(errs));
        table.averages.push_back(sample_times.empty() ? 0.0
                                                      : sum / static_cast<Real>(sample_times.size()));
    }
    return table;
}

ChatteringIndex chattering_index(const Waveform& w, const std::string& signal,
                                 const std::vector<std::pair<Real, Real>>& intervals,
                                 std::vector<ChatteringIndex>* per_interval) {
    const int s = w.signal_index(signal);
    ChatteringIndex total;
    if (per_interval) per_interval->clear();
    for (const auto& [a, b] : intervals) {
        ChatteringIndex idx;
        int prev_sign = 0;
        for (std::size_t j = 0; j < w.rows(); ++j) {
            if (w.t[j] < a || w.t[j] > b) continue;
            const Real v = w.cols[s][j];
            idx.max_amplitude = std::max(idx.max_amplitude, std::abs(v));
            const int sign = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
            if (sign != 0) {
                if (prev_sign != 0 && sign != prev_sign) ++idx.sign_alternations;
                prev_sign = sign;
            }
        }
        total.sign_alternations += idx.sign_alternations;
        total.max_amplitude = std::max(total.max_amplitude, idx.max_amplitude);
        if (per_interval) per_interval->push_back(idx);
    }
    return total;
}

}  // namespace eschil
