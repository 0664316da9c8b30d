#pragma once

#include "eschil/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace eschil {

/// Time-stamped multi-signal trajectory. All signals share one time base;
/// sample times are strictly increasing but not uniform (one row per
/// accepted step or event).
struct Waveform {
    std::vector<std::string> names;
    std::vector<Real> t;
    std::vector<std::vector<Real>> cols;  // one column per signal

    std::string scenario_id;
    std::string solver_id;

    void set_signals(std::vector<std::string> signal_names) {
        names = std::move(signal_names);
        cols.assign(names.size(), {});
    }

    void append(Real time, const Vec& values);
    void append(Real time, const std::vector<Real>& values);

    [[nodiscard]] std::size_t rows() const { return t.size(); }
    [[nodiscard]] int signal_index(const std::string& name) const;

    /// Linear interpolation of one signal; clamps outside the record.
    [[nodiscard]] Real value_at(int signal, Real time) const;

    /// Median spacing of the sample times inside [t1, t2].
    [[nodiscard]] Real median_spacing(Real t1, Real t2) const;
};

/// Time-weighted RMS over [t1, t2] by trapezoidal integration of the square.
Real rms(const Waveform& w, const std::string& signal, Real t1, Real t2);

/// RMS(test - ref) / RMS(ref) after resampling both records onto a uniform
/// grid with step = min median sample spacing of the two inputs.
Real relative_error(const Waveform& test, const Waveform& reference, const std::string& signal,
                    Real t1, Real t2);

struct Spectrum {
    std::vector<Real> freq_hz;
    std::vector<Real> magnitude;

    [[nodiscard]] Real dominant_frequency() const;
};

/// One-sided Hann-windowed magnitude spectrum over [t1, t2], uniformly
/// resampled to `bins` points (rounded up to a power of two). Magnitudes
/// are scaled so that the sum of their squares equals the windowed signal
/// energy.
Spectrum fft_spectrum(const Waveform& w, const std::string& signal, Real t1, Real t2, int bins);

struct DcmErrorTable {
    std::vector<std::string> run_ids;
    std::vector<Real> sample_times;
    std::vector<std::vector<Real>> abs_errors;  // [run][time]
    std::vector<Real> averages;                 // [run]
};

/// Interpolated absolute differences against the oracle at the listed times.
DcmErrorTable dcm_error_table(const std::vector<const Waveform*>& runs,
                              const std::vector<std::string>& run_ids, const Waveform& oracle,
                              const std::string& signal, const std::vector<Real>& sample_times);

struct ChatteringIndex {
    int sign_alternations = 0;
    Real max_amplitude = 0.0;
};

/// Sign alternations and peak magnitude of the signal inside the given
/// (blocked-diode) intervals; also per-interval breakdown.
ChatteringIndex chattering_index(const Waveform& w, const std::string& signal,
                                 const std::vector<std::pair<Real, Real>>& intervals,
                                 std::vector<ChatteringIndex>* per_interval = nullptr);

}  // namespace eschil
