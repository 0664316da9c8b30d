#pragma once

#include "eschil/analysis.hpp"
#include "eschil/events.hpp"

#include <string>

namespace eschil {

/// Waveform CSV: header `t,<signal names...>`, one row per sample,
/// 17-significant-digit decimal floats.
void write_waveform_csv(const std::string& path, const Waveform& w);
Waveform read_waveform_csv(const std::string& path);

/// Event trace CSV: columns seq,t_sim_s,kind,cycle,payload_summary,
/// ordered by (t_sim, seq).
void write_trace_csv(const std::string& path, const EventLog& log);

/// Spectrum CSV: freq_hz,magnitude.
void write_spectrum_csv(const std::string& path, const Spectrum& s);

std::string format_real_17g(Real v);

}  // namespace eschil
