#pragma once

#include "eschil/csv.hpp"
#include "eschil/scenario.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace eschil {

struct EsRunResult {
    Waveform waveform;
    EventLog log;
    std::uint64_t frozen_cycles = 0;
    std::vector<Real> wall_log;
    std::vector<std::vector<Real>> sync_a_payloads;
};

/// Run the event-synchronized engine on the scenario.
EsRunResult run_es(const Scenario& sc, ModeCache& cache);

/// Run one fixed-step TS baseline of the scenario.
Waveform run_baseline(const Scenario& sc, ModeCache& cache, const BaselineSpec& spec);

/// Run the fine-step reference (cli `oracle` operation).
Waveform run_oracle_reference(const Scenario& sc, ModeCache& cache, Real h,
                              std::size_t record_stride,
                              std::vector<std::pair<Real, std::size_t>>* event_times = nullptr);

/// Spans inside [0, t_end] during which every listed diode is blocked
/// (empty list = all diodes), read off the event trace.
std::vector<std::pair<Real, Real>> blocked_intervals(const EventLog& log, const Netlist& net,
                                                     const std::vector<std::string>& diodes,
                                                     Real t_end, Real min_span = 0.0);

/// The `run` operation: ES run, baseline sweep (parallel across members,
/// width capped by ESCHIL_THREADS), oracle, metrics; everything written
/// under out_dir. Returns the summary document.
nlohmann::json run_scenario_bundle(const Scenario& sc, const std::string& out_dir);

/// The `compare` operation over two per-run summary JSON files.
nlohmann::json compare_runs(const std::string& summary_a_path, const std::string& summary_b_path);

}  // namespace eschil
