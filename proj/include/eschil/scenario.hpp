#pragma once

#include "eschil/baseline.hpp"
#include "eschil/controller.hpp"
#include "eschil/netlist.hpp"
#include "eschil/session.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace eschil {

struct BaselineSpec {
    FixedMethod method = FixedMethod::ForwardEuler;
    Real h = 0.0;
    std::size_t record_stride = 1;
};

struct OracleSpec {
    Real h = 1e-9;
    Real h_max = 1e-9;  // documented per-scenario ceiling for the oracle step
    std::size_t record_stride = 1;
};

struct FftSpec {
    std::string signal;
    int bins = 4096;
};

struct DcmSpec {
    std::string signal;
    std::vector<Real> sample_times;
};

struct ChatteringSpec {
    std::string signal;
    // Blocked spans come from the ES event trace: intervals where every
    // listed diode is blocked (empty list = all diodes). Spans shorter than
    // min_span_s are ignored.
    std::vector<std::string> diodes;
    Real min_span_s = 0.0;
};

struct MetricsSpec {
    Real window_start = 0.0;
    Real window_end = 0.0;
    std::vector<std::string> error_signals;  // relative_error vs oracle
    std::vector<std::string> rms_signals;
    std::optional<FftSpec> fft;
    std::optional<DcmSpec> dcm;
    std::optional<ChatteringSpec> chattering;
};

enum class ControllerKind { None, ConstantDuty, Wpt, External };
enum class TimingMode { Instant, Measured, Scripted };

struct ControllerSpec {
    ControllerKind kind = ControllerKind::None;
    PwmConfig pwm_template;  // constant_duty fixed config / external template
    WptControllerParams wpt;
    std::string endpoint;  // external
    std::vector<Sensor> sensors;
};

struct Scenario {
    std::string name;
    Netlist netlist;
    Real duration = 0.0;
    Real t_c = 25e-6;
    Real t_d = 0.0;
    TimingMode timing_mode = TimingMode::Instant;
    std::vector<Real> timing_script;
    ControllerSpec controller;
    SolverSettings solver;
    std::size_t es_record_stride = 1;
    std::vector<BaselineSpec> baselines;
    std::optional<OracleSpec> oracle;
    MetricsSpec metrics;

    [[nodiscard]] std::unique_ptr<CycleController> make_controller() const;
    [[nodiscard]] std::unique_ptr<DurationSource> make_duration_source() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& base_dir);

}  // namespace eschil
