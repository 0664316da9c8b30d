#include "eschil/scenario.hpp"

#include "eschil/wire.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace eschil {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw SimError("cli", msg); }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CarrierKind parse_carrier(const std::string& s) {
    if (s == "sawtooth") return CarrierKind::Sawtooth;
    if (s == "triangle") return CarrierKind::Triangle;
    fail("unknown carrier kind '" + s + "'");
}

PwmConfig parse_pwm_template(const json& j, const Netlist& net) {
    PwmConfig cfg;
    if (!j.is_array()) fail("'gates' must be an array of gate PWM objects");
    cfg.gates.resize(net.gate_count());
    for (auto& g : cfg.gates) g.gate_index = -1;

    std::vector<std::string> order;
    for (const auto& jg : j) {
        const std::string gate = jg.at("gate").get<std::string>();
        const int gi = net.gate_index(gate);
        auto& g = cfg.gates[gi];
        g.gate_index = gi;
        order.push_back(gate);
        if (jg.contains("complementary_of")) {
            g.complementary_of = net.gate_index(jg["complementary_of"].get<std::string>());
            g.dead_time = jg.value("dead_time_s", 0.0);
        } else {
            g.carrier = parse_carrier(jg.value("carrier", std::string("sawtooth")));
            g.period = jg.at("period_s").get<Real>();
            g.duty = jg.value("duty", 0.0);
            g.phase = jg.value("phase", 0.0);
            g.polarity_invert = jg.value("polarity_invert", false);
        }
    }
    for (std::size_t i = 0; i < cfg.gates.size(); ++i) {
        if (cfg.gates[i].gate_index < 0) {
            fail("gate '" + net.gate_ids[i] + "' missing from the PWM template");
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<Sensor> parse_sensors(const json& j, const Netlist& net) {
    std::vector<Sensor> sensors;
    for (const auto& js : j) {
        Sensor s;
        const std::string probe = js.at("probe").get<std::string>();
        s.probe_index = -1;
        for (std::size_t i = 0; i < net.probes.size(); ++i) {
            if (net.probes[i].name == probe) s.probe_index = static_cast<int>(i);
        }
        if (s.probe_index < 0) fail("sensor references unknown probe '" + probe + "'");
        s.gain = js.value("gain", 1.0);
        s.offset = js.value("offset", 0.0);
        s.quant_bits = js.value("quant_bits", 0);
        s.full_scale = js.value("full_scale", 0.0);
        sensors.push_back(s);
    }
    return sensors;
}

}  // namespace

std::unique_ptr<CycleController> Scenario::make_controller() const {
    switch (controller.kind) {
        case ControllerKind::None:
            return std::make_unique<NoneController>();
        case ControllerKind::ConstantDuty:
            return std::make_unique<ConstantDutyController>(controller.pwm_template);
        case ControllerKind::Wpt:
            return std::make_unique<WptController>(controller.wpt);
        case ControllerKind::External:
            return std::make_unique<ExternalController>(wire::tcp_connect(controller.endpoint),
                                                        controller.pwm_template);
    }
    throw SimError("cli", "unknown controller kind");
}

std::unique_ptr<DurationSource> Scenario::make_duration_source() const {
    switch (timing_mode) {
        case TimingMode::Instant: return std::make_unique<InstantDuration>();
        case TimingMode::Measured: return std::make_unique<MeasuredDuration>();
        case TimingMode::Scripted: return std::make_unique<ScriptedDuration>(timing_script);
    }
    throw SimError("cli", "unknown timing mode");
}

Scenario load_scenario(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_scenario(slurp(path), dir);
}

Scenario parse_scenario(const std::string& json_text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("scenario JSON parse error: ") + e.what());
    }

    Scenario sc;
    sc.name = doc.value("name", std::string("scenario"));

    if (doc.contains("netlist")) {
        sc.netlist = parse_netlist(doc["netlist"].dump());
    } else if (doc.contains("netlist_file")) {
        auto p = std::filesystem::path(doc["netlist_file"].get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        sc.netlist = parse_netlist(slurp(p.string()));
    } else {
        fail("scenario needs 'netlist' or 'netlist_file'");
    }

    sc.duration = doc.at("duration_s").get<Real>();
    if (!(sc.duration > 0.0)) fail("duration must be > 0");
    sc.t_c = doc.value("control_period_s", 25e-6);
    sc.t_d = doc.value("sampling_delay_s", 0.0);

    if (doc.contains("timing")) {
        const auto& jt = doc["timing"];
        const std::string mode = jt.value("mode", std::string("instant"));
        if (mode == "instant") {
            sc.timing_mode = TimingMode::Instant;
        } else if (mode == "measured") {
            sc.timing_mode = TimingMode::Measured;
        } else if (mode == "scripted") {
            sc.timing_mode = TimingMode::Scripted;
            for (const auto& v : jt.value("script", json::array())) {
                sc.timing_script.push_back(v.get<Real>());
            }
        } else {
            fail("unknown timing mode '" + mode + "'");
        }
    }

    const auto& jc = doc.value("controller", json::object());
    const std::string ckind = jc.value("kind", std::string("none"));
    if (ckind == "none") {
        sc.controller.kind = ControllerKind::None;
        if (sc.netlist.gate_count() > 0) {
            fail("netlist has gates but the controller is 'none'");
        }
    } else if (ckind == "constant_duty") {
        sc.controller.kind = ControllerKind::ConstantDuty;
        sc.controller.pwm_template = parse_pwm_template(jc.at("gates"), sc.netlist);
    } else if (ckind == "external") {
        sc.controller.kind = ControllerKind::External;
        sc.controller.pwm_template = parse_pwm_template(jc.at("gates"), sc.netlist);
        sc.controller.endpoint = jc.at("endpoint").get<std::string>();
    } else if (ckind == "wpt") {
        sc.controller.kind = ControllerKind::Wpt;
        auto& w = sc.controller.wpt;
        w.gate_a_hi = sc.netlist.gate_index(jc.at("gate_a_hi").get<std::string>());
        w.gate_a_lo = sc.netlist.gate_index(jc.at("gate_a_lo").get<std::string>());
        w.gate_b_hi = sc.netlist.gate_index(jc.at("gate_b_hi").get<std::string>());
        w.gate_b_lo = sc.netlist.gate_index(jc.at("gate_b_lo").get<std::string>());
        if (jc.contains("gate_buck")) {
            w.gate_buck = sc.netlist.gate_index(jc["gate_buck"].get<std::string>());
        }
        w.bridge_period = jc.value("bridge_period_s", sc.t_c);
        w.dead_time = jc.value("dead_time_s", 0.0);
        w.steady_shift = jc.value("steady_shift", 0.25);
        w.ramp_duration = jc.value("ramp_duration_s", 0.01);
        w.buck_period = jc.value("buck_period_s", 200e-6);
        w.rx_enable_time = jc.value("rx_enable_time_s", 0.01);
        w.setpoint = jc.value("setpoint", 0.0);
        w.kp = jc.value("kp", 0.0);
        w.ki = jc.value("ki", 0.0);
        w.initial_duty = jc.value("initial_duty", 0.0);
        if (jc.contains("current_probe")) {
            const std::string probe = jc["current_probe"].get<std::string>();
            w.current_sample_index = -1;
            for (std::size_t i = 0; i < sc.netlist.probes.size(); ++i) {
                if (sc.netlist.probes[i].name == probe) {
                    w.current_sample_index = static_cast<int>(i);
                }
            }
            if (w.current_sample_index < 0) fail("unknown current_probe '" + probe + "'");
        }
    } else {
        fail("unknown controller kind '" + ckind + "'");
    }
    if (jc.contains("sensors")) sc.controller.sensors = parse_sensors(jc["sensors"], sc.netlist);

    if (doc.contains("solver")) {
        const auto& js = doc["solver"];
        sc.solver.abs_tol = js.value("abs_tol", 1e-9);
        sc.solver.rel_tol = js.value("rel_tol", 1e-6);
        sc.solver.p_init = js.value("p_init", 4);
        sc.solver.p_max = js.value("p_max", 8);
        sc.solver.dt_min = js.value("dt_min_s", 1e-12);
        sc.solver.dt_max = js.value("dt_max_s", 0.0);
        sc.solver.dt_init = js.value("dt_init_s", 1e-8);
    }
    sc.es_record_stride = doc.value("es_record_stride", 1);

    for (const auto& jb : doc.value("baselines", json::array())) {
        BaselineSpec b;
        const std::string m = jb.at("method").get<std::string>();
        if (m == "fe") {
            b.method = FixedMethod::ForwardEuler;
        } else if (m == "be") {
            b.method = FixedMethod::BackwardEuler;
        } else if (m == "trap") {
            b.method = FixedMethod::Trapezoidal;
        } else {
            fail("unknown baseline method '" + m + "'");
        }
        b.h = jb.at("h_s").get<Real>();
        if (!(b.h > 0.0)) fail("baseline step must be > 0");
        const Real steps_per_tc = sc.t_c / b.h;
        if (std::abs(steps_per_tc - std::round(steps_per_tc)) > 1e-9 * steps_per_tc) {
            fail("baseline step must divide the control period");
        }
        b.record_stride = jb.value("record_stride", 1);
        sc.baselines.push_back(b);
    }

    if (doc.contains("oracle")) {
        OracleSpec o;
        o.h = doc["oracle"].value("h_s", 1e-9);
        o.h_max = doc["oracle"].value("h_max_s", o.h);
        if (o.h > o.h_max) fail("oracle step exceeds the scenario's documented ceiling");
        o.record_stride = doc["oracle"].value("record_stride", 1);
        sc.oracle = o;
    }

    if (doc.contains("metrics")) {
        const auto& jm = doc["metrics"];
        if (jm.contains("window")) {
            sc.metrics.window_start = jm["window"][0].get<Real>();
            sc.metrics.window_end = jm["window"][1].get<Real>();
        } else {
            sc.metrics.window_start = 0.0;
            sc.metrics.window_end = sc.duration;
        }
        for (const auto& s : jm.value("error_signals", json::array())) {
            sc.metrics.error_signals.push_back(s.get<std::string>());
        }
        for (const auto& s : jm.value("rms_signals", json::array())) {
            sc.metrics.rms_signals.push_back(s.get<std::string>());
        }
        if (jm.contains("fft")) {
            FftSpec f;
            f.signal = jm["fft"].at("signal").get<std::string>();
            f.bins = jm["fft"].value("bins", 4096);
            sc.metrics.fft = f;
        }
        if (jm.contains("dcm_table")) {
            DcmSpec d;
            d.signal = jm["dcm_table"].at("signal").get<std::string>();
            for (const auto& v : jm["dcm_table"].at("times")) {
                d.sample_times.push_back(v.get<Real>());
            }
            sc.metrics.dcm = d;
        }
        if (jm.contains("chattering")) {
            ChatteringSpec c;
            c.signal = jm["chattering"].at("signal").get<std::string>();
            for (const auto& v : jm["chattering"].value("diodes", json::array())) {
                c.diodes.push_back(v.get<std::string>());
            }
            c.min_span_s = jm["chattering"].value("min_span_s", 0.0);
            sc.metrics.chattering = c;
        }
    } else {
        sc.metrics.window_start = 0.0;
        sc.metrics.window_end = sc.duration;
    }

    return sc;
}

}  // namespace eschil
