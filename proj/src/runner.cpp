#include "eschil/runner.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

namespace eschil {

using nlohmann::json;

EsRunResult run_es(const Scenario& sc, ModeCache& cache) {
    auto controller = sc.make_controller();
    auto durations = sc.make_duration_source();
    EsSession session(sc.netlist, cache, sc.solver, sc.t_c, sc.controller.sensors);
    EventScheduler scheduler({sc.t_c, sc.t_d}, *durations, *controller, session);
    scheduler.run(sc.duration);

    EsRunResult result;
    result.waveform = session.waveform();
    result.waveform.scenario_id = sc.name;
    result.waveform.solver_id = "es";
    result.log = scheduler.log();
    result.frozen_cycles = scheduler.frozen_cycles();
    result.wall_log = scheduler.wall_log();
    result.sync_a_payloads = scheduler.sync_a_payloads();
    return result;
}

Waveform run_baseline(const Scenario& sc, ModeCache& cache, const BaselineSpec& spec) {
    auto controller = sc.make_controller();
    FixedStepOptions opt;
    opt.method = spec.method;
    opt.h = spec.h;
    opt.record_stride = spec.record_stride;
    Waveform wf = run_ts_chil(sc.netlist, cache, *controller, sc.t_c, sc.duration, opt);
    wf.scenario_id = sc.name;
    wf.solver_id = std::string(fixed_method_name(spec.method));
    return wf;
}

Waveform run_oracle_reference(const Scenario& sc, ModeCache& cache, Real h,
                              std::size_t record_stride,
                              std::vector<std::pair<Real, std::size_t>>* event_times) {
    auto controller = sc.make_controller();
    Waveform wf = run_oracle(sc.netlist, cache, *controller, sc.t_c, sc.duration, h,
                             record_stride, event_times);
    wf.scenario_id = sc.name;
    wf.solver_id = "oracle";
    return wf;
}

std::vector<std::pair<Real, Real>> blocked_intervals(const EventLog& log, const Netlist& net,
                                                     const std::vector<std::string>& diodes,
                                                     Real t_end, Real min_span) {
    std::vector<bool> watched(net.diode_count(), diodes.empty());
    for (const auto& id : diodes) watched[net.diode_index(id)] = true;

    std::vector<bool> conducting(net.diode_count(), false);
    auto all_blocked = [&] {
        for (std::size_t d = 0; d < conducting.size(); ++d) {
            if (watched[d] && conducting[d]) return false;
        }
        return true;
    };

    std::vector<std::pair<Real, Real>> spans;
    bool open = all_blocked();
    Real span_start = 0.0;
    for (const auto& e : log.ordered()) {
        if (e.kind != EventKind::PassiveSwitch || e.target < 0) continue;
        conducting[static_cast<std::size_t>(e.target)] = e.new_state == 1;
        const bool blocked_now = all_blocked();
        if (!open && blocked_now) {
            open = true;
            span_start = e.t_sim;
        } else if (open && !blocked_now) {
            open = false;
            spans.emplace_back(span_start, e.t_sim);
        }
    }
    if (open) spans.emplace_back(span_start, t_end);

    std::vector<std::pair<Real, Real>> out;
    for (const auto& s : spans) {
        if (s.second - s.first >= min_span) out.push_back(s);
    }
    return out;
}

namespace {

std::string baseline_id(const BaselineSpec& spec) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%g", fixed_method_name(spec.method), spec.h);
    return buf;
}

int sweep_width(std::size_t tasks) {
    int width = static_cast<int>(tasks);
    if (const char* env = std::getenv("ESCHIL_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) width = std::min(width, cap);
    }
    return std::max(width, 1);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cli", "cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace

json run_scenario_bundle(const Scenario& sc, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto path_of = [&](const std::string& name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    ModeCache cache(sc.netlist);

    // ES run first: its event trace supplies the blocked spans and it may
    // hold the only external-controller connection.
    EsRunResult es = run_es(sc, cache);

    // Baseline sweep plus the oracle, parallel across members.
    struct Task {
        std::string id;
        std::function<Waveform()> fn;
    };
    std::vector<Task> tasks;
    for (const auto& spec : sc.baselines) {
        tasks.push_back({baseline_id(spec), [&sc, &cache, spec] {
                             return run_baseline(sc, cache, spec);
                         }});
    }
    if (sc.oracle) {
        tasks.push_back({"oracle", [&sc, &cache] {
                             return run_oracle_reference(sc, cache, sc.oracle->h,
                                                         sc.oracle->record_stride);
                         }});
    }

    std::vector<Waveform> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    const int width = sweep_width(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(width)
#endif
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        try {
            results[i] = tasks[i].fn();
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    (void)width;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!errors[i].empty()) {
            throw SimError("cli", "run '" + tasks[i].id + "' failed: " + errors[i]);
        }
    }

    // Artifacts.
    json summary;
    summary["scenario"] = sc.name;
    summary["frozen_cycles"] = es.frozen_cycles;
    json runs;

    std::vector<std::pair<std::string, const Waveform*>> all_runs;
    all_runs.emplace_back("es", &es.waveform);
    const Waveform* oracle_wf = nullptr;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        all_runs.emplace_back(tasks[i].id, &results[i]);
        if (tasks[i].id == "oracle") oracle_wf = &results[i];
    }

    write_trace_csv(path_of("es_trace.csv"), es.log);
    for (const auto& [id, wf] : all_runs) {
        const std::string csv = id + "_waveform.csv";
        write_waveform_csv(path_of(csv), *wf);
        runs[id]["waveform_csv"] = csv;
    }
    runs["es"]["trace_csv"] = "es_trace.csv";

    // Metrics.
    const Real t1 = sc.metrics.window_start;
    const Real t2 = sc.metrics.window_end;
    json metrics;
    metrics["window"] = {t1, t2};

    for (const auto& sig : sc.metrics.rms_signals) {
        for (const auto& [id, wf] : all_runs) {
            metrics["rms"][id][sig] = rms(*wf, sig, t1, t2);
        }
    }

    if (oracle_wf && !sc.metrics.error_signals.empty()) {
        for (const auto& sig : sc.metrics.error_signals) {
            for (const auto& [id, wf] : all_runs) {
                if (wf == oracle_wf) continue;
                metrics["relative_error_vs_oracle"][id][sig] =
                    relative_error(*wf, *oracle_wf, sig, t1, t2);
            }
            const Real es_err = metrics["relative_error_vs_oracle"]["es"][sig].get<Real>();
            if (es_err > 0.0) {
                for (const auto& [id, wf] : all_runs) {
                    if (wf == oracle_wf || id == "es") continue;
                    metrics["error_ratio_vs_es"][id][sig] =
                        metrics["relative_error_vs_oracle"][id][sig].get<Real>() / es_err;
                }
            }
        }
    }

    if (oracle_wf && sc.metrics.dcm) {
        std::vector<const Waveform*> run_ptrs;
        std::vector<std::string> run_ids;
        for (const auto& [id, wf] : all_runs) {
            if (wf == oracle_wf) continue;
            run_ptrs.push_back(wf);
            run_ids.push_back(id);
        }
        const auto table = dcm_error_table(run_ptrs, run_ids, *oracle_wf, sc.metrics.dcm->signal,
                                           sc.metrics.dcm->sample_times);
        json jt;
        jt["signal"] = sc.metrics.dcm->signal;
        jt["times"] = table.sample_times;
        Real es_avg = 0.0;
        for (std::size_t r = 0; r < run_ids.size(); ++r) {
            jt["abs_errors"][run_ids[r]] = table.abs_errors[r];
            jt["averages"][run_ids[r]] = table.averages[r];
            if (run_ids[r] == "es") es_avg = table.averages[r];
        }
        if (es_avg > 0.0) {
            for (std::size_t r = 0; r < run_ids.size(); ++r) {
                jt["ratio_to_es"][run_ids[r]] = table.averages[r] / es_avg;
            }
        }
        metrics["dcm_table"] = jt;
    }

    if (sc.metrics.chattering) {
        const auto spans = blocked_intervals(es.log, sc.netlist, sc.metrics.chattering->diodes,
                                             sc.duration, sc.metrics.chattering->min_span_s);
        json jc;
        jc["signal"] = sc.metrics.chattering->signal;
        jc["interval_count"] = spans.size();
        json jspans = json::array();
        for (const auto& s : spans) jspans.push_back({s.first, s.second});
        jc["intervals"] = jspans;
        for (const auto& [id, wf] : all_runs) {
            std::vector<ChatteringIndex> per;
            const auto total = chattering_index(*wf, sc.metrics.chattering->signal, spans, &per);
            int worst = 0;
            for (const auto& p : per) worst = std::max(worst, p.sign_alternations);
            jc["per_run"][id]["alternations_total"] = total.sign_alternations;
            jc["per_run"][id]["max_alternations_per_interval"] = worst;
            jc["per_run"][id]["max_amplitude"] = total.max_amplitude;
        }
        metrics["chattering"] = jc;
    }

    if (sc.metrics.fft) {
        for (const auto& [id, wf] : all_runs) {
            const auto spectrum = fft_spectrum(*wf, sc.metrics.fft->signal, t1, t2,
                                               sc.metrics.fft->bins);
            const std::string csv = id + "_spectrum.csv";
            write_spectrum_csv(path_of(csv), spectrum);
            metrics["fft"][id]["csv"] = csv;
            metrics["fft"][id]["dominant_hz"] = spectrum.dominant_frequency();
        }
    }

    summary["runs"] = runs;
    summary["metrics"] = metrics;

    // Per-run summaries for `compare`.
    for (const auto& [id, wf] : all_runs) {
        json r;
        r["id"] = id;
        r["scenario"] = sc.name;
        r["waveform_csv"] = id + "_waveform.csv";
        r["window"] = {t1, t2};
        r["signals"] = wf->names;
        if (metrics.contains("relative_error_vs_oracle") &&
            metrics["relative_error_vs_oracle"].contains(id)) {
            r["relative_error_vs_oracle"] = metrics["relative_error_vs_oracle"][id];
        }
        write_json(path_of(id + "_run.json"), r);
        summary["runs"][id]["run_json"] = id + "_run.json";
    }

    write_json(path_of("summary.json"), summary);
    return summary;
}

json compare_runs(const std::string& summary_a_path, const std::string& summary_b_path) {
    auto load = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw SimError("cli", "cannot read '" + path + "'");
        return json::parse(in);
    };
    const json a = load(summary_a_path);
    const json b = load(summary_b_path);

    const auto dir_a = std::filesystem::path(summary_a_path).parent_path();
    const auto dir_b = std::filesystem::path(summary_b_path).parent_path();
    const Waveform wa = read_waveform_csv((dir_a / a.at("waveform_csv").get<std::string>()).string());
    const Waveform wb = read_waveform_csv((dir_b / b.at("waveform_csv").get<std::string>()).string());

    const Real t1 = std::max(a.at("window")[0].get<Real>(), b.at("window")[0].get<Real>());
    const Real t2 = std::min(a.at("window")[1].get<Real>(), b.at("window")[1].get<Real>());
    if (!(t1 < t2)) throw SimError("cli", "comparison windows do not overlap");

    json out;
    out["a"] = a.at("id");
    out["b"] = b.at("id");
    out["window"] = {t1, t2};
    for (const auto& sig : wa.names) {
        if (std::find(wb.names.begin(), wb.names.end(), sig) == wb.names.end()) continue;
        out["relative_error"][sig] = relative_error(wa, wb, sig, t1, t2);
    }
    if (a.contains("relative_error_vs_oracle") && b.contains("relative_error_vs_oracle")) {
        for (const auto& [sig, av] : a["relative_error_vs_oracle"].items()) {
            if (!b["relative_error_vs_oracle"].contains(sig)) continue;
            const Real bv = b["relative_error_vs_oracle"][sig].get<Real>();
            if (bv > 0.0) out["error_ratio_a_over_b"][sig] = av.get<Real>() / bv;
        }
    }
    return out;
}

}  // namespace eschil
