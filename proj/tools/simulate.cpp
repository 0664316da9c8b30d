#include "eschil/csv.hpp"
#include "eschil/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace eschil;

int main(int argc, char** argv) {
    CLI::App app{"Event-synchronized co-simulation engine for switched circuits"};
    app.require_subcommand(1);
    // `oracle --h <s>` needs the short name, so help is --help only.
    app.set_help_flag("--help", "Print help");

    std::string scenario_path;
    std::string out_dir = ".";
    bool seedless = false;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario: ES engine, baselines, metrics");
    run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--out", out_dir, "Output directory");
    run_cmd->add_flag("--seedless", seedless,
                      "Confirm no entropy source is used (runs are always deterministic)");

    double oracle_h = 0.0;
    auto* oracle_cmd = app.add_subcommand("oracle", "Run only the fine-step reference");
    oracle_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    oracle_cmd->set_help_flag("--help", "Print help");
    oracle_cmd->add_option("--h", oracle_h, "Oracle step size in seconds")->required();
    oracle_cmd->add_option("--out", out_dir, "Output directory");

    std::string summary_a, summary_b, compare_out;
    auto* compare_cmd = app.add_subcommand("compare", "Compare two per-run summaries");
    compare_cmd->add_option("a", summary_a, "First run summary JSON")->required();
    compare_cmd->add_option("b", summary_b, "Second run summary JSON")->required();
    compare_cmd->add_option("--out", compare_out, "Write the comparison JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const Scenario sc = load_scenario(scenario_path);
            const auto summary = run_scenario_bundle(sc, out_dir);
            std::cout << summary.dump(2) << std::endl;
        } else if (*oracle_cmd) {
            Scenario sc = load_scenario(scenario_path);
            if (sc.oracle && oracle_h > sc.oracle->h_max) {
                throw SimError("cli", "oracle step exceeds the scenario's documented ceiling");
            }
            std::filesystem::create_directories(out_dir);
            ModeCache cache(sc.netlist);
            const std::size_t stride = sc.oracle ? sc.oracle->record_stride : 1;
            const Waveform wf = run_oracle_reference(sc, cache, oracle_h, stride);
            const auto path = std::filesystem::path(out_dir) / "oracle_waveform.csv";
            write_waveform_csv(path.string(), wf);
            std::cout << "wrote " << path.string() << " (" << wf.rows() << " rows)" << std::endl;
        } else if (*compare_cmd) {
            const auto result = compare_runs(summary_a, summary_b);
            if (!compare_out.empty()) {
                std::ofstream out(compare_out, std::ios::binary);
                out << result.dump(2) << '\n';
            }
            std::cout << result.dump(2) << std::endl;
        }
    } catch (const SimError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
