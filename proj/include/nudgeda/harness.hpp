#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nudgeda {

// One experiment run: which pipeline, its numeric parameters, and where
// outputs go. Configs parse from JSON with a required schema_version and
// fail on unknown keys.
struct ExperimentConfig {
    int schema_version = 1;
    std::string experiment;  // scalar | euler1d | euler2d | rte-moments |
                             // noise-study | sparsity-study | convergence
    std::string kind;        // convergence only: weno | ssprk | kernel
    std::string output_dir = "out";
    std::uint64_t seed = 12345;
    std::map<std::string, double> params;
};

ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string config_to_json_string(const ExperimentConfig& cfg);
// --set key=value override; validates the key for the chosen experiment.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct RunReport {
    ExperimentConfig config;
    std::map<std::string, double> metrics;
    double wall_seconds = 0.0;
    std::vector<std::string> files;  // relative to output_dir
};

// Build truth, observe, run the nudged solve (and the moment cascade for
// rte-moments), write CSV outputs, a manifest, and report.json into
// cfg.output_dir.
RunReport run_experiment(const ExperimentConfig& cfg);

// Refinement sweeps verifying the discretization building blocks; writes a
// report with per-level errors and the fitted order.
RunReport run_convergence(const std::string& kind, int levels, const std::string& output_dir);

// Re-emit plot-ready files from a finished run's report.
// what: state-snapshots | force-snapshots | error-history | moment-panels
void emit_plot_data(const std::string& report_path, const std::string& what);

RunReport load_report(const std::string& path);

}  // namespace nudgeda
