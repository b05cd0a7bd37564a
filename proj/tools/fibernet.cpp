// Command-line front end: simulate, evaluate, sweep, features.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fibernet/config.hpp"
#include "fibernet/error.hpp"
#include "fibernet/io.hpp"
#include "fibernet/kernels.hpp"
#include "fibernet/report.hpp"

namespace fs = std::filesystem;
using namespace fibernet;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumerical = 2, kPartial = 3 };

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void progress(const std::string& msg) { std::cerr << "[fibernet] " << msg << std::endl; }

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void apply(const Common& c, RunConfig& cfg) {
    if (c.seed) cfg.run.signal.seed = *c.seed;
    if (c.out) cfg.output_dir = *c.out;
    if (c.format) cfg.format = parse_trace_format(*c.format);
}

// Timestamps live in their own sidecar so the reports stay reproducible.
void write_timing(const fs::path& dir, const std::string& command, double seconds) {
    nlohmann::ordered_json j{{"command", command}, {"finished_utc", utc_now()}, {"wall_seconds", seconds}};
    write_file_atomic(dir / "timing.json", j.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Task> parse_tasks(const std::vector<std::string>& names) {
    std::vector<Task> tasks;
    for (const std::string& n : names) {
        const Task t = parse_task(n);
        if (std::find(tasks.begin(), tasks.end(), t) == tasks.end()) tasks.push_back(t);
    }
    return tasks;
}

// Settings for evaluating a stored trace: explicit config, else the config
// echoed in the trace metadata, else defaults.
RunConfig evaluation_config(const fs::path& trace_path, const std::string& config_path) {
    if (!config_path.empty()) return load_config(config_path);
    const fs::path meta = fs::is_directory(trace_path) ? trace_path / "trace.meta.json" : trace_path;
    const auto j = nlohmann::json::parse(read_file(meta), nullptr, false);
    if (!j.is_discarded() && j.contains("config") && j["config"].is_object())
        return parse_config(j["config"].dump(), meta.string() + " (config echo)");
    return RunConfig{};
}

int cmd_simulate(const std::string& config_path, const Common& common) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = load_config(config_path);
    apply(common, cfg);
    progress("generating drive: " + format_double(cfg.run.signal.duration) + " s at " +
             format_double(cfg.run.signal.sample_rate) + " Hz, seed " + std::to_string(cfg.run.signal.seed));
    const InputSignal input = generate_spline_input(cfg.run.signal);
    progress("simulating " + std::string(to_string(cfg.run.network.topology)) + " N=" +
             std::to_string(cfg.run.network.count));
    const ReservoirTrace trace = simulate_run(cfg.run, input);

    nlohmann::ordered_json extra;
    extra["provenance"] = {{"tool", "fibernet"}, {"version", kVersion}, {"command", "simulate"},
                           {"seed", cfg.run.signal.seed}};
    extra["config"] = nlohmann::ordered_json::parse(config_json(cfg));
    const TraceFiles files = write_trace(cfg.output_dir, trace, cfg.format, extra.dump());
    write_file_atomic(cfg.output_dir / "config.yaml", emit_config(cfg));
    write_timing(cfg.output_dir, "simulate", seconds_since(t0));
    progress("wrote " + files.features.string() + " (" + std::to_string(trace.rows()) + " rows x " +
             std::to_string(trace.cols()) + " columns)");
    return kOk;
}

void write_report(const fs::path& dir, const CapacityReport& report, const Provenance& prov,
                  const RunConfig& cfg, bool svgs, const std::string& stem) {
    write_file_atomic(dir / (stem + ".json"), capacity_report_json(report, prov, config_json(cfg)));
    write_file_atomic(dir / (stem + ".csv"), capacity_report_csv(report));
    if (!svgs) return;
    if (report.nonlinear) write_file_atomic(dir / "legendre.svg", legendre_svg(*report.nonlinear));
    if (report.memory) write_file_atomic(dir / "memory.svg", memory_svg(*report.memory));
    for (const NarmaResult& n : report.narma)
        write_file_atomic(dir / ("narma" + std::to_string(n.order) + ".svg"), narma_svg(n));
    if (!report.features.empty()) write_file_atomic(dir / "features.svg", features_svg(report.features));
}

int cmd_evaluate(const std::string& trace_path, const std::string& config_path, const std::vector<std::string>& task_names,
                 bool svgs, const Common& common) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = evaluation_config(trace_path, config_path);
    apply(common, cfg);
    if (!task_names.empty()) cfg.run.tasks = parse_tasks(task_names);
    const ReservoirTrace trace = read_trace(trace_path);
    progress("evaluating " + std::to_string(trace.rows()) + " x " + std::to_string(trace.cols()) + " trace");
    const CapacityReport report = evaluate_tasks(trace, cfg.run.tasks, cfg.run.evaluation);
    write_report(cfg.output_dir, report, {"evaluate", trace.input.spec.seed}, cfg, svgs, "report");
    write_timing(cfg.output_dir, "evaluate", seconds_since(t0));
    if (report.nonlinear) progress("C_nl = " + format_double(report.nonlinear->c_nl));
    if (report.memory) progress("C_m = " + format_double(report.memory->c_m));
    return kOk;
}

int cmd_features(const std::string& trace_path, const std::string& config_path, const std::vector<std::string>& names,
                 bool svgs, const Common& common) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = evaluation_config(trace_path, config_path);
    apply(common, cfg);
    std::vector<FeatureGroup> groups;
    for (const std::string& n : names) {
        const FeatureGroup g = parse_feature_group(n);
        if (std::find(groups.begin(), groups.end(), g) != groups.end()) {
            progress("warning: duplicate group '" + n + "' ignored");
            continue;
        }
        groups.push_back(g);
    }
    if (groups.empty()) groups = {FeatureGroup::all, FeatureGroup::midpoint_lateral, FeatureGroup::near_actuation,
                                  FeatureGroup::near_springs};
    const ReservoirTrace trace = read_trace(trace_path);
    CapacityReport report;
    report.features = compare_feature_groups(trace, groups, cfg.run.evaluation);
    for (const FeatureGroupResult& g : report.features)
        progress(std::string(to_string(g.group)) + ": " + std::to_string(g.columns_used) + " of " +
                 std::to_string(g.columns_total) + " columns, C_nl ratio " + format_double(g.c_nl_ratio) +
                 ", C_m ratio " + format_double(g.c_m_ratio));
    write_report(cfg.output_dir, report, {"features", trace.input.spec.seed}, cfg, svgs, "features");
    write_timing(cfg.output_dir, "features", seconds_since(t0));
    return kOk;
}

int cmd_sweep(const std::string& config_path, std::optional<int> workers, bool svgs, const Common& common) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = load_config(config_path);
    apply(common, cfg);
    if (!cfg.sweep) throw ConfigError(config_path + ": sweep needs a 'sweep' section with at least one axis");
    if (workers) cfg.workers = *workers;
    const SweepGrid grid = cfg.grid();
    progress("sweeping " + std::to_string(grid.point_count()) + " grid points on " +
             std::to_string(cfg.workers > 0 ? cfg.workers : kernels::default_workers()) + " worker(s)");
    const SweepTable table = run_sweep(grid);
    const Provenance prov{"sweep", cfg.run.signal.seed};
    write_file_atomic(cfg.output_dir / "sweep.csv", sweep_csv(table));
    write_file_atomic(cfg.output_dir / "sweep.json", sweep_json(table, prov, config_json(cfg)));
    write_file_atomic(cfg.output_dir / "sweep_timing.csv", sweep_timing_csv(table));
    write_file_atomic(cfg.output_dir / "config.yaml", emit_config(cfg));
    if (svgs)
        for (const auto& [name, text] : sweep_svgs(table, grid).files) write_file_atomic(cfg.output_dir / name, text);
    write_timing(cfg.output_dir, "sweep", seconds_since(t0));
    for (const SweepRow& r : table.rows)
        if (!r.ok) progress("point " + std::to_string(r.index) + " failed: " + r.error);
    progress(std::to_string(table.rows.size() - table.failures()) + " of " + std::to_string(table.rows.size()) +
             " points succeeded");
    return table.failures() > 0 ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiber-network reservoir simulator and capacity toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Common common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "Override the drive seed");
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--format", common.format, "Trace format")->check(CLI::IsMember({"csv", "binary"}));
    };

    std::string config_path;
    std::string trace_path;
    std::vector<std::string> tasks;
    std::vector<std::string> groups;
    std::optional<int> workers;
    bool no_svg = false;

    CLI::App* sim = app.add_subcommand("simulate", "Simulate a network and write its readout trace");
    sim->add_option("config", config_path, "YAML config")->required();
    add_common(sim);

    CLI::App* eval = app.add_subcommand("evaluate", "Compute capacity reports for a stored trace");
    eval->add_option("trace", trace_path, "Trace directory or metadata file")->required();
    eval->add_option("--config", config_path, "YAML config for the evaluation settings");
    eval->add_option("--tasks", tasks, "legendre, memory, narma:n, features:group")->delimiter(',');
    eval->add_flag("--no-svg", no_svg, "Skip figures");
    add_common(eval);

    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("config", config_path, "YAML config with a sweep section")->required();
    sweep->add_option("--workers", workers, "Concurrent grid points (default FIBERNET_WORKERS)")
        ->check(CLI::PositiveNumber);
    sweep->add_flag("--no-svg", no_svg, "Skip figures");
    add_common(sweep);

    CLI::App* feat = app.add_subcommand("features", "Compare readout feature groups on a stored trace");
    feat->add_option("trace", trace_path, "Trace directory or metadata file")->required();
    feat->add_option("--groups", groups, "Feature groups")->delimiter(',');
    feat->add_option("--config", config_path, "YAML config for the evaluation settings");
    feat->add_flag("--no-svg", no_svg, "Skip figures");
    add_common(feat);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sim) return cmd_simulate(config_path, common);
        if (*eval) return cmd_evaluate(trace_path, config_path, tasks, !no_svg, common);
        if (*sweep) return cmd_sweep(config_path, workers, !no_svg, common);
        if (*feat) return cmd_features(trace_path, config_path, groups, !no_svg, common);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << " (step " << e.step() << ")\n";
        return kNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kConfig;
}
