// Command-line runner for the whisker flow-sensor digital twin. Each
// subcommand executes one bench or rig protocol end-to-end and writes
// plot-ready CSV tables plus a report.json with per-metric pass flags.
//
// Exit codes: 0 success, 1 metric failure, 2 usage/config error, 3 runtime
// error.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "whisker/experiment.hpp"
#include "whisker/record_io.hpp"

namespace {

namespace ex = whisker::experiment;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Scenario config JSON");
    cmd->add_option("--out", args.out_dir, "Output directory for CSV/report artifacts");
    cmd->add_option("--seed", args.seed, "Override the scenario seed");
    cmd->add_flag("--quiet", args.quiet, "Suppress per-metric output");
}

ex::ScenarioConfig make_config(const CommonArgs& args, ex::Kind kind) {
    ex::ScenarioConfig cfg;
    if (!args.config_path.empty()) {
        cfg = ex::load_config(args.config_path);
        if (cfg.kind != kind)
            throw ex::ConfigError("config kind '" + ex::to_string(cfg.kind) +
                                  "' does not match subcommand '" + ex::to_string(kind) + "'");
    } else {
        cfg = ex::ScenarioConfig::defaults_for(kind);
    }
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.seed_set = true;
    }
    if (!cfg.seed_set && kind != ex::Kind::localize && kind != ex::Kind::fit_defaults)
        throw ex::ConfigError("seed required: pass --seed or set it in the config");
    return cfg;
}

int run_kind(const CommonArgs& args, ex::Kind kind) {
    const ex::ScenarioConfig cfg = make_config(args, kind);
    const ex::ExperimentReport report = ex::run(cfg, args.out_dir, args.quiet);
    if (!args.quiet)
        std::cout << (report.all_required_pass() ? "all required metrics pass"
                                                 : "required metric failure")
                  << " (report: " << (std::filesystem::path(args.out_dir) / "report.json").string()
                  << ")\n";
    return report.all_required_pass() ? 0 : 1;
}

int run_report(const std::string& path, bool quiet) {
    std::ifstream in(path);
    if (!in) throw ex::ConfigError("cannot open report: " + path);
    nlohmann::json j;
    in >> j;
    ex::ExperimentReport rep = ex::report_from_json(j);
    const auto failures = ex::compare_to_targets(rep);
    if (!quiet) {
        for (const auto& m : rep.metrics)
            std::cout << (m.informational ? "[info] " : (m.pass ? "[pass] " : "[FAIL] ")) << m.name
                      << " = " << m.value << "\n";
        std::cout << (failures.empty() ? "all required metrics pass" : "failures:") << "\n";
        for (const auto& f : failures) std::cout << "  " << f << "\n";
    }
    return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"whisker flow-sensor digital twin"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string report_path;
    std::string record_out;
    double sim_duration = 10.8;

    auto* simulate = app.add_subcommand("simulate", "Run one dipole trial and write the record CSV");
    add_common(simulate, args);
    simulate->add_option("--duration", sim_duration, "Trial duration [s]");
    simulate->add_option("--record-out", record_out, "Record CSV filename (default record.csv)");

    auto* calibrate = app.add_subcommand("calibrate-static", "Static bench force sweep + linear fits");
    add_common(calibrate, args);
    auto* fatigue = app.add_subcommand("fatigue", "Cyclic loading with per-cycle extrema and drift");
    add_common(fatigue, args);
    auto* sweep_freq = app.add_subcommand("sweep-freq", "Commanded vs detected frequency sweep");
    add_common(sweep_freq, args);
    auto* sweep_long = app.add_subcommand("sweep-long", "Longitudinal distance sweep + decay fit");
    add_common(sweep_long, args);
    auto* sweep_trans = app.add_subcommand("sweep-trans", "Transverse offset sweep");
    add_common(sweep_trans, args);
    auto* localize = app.add_subcommand("localize", "Invert amplitudes (or a record) to geometry");
    add_common(localize, args);
    auto* fit_defaults = app.add_subcommand("fit-defaults", "Fit default chain constants to anchors");
    add_common(fit_defaults, args);

    auto* report = app.add_subcommand("report", "Re-evaluate a report.json against its targets");
    report->add_option("report", report_path, "Path to report.json")->required();
    report->add_flag("--quiet", args.quiet, "Suppress per-metric output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            ex::ScenarioConfig cfg;
            if (!args.config_path.empty())
                cfg = ex::load_config(args.config_path);
            else
                cfg.kind = ex::Kind::freq_sweep;  // defaults carry a full chain setup
            if (args.seed) {
                cfg.seed = *args.seed;
                cfg.seed_set = true;
            }
            if (!cfg.seed_set) throw ex::ConfigError("seed required: pass --seed");
            const auto src = cfg.source;
            const whisker::TimeSeriesRecord rec = whisker::simulate_dipole_trial(
                src, cfg.geometry, cfg.drag, cfg.cal, cfg.readout, sim_duration, cfg.seed);
            std::filesystem::create_directories(args.out_dir);
            const std::string name = record_out.empty() ? "record.csv" : record_out;
            whisker::io::write_record_csv(rec, std::filesystem::path(args.out_dir) / name);
            if (!args.quiet)
                std::cout << "wrote " << (std::filesystem::path(args.out_dir) / name).string()
                          << " (" << rec.size() << " samples x 4 channels)\n";
            return 0;
        }
        if (calibrate->parsed()) return run_kind(args, ex::Kind::static_sweep);
        if (fatigue->parsed()) return run_kind(args, ex::Kind::fatigue);
        if (sweep_freq->parsed()) return run_kind(args, ex::Kind::freq_sweep);
        if (sweep_long->parsed()) return run_kind(args, ex::Kind::longitudinal_sweep);
        if (sweep_trans->parsed()) return run_kind(args, ex::Kind::transverse_sweep);
        if (localize->parsed()) return run_kind(args, ex::Kind::localize);
        if (fit_defaults->parsed()) return run_kind(args, ex::Kind::fit_defaults);
        if (report->parsed()) return run_report(report_path, args.quiet);
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const whisker::io::IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
