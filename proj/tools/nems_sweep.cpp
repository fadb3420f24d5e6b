// nems_sweep - batch front-end: run, diagnostics and validate subcommands over JSON run configurations

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nems/sweep/config.hpp"
#include "nems/sweep/csv.hpp"
#include "nems/sweep/runner.hpp"

namespace {

namespace fs = std::filesystem;
using nems::sweep::json;

enum ExitCode : int { ok = 0, config_error = 2, solver_failure = 3, guard_violation = 4 };

struct Options {
    std::string config;
    std::string out_dir{"out"};
    std::size_t threads{0};
    bool strict{false};
    std::optional<long long> seed;
};

nems::sweep::RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw nems::ConfigError("<file>", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return nems::sweep::parse_config(ss.str());
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

int write_diagnostics(const nems::sweep::RunConfig& cfg, const Options& opt) {
    const auto diag = nems::sweep::run_diagnostics(cfg);
    const fs::path dir = fs::path(opt.out_dir) / "diagnostics";
    fs::create_directories(dir);
    nems::sweep::write_text_file((dir / "correlation.csv").string(), diag.correlation_csv);
    nems::sweep::write_text_file((dir / "lamb_shift.csv").string(), diag.lamb_shift_csv);
    nems::sweep::write_text_file((dir / "secular.csv").string(), diag.secular_csv);
    json report = diag.report;
    report["resolved_config"] = nems::sweep::to_json(cfg);
    report["versions"] = nems::sweep::versions_json();
    nems::sweep::write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
    if (diag.guard_violations > 0) {
        std::cerr << "nems_sweep: " << diag.guard_violations << " guard violation(s), see report.json\n";
        if (opt.strict) return guard_violation;
    }
    return ok;
}

int run_command(const Options& opt) {
    const auto cfg = load_config(opt.config);
    if (cfg.task == nems::sweep::TaskType::diagnostics) return write_diagnostics(cfg, opt);

    const std::size_t threads = resolve_threads(opt.threads);
    const auto out = nems::sweep::run(cfg, threads);
    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    nems::sweep::write_text_file((dir / "results.csv").string(), out.results_csv);
    if (out.trajectory_csv) nems::sweep::write_text_file((dir / "trajectory.csv").string(), *out.trajectory_csv);
    nems::sweep::write_text_file((dir / "meta.json").string(),
                                 nems::sweep::meta_json(cfg, out, threads, opt.seed).dump(2) + "\n");

    std::cerr << "nems_sweep: " << out.records.size() << " point(s), " << out.failures << " failed, "
              << out.wall_seconds << " s\n";
    if (!out.records.empty() && out.failures == out.records.size()) {
        std::cerr << "nems_sweep: every point failed; first error: " << out.records.front().error << "\n";
        return solver_failure;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    nems::sweep::retain_heap_memory();
    CLI::App app{"Beyond-wide-band Redfield transport sweeps for a quantum dot coupled to a harmonic oscillator"};
    app.require_subcommand(1);
    Options opt;
    long long seed = 0;

    auto add_common = [&](CLI::App* sub, bool outputs) {
        sub->add_option("--config", opt.config, "Run configuration (JSON, schema 1)")->required()->check(CLI::ExistingFile);
        if (outputs) {
            sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
            sub->add_option("--threads", opt.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
            sub->add_flag("--strict", opt.strict, "Exit with status 4 when a diagnostics guard fails");
            sub->add_option("--seed", seed, "Reserved; the solver has no stochastic components");
        }
    };
    auto* run = app.add_subcommand("run", "Execute the configured task and write results.csv and meta.json");
    add_common(run, true);
    auto* diag = app.add_subcommand("diagnostics", "Write correlation, Lamb-shift and secular-validity reports");
    add_common(diag, true);
    auto* validate = app.add_subcommand("validate", "Parse and validate a configuration, print the resolved form");
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }
    if (run->count("--seed") || diag->count("--seed")) opt.seed = seed;

    try {
        if (*validate) {
            const auto cfg = load_config(opt.config);
            std::cout << nems::sweep::to_json(cfg).dump(2) << "\n";
            return ok;
        }
        if (*diag) return write_diagnostics(load_config(opt.config), opt);
        return run_command(opt);
    } catch (const nems::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const nems::InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return solver_failure;
    }
}
