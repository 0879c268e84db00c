// kpz: command-line driver for the KPZ/SHE polymer identity laboratory.
//
// Subcommands: verify-tiny, ensemble, wasserstein, flat-limit, report.
// Exit codes: 0 pass, 1 check failure, 2 usage/config error.

#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "kpzlab/config.hpp"
#include "kpzlab/report.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replicas;
    std::optional<std::string> out;
    std::optional<int> workers;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "JSON experiment config")->required();
    app->add_option("--seed", f.seed, "override config seed");
    app->add_option("--replicas", f.replicas, "override replica count");
    app->add_option("--out", f.out, "override output directory");
    app->add_option("--workers", f.workers, "worker thread count (results identical for any value)");
}

int load_config(const CommonFlags& f, const std::string& expected_kind, kpzlab::ExperimentConfig& cfg) {
    try {
        cfg = kpzlab::ExperimentConfig::load(f.config_path);
        if (f.seed) cfg.seed = *f.seed;
        if (f.replicas) cfg.replicas = *f.replicas;
        if (f.out) cfg.out_dir = *f.out;
        if (f.workers) cfg.workers = *f.workers;
        if (cfg.workers < 1) cfg.workers = static_cast<int>(std::thread::hardware_concurrency());
        if (!expected_kind.empty() && cfg.kind != expected_kind) {
            std::cerr << "config error: kind is '" << cfg.kind << "', expected '" << expected_kind << "'\n";
            return kpzlab::kExitConfigError;
        }
        cfg.validate();
    } catch (const kpzlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kpzlab::kExitConfigError;
    }
    return -1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kpz - numerical laboratory for SHE/directed-polymer identities of the 1-D KPZ equation"};
    app.require_subcommand(1);

    CommonFlags vt_flags, en_flags, wa_flags, fl_flags;
    bool corrupt_derivative = false;
    std::string report_dir;

    CLI::App* vt = app.add_subcommand("verify-tiny", "exact quadrature checks on the tiny system");
    add_common(vt, vt_flags);
    vt->add_flag("--corrupt-derivative", corrupt_derivative,
                 "test hook: perturb the analytic Malliavin derivative (must fail)");

    CLI::App* en = app.add_subcommand("ensemble", "Monte Carlo identity residual suite");
    add_common(en, en_flags);

    CLI::App* wa = app.add_subcommand("wasserstein", "empirical Wasserstein decorrelation bound");
    add_common(wa, wa_flags);

    CLI::App* fl = app.add_subcommand("flat-limit", "sigma -> 0 endpoint density limit");
    add_common(fl, fl_flags);

    CLI::App* re = app.add_subcommand("report", "aggregate summaries in a run directory");
    re->add_option("run_dir", report_dir, "directory with manifest.json and *.summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kpzlab::kExitConfigError;
    }

    try {
        kpzlab::ExperimentConfig cfg;
        if (vt->parsed()) {
            if (const int rc = load_config(vt_flags, "verify-tiny", cfg); rc >= 0) return rc;
            return kpzlab::cmd_verify_tiny(cfg, corrupt_derivative);
        }
        if (en->parsed()) {
            if (const int rc = load_config(en_flags, "ensemble", cfg); rc >= 0) return rc;
            return kpzlab::cmd_ensemble(cfg);
        }
        if (wa->parsed()) {
            if (const int rc = load_config(wa_flags, "wasserstein", cfg); rc >= 0) return rc;
            return kpzlab::cmd_wasserstein(cfg);
        }
        if (fl->parsed()) {
            if (const int rc = load_config(fl_flags, "flat-limit", cfg); rc >= 0) return rc;
            return kpzlab::cmd_flat_limit(cfg);
        }
        if (re->parsed()) return kpzlab::cmd_report(report_dir);
    } catch (const kpzlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kpzlab::kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kpzlab::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kpzlab::kExitCheckFailure;
    }
    return kpzlab::kExitConfigError;
}
