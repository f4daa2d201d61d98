#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "canaudit/commands.hpp"

namespace {

using canaudit::commands::kExitConfig;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> parallelism;
    bool svg = false;
    bool csv = false;
};

int dispatch(const std::string& name, const GlobalArgs& args) {
    return canaudit::commands::run_guarded(name.c_str(), [&]() {
        canaudit::config::AuditConfig cfg = canaudit::config::load(args.config_path);
        canaudit::config::Overrides overrides;
        overrides.seed = args.seed;
        overrides.out_dir = args.out_dir;
        overrides.parallelism = args.parallelism;
        canaudit::config::apply_overrides(cfg, overrides);
        if (args.svg) cfg.audit_cfg.emit_svg = true;
        if (args.csv) cfg.audit_cfg.emit_csv = true;

        if (name == "instrument") return canaudit::commands::cmd_instrument(cfg);
        if (name == "feedback") return canaudit::commands::cmd_feedback(cfg);
        if (name == "score") return canaudit::commands::cmd_score(cfg);
        if (name == "simulate") return canaudit::commands::cmd_simulate(cfg);
        if (name == "audit") return canaudit::commands::cmd_audit(cfg);
        if (name == "report") return canaudit::commands::cmd_report(cfg);
        std::cerr << "unknown subcommand " << name << '\n';
        return kExitConfig;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Behavioral-canary audit toolkit for RL fine-tuning pipelines"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Config file (JSON or TOML)")
        ->required();
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Override config seed");
    std::string out_dir;
    auto* out_opt = app.add_option("--out-dir", out_dir, "Override output directory");
    std::size_t parallelism = 0;
    auto* par_opt = app.add_option("--parallelism", parallelism, "Override worker count");
    app.add_flag("--svg", args.svg, "Emit report.svg where applicable");
    app.add_flag("--csv", args.csv, "Emit report.csv where applicable");

    for (const char* name : {"instrument", "feedback", "score", "simulate", "audit", "report"}) {
        app.add_subcommand(name)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (seed_opt->count() > 0) args.seed = seed;
    if (out_opt->count() > 0) args.out_dir = out_dir;
    if (par_opt->count() > 0) args.parallelism = parallelism;

    return dispatch(app.get_subcommands().front()->get_name(), args);
}
