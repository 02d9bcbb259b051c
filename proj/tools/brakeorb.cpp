#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace brake::cli;

int main(int argc, char** argv) {
    CLI::App app{"brakeorb: brake orbits, symmetric capacities and their audits"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::optional<unsigned> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed (overrides [run] seed)");
    app.add_option("--threads", threads, "worker threads, 0 for all cores (overrides [run] threads)");

    auto* find = app.add_subcommand("find-orbit", "minimax pipeline for one Hamiltonian");
    auto* sweep = app.add_subcommand("sweep", "orbits near an energy level over a list of windows");
    auto* capacity = app.add_subcommand("capacity", "onset bracket for a domain");
    bool report_only = false;
    capacity->add_flag("--report", report_only, "render the stored estimates only");
    auto* torus = app.add_subcommand("embed-torus", "audits of the torus embedding");
    auto* verify = app.add_subcommand("verify", "recompute residuals of an orbit CSV");
    std::string orbit_path;
    verify->add_option("orbit", orbit_path, "orbit CSV")->required();
    for (auto* sub : {find, sweep, capacity, torus, verify}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Logger log(&std::cerr);
    RunContext ctx;
    ctx.log = &log;
    ctx.report = &std::cout;
    ctx.out = out_dir;
    try {
        const bool needs_config = !(verify->parsed() || (capacity->parsed() && report_only));
        if (!config_path.empty())
            ctx.config = Config::load(config_path);
        else if (needs_config)
            throw ConfigError("--config is required for this subcommand");
        apply_run_section(ctx, seed, threads);
        if (!verify->parsed() && !report_only) {
            std::filesystem::create_directories(ctx.out);
            log.open(ctx.out / "run.log");
        }

        if (find->parsed()) return cmd_find_orbit(ctx);
        if (sweep->parsed()) return cmd_sweep(ctx);
        if (capacity->parsed()) return cmd_capacity(ctx, report_only);
        if (torus->parsed()) return cmd_embed_torus(ctx);
        return cmd_verify(ctx, orbit_path);
    } catch (const ConfigError& e) {
        log.error("config", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        log.error("cli", e.what());
        return kExitFailure;
    }
}
