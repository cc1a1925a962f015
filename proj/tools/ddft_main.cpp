// ddft: overdamped dynamic density functional theory solver with two-body
// hydrodynamic interactions. Subcommands: evolve, equilibrium, particles,
// validate.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ddft/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"overdamped DDFT solver with two-body hydrodynamic interactions"};
    app.require_subcommand(1);

    std::string config_path, out_dir, compare_path;
    long long seed = -1;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "run configuration file")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "seed override");
    };

    CLI::App* evolve = app.add_subcommand("evolve", "integrate the density/flux system in time");
    add_common(evolve, true);
    CLI::App* equilibrium =
        app.add_subcommand("equilibrium", "solve the stationary self-consistency fixed point");
    add_common(equilibrium, true);
    CLI::App* particles =
        app.add_subcommand("particles", "run the Brownian particle oracle (no HI)");
    add_common(particles, true);
    CLI::Option* compare_opt =
        particles->add_option("--compare", compare_path, "PDE equilibrium CSV to compare against");

    bool list_only = false, inject_fault = false;
    CLI::App* validate = app.add_subcommand("validate", "run the built-in acceptance suite");
    validate->add_flag("--list", list_only, "enumerate criteria without running");
    validate->add_flag("--inject-fault", inject_fault,
                       "test mode: corrupt one tolerance to force a failure");

    CLI11_PARSE(app, argc, argv);

    ddft::CliOverrides ov;
    ov.out_dir = out_dir;
    if (seed >= 0) ov.seed = static_cast<std::uint64_t>(seed);

    try {
        if (evolve->parsed()) return ddft::cmd_evolve(config_path, ov);
        if (equilibrium->parsed()) return ddft::cmd_equilibrium(config_path, ov);
        if (particles->parsed())
            return ddft::cmd_particles(config_path, ov, compare_path, compare_opt->count() > 0);
        if (validate->parsed()) return ddft::cmd_validate(list_only, inject_fault, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
