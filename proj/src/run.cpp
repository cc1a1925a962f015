#include "ddft/run.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "ddft/acceptance.hpp"
#include "ddft/diagnostics.hpp"
#include "ddft/equilibrium.hpp"
#include "ddft/particles.hpp"

namespace ddft {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct LoadedRun {
    RunConfig cfg;
    Grid grid;
    ValidationReport validation;
    std::vector<std::string> warnings;
    fs::path out;
};

LoadedRun load_run(const std::string& config_path, const CliOverrides& ov) {
    LoadedRun run;
    run.cfg = parse_config_file(config_path);
    if (!ov.out_dir.empty()) run.cfg.output_dir = ov.out_dir;
    if (ov.seed) run.cfg.seed = *ov.seed;
    run.grid = build_grid(run.cfg.L, run.cfg.N, run.cfg.d);
    run.validation = validate_assumptions(run.grid, run.cfg);
    run.warnings = run.validation.warnings;
    run.out = run.cfg.output_dir;
    fs::create_directories(run.out);
    return run;
}

json validation_json(const ValidationReport& v) {
    return json{{"v2_sup", v.v2_sup},
                {"v2_small_interaction", v.v2_small},
                {"z2_sup", v.z2_sup},
                {"mu_max_estimate", v.mu_max_estimate},
                {"contraction_ok", v.contraction_ok}};
}

json spectral_json(const SpectralReport& rep) {
    return json{{"mu_min", rep.mu_min},
                {"mu_max", rep.mu_max},
                {"z2_sup", rep.z2_sup},
                {"contraction_margin", rep.contraction_margin},
                {"log_fredholm_det", rep.log_fredholm_det},
                {"symmetry_defect", rep.symmetry_defect},
                {"eigenvalues_H", rep.eigenvalues_H},
                {"eigenvalues_gamma", rep.eigenvalues_gamma}};
}

json base_metadata(const LoadedRun& run, const char* command) {
    return json{{"command", command},
                {"config", run.cfg.source_text},
                {"config_canonical", config_to_text(run.cfg)},
                {"config_hash", content_hash(run.cfg.source_text)},
                {"seed", run.cfg.seed},
                {"threads", run.cfg.threads},
                {"validation", validation_json(run.validation)}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int report_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

/// Fixed-point reference for the L2-distance column; empty when unavailable.
std::optional<Field> equilibrium_reference(const LoadedRun& run,
                                           std::vector<std::string>& warnings) {
    if (!run.cfg.eq_reference || run.cfg.model.V1.modulation.active()) return std::nullopt;
    Field uniform(run.grid.num_cells(), 1.0);
    const double mass = integrate(run.grid, uniform);
    for (auto& x : uniform.v) x /= mass;
    const EquilibriumResult eq =
        picard_solve(run.grid, run.cfg.model.V1, run.cfg.model.V2, uniform, run.cfg.eq_damping,
                     run.cfg.eq_tol, run.cfg.eq_max_iter);
    if (!eq.converged) {
        warnings.push_back("equilibrium reference did not converge; L2-distance column disabled");
        return std::nullopt;
    }
    return eq.rho0;
}

}  // namespace

int cmd_evolve(const std::string& config_path, const CliOverrides& ov) {
    try {
        LoadedRun run = load_run(config_path, ov);
        try {
            const std::optional<Field> ref = equilibrium_reference(run, run.warnings);

            EvolveOptions opts;
            opts.equilibrium_ref = ref ? &*ref : nullptr;
            opts.store_snapshots = true;
            opts.snapshot_every = run.cfg.snapshot_every;
            Field rho0 = build_initial_density(run.grid, run.cfg.initial, &run.warnings);
            TrajectoryRecord traj = evolve(run.grid, rho0, run.cfg.stepping, run.cfg.model,
                                           run.cfg.t_end, run.cfg.record_every, opts);

            std::ofstream csv(run.out / "diagnostics.csv", std::ios::binary);
            write_diagnostics_csv(csv, traj);
            csv.close();

            fs::create_directories(run.out / "snapshots");
            json snapshot_index = json::array();
            for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "%04zu.csv", i);
                std::ofstream snap(run.out / "snapshots" / name, std::ios::binary);
                write_snapshot_csv(snap, run.grid, traj.snapshots[i].second);
                snapshot_index.push_back({{"file", name}, {"t", traj.snapshots[i].first}});
            }

            json meta = base_metadata(run, "evolve");
            for (const auto& w : traj.warnings) run.warnings.push_back(w);
            meta["warnings"] = run.warnings;
            meta["rows"] = traj.rows.size();
            meta["guard_halvings"] = traj.guard_halvings;
            meta["snapshots"] = snapshot_index;
            meta["final_mass"] = traj.rows.empty() ? 0.0 : traj.rows.back().mass;

            if (traj.rate_inputs.valid && traj.rows.size() >= 2) {
                const RateReport rate = rate_estimate(traj);
                meta["rate"] = json{{"nu1", rate.nu1},
                                    {"c_pw", rate.c_pw},
                                    {"mu_hat_min", rate.mu_hat_min},
                                    {"mu_hat_max", rate.mu_hat_max},
                                    {"r_t", rate.r_t},
                                    {"r_t_conservative", rate.r_t_conservative},
                                    {"positive", rate.positive}};
                std::vector<int> violations;
                std::string notice;
                const bool ok = check_envelope(traj, rate, &violations, &notice);
                meta["envelope"] = json{{"holds", ok},
                                        {"violating_rows", violations},
                                        {"notice", notice}};
            }

            const int n1 = run.grid.num_cells() * run.grid.dim();
            if (run.grid.dim() == 1 && n1 <= 512 && !traj.rows.empty()) {
                const SimState init = [&] {
                    SimState s;
                    s.rho = traj.snapshots.empty() ? traj.final_state.rho
                                                   : traj.snapshots.front().second;
                    return s;
                }();
                const TensorField D0 = assemble_D(run.grid, run.cfg.model.Z1, init.rho);
                meta["spectral_initial"] =
                    spectral_json(spectral_report(run.grid, D0, run.cfg.model.Z2, init.rho));
                const TensorField Df =
                    assemble_D(run.grid, run.cfg.model.Z1, traj.final_state.rho);
                meta["spectral_final"] = spectral_json(
                    spectral_report(run.grid, Df, run.cfg.model.Z2, traj.final_state.rho));
            }

            write_json(run.out / "run.json", meta);
            return 0;
        } catch (const NumericalError& e) {
            json meta = base_metadata(run, "evolve");
            meta["warnings"] = run.warnings;
            meta["error"] = e.what();
            write_json(run.out / "run.json", meta);
            return report_error(e, 2);
        }
    } catch (const ConfigError& e) {
        return report_error(e, 1);
    } catch (const std::exception& e) {
        return report_error(e, 2);
    }
}

int cmd_equilibrium(const std::string& config_path, const CliOverrides& ov) {
    try {
        LoadedRun run = load_run(config_path, ov);
        try {
            Field rho_init = build_initial_density(run.grid, run.cfg.initial, &run.warnings);
            const EquilibriumResult eq =
                picard_solve(run.grid, run.cfg.model.V1, run.cfg.model.V2, rho_init,
                             run.cfg.eq_damping, run.cfg.eq_tol, run.cfg.eq_max_iter);
            const auto [nu1, c_pw] = poincare_constant(run.grid);

            json meta = base_metadata(run, "equilibrium");
            meta["warnings"] = run.warnings;
            meta["converged"] = eq.converged;
            meta["iterations"] = eq.iterations;
            meta["residual_history"] = eq.residual_history;
            meta["contraction_flag"] = eq.contraction_flag;
            meta["el_residual"] = eq.el_residual;
            meta["chemical_potential"] = eq.chemical_potential;
            meta["final_omega"] = eq.final_omega;
            meta["nu1"] = nu1;
            meta["c_pw"] = c_pw;
            if (eq.converged)
                meta["stationary_flux_linf"] =
                    stationary_flux_check(run.grid, eq.rho0, run.cfg.model);

            write_json(run.out / "equilibrium.json", meta);
            std::ofstream csv(run.out / "rho0.csv", std::ios::binary);
            write_snapshot_csv(csv, run.grid, eq.rho0);
            if (!eq.converged) {
                std::cerr << "error: fixed-point iteration did not reach tol within max_iter\n";
                return 2;
            }
            return 0;
        } catch (const NumericalError& e) {
            return report_error(e, 2);
        }
    } catch (const ConfigError& e) {
        return report_error(e, 1);
    } catch (const std::exception& e) {
        return report_error(e, 2);
    }
}

int cmd_particles(const std::string& config_path, const CliOverrides& ov,
                  const std::string& compare_path, bool compare_requested) {
    try {
        LoadedRun run = load_run(config_path, ov);
        std::optional<Field> reference;
        if (compare_requested) {
            InitialDensitySpec ref_spec;
            ref_spec.kind = InitialDensitySpec::Kind::file;
            ref_spec.path = compare_path;
            reference = build_initial_density(run.grid, ref_spec, &run.warnings);
        }
        try {
            const auto snapshots =
                simulate(run.grid, run.cfg.particles, run.cfg.particle_dt, run.cfg.particle_steps,
                         run.cfg.model.V1, run.cfg.model.V2, run.cfg.seed, run.cfg.particle_thin);

            // time-averaged histogram over the second half of the snapshots
            Field avg(run.grid.num_cells());
            std::size_t used = 0;
            for (std::size_t i = snapshots.size() / 2; i < snapshots.size(); ++i) {
                const Field h = histogram(snapshots[i], run.grid);
                for (int c = 0; c < run.grid.num_cells(); ++c) avg[c] += h[c];
                ++used;
            }
            for (auto& x : avg.v) x /= static_cast<double>(used);

            std::ofstream hcsv(run.out / "histogram.csv", std::ios::binary);
            write_snapshot_csv(hcsv, run.grid, avg);

            std::ofstream pos(run.out / "particles_final.csv", std::ios::binary);
            pos << "x";
            if (run.grid.dim() == 2) pos << ",y";
            pos << "\r\n";
            pos.precision(17);
            for (const Vec2& p : snapshots.back().positions) {
                pos << p.x[0];
                if (run.grid.dim() == 2) pos << ',' << p.x[1];
                pos << "\r\n";
            }

            json meta = base_metadata(run, "particles");
            meta["warnings"] = run.warnings;
            meta["particles"] = run.cfg.particles;
            meta["steps"] = run.cfg.particle_steps;
            meta["dt"] = run.cfg.particle_dt;
            meta["thin"] = run.cfg.particle_thin;
            meta["snapshots"] = snapshots.size();
            meta["averaged_snapshots"] = used;
            if (reference) {
                Field diff(run.grid.num_cells());
                for (int c = 0; c < run.grid.num_cells(); ++c) diff[c] = avg[c] - (*reference)[c];
                meta["l1_vs_reference"] = norm_l1(run.grid, diff);
                meta["reference_path"] = compare_path;
            }
            write_json(run.out / "particles.json", meta);
            return 0;
        } catch (const NumericalError& e) {
            return report_error(e, 2);
        }
    } catch (const ConfigError& e) {
        return report_error(e, 1);
    } catch (const std::exception& e) {
        return report_error(e, 2);
    }
}

int cmd_validate(bool list_only, bool inject_fault, std::ostream& os) {
    const auto names = acceptance_criteria_names();
    if (list_only) {
        for (std::size_t i = 0; i < names.size(); ++i)
            os << (i + 1) << "  " << names[i] << "\n";
        return 0;
    }
    AcceptanceOptions opts;
    opts.inject_fault = inject_fault;
    opts.progress = &os;
    const auto results = run_acceptance(opts);
    bool all = true;
    os << "\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        all = all && r.pass;
        os << (r.pass ? "PASS" : "FAIL") << "  " << (i + 1) << "  " << r.name;
        if (!r.details.empty()) os << "  " << r.details;
        os << "\n";
    }
    os << (all ? "all criteria passed" : "ACCEPTANCE FAILED") << "\n";
    return all ? 0 : 2;
}

}  // namespace ddft
