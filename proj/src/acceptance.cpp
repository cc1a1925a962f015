#include "ddft/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "ddft/diagnostics.hpp"
#include "ddft/equilibrium.hpp"
#include "ddft/free_energy.hpp"
#include "ddft/particles.hpp"

namespace ddft {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string qoi(const char* label, double value, double threshold) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s=%.3g (thr %.3g)", label, value, threshold);
    return buf;
}

/// Interacting model with hydrodynamic kernels used by criteria 1-3, 5, 10:
/// harmonic trap, small Gaussian two-body potential (||V2|| = 0.2), Gaussian
/// isotropic Z1/Z2 with contraction margin >= 0.7.
ModelSpecs interacting_model() {
    ModelSpecs m;
    m.V1 = KernelSpec::harmonic({{0.5, 0.0}}, 4.0);
    m.V2 = KernelSpec::gaussian(0.2, 0.1);
    m.Z1 = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.3, 0.2));
    m.Z2 = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.3, 0.2));
    return m;
}

Field gaussian_density(const Grid& g, double center, double width) {
    Field rho(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const double x = g.center(c).x[0] - center;
        rho[c] = std::exp(-x * x / (2.0 * width * width));
    }
    const double mass = integrate(g, rho);
    for (auto& v : rho.v) v /= mass;
    return rho;
}

Field random_density(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Field rho(g.num_cells());
    for (auto& v : rho.v) v = 0.2 + uni(rng);
    const double mass = integrate(g, rho);
    for (auto& v : rho.v) v /= mass;
    return rho;
}

struct SharedRuns {
    Grid grid256 = build_grid(1.0, 256, 1);
    TrajectoryRecord interacting;  // criteria 1 and 3
    Field interacting_rho0;
    bool interacting_ready = false;

    void ensure_interacting() {
        if (interacting_ready) return;
        StepControl ctrl;
        ctrl.dt = 1e-4;
        ctrl.energy_guard = false;  // criterion 3 measures monotonicity, it must not be enforced
        EvolveOptions opts;
        interacting_rho0 = gaussian_density(grid256, 0.45, 0.12);
        interacting = evolve(grid256, interacting_rho0, ctrl, interacting_model(), 0.2, 10, opts);
        interacting_ready = true;
    }
};

// --- criterion 1: mass conservation --------------------------------------

CriterionResult crit_mass(SharedRuns& shared, bool fault) {
    shared.ensure_interacting();
    double worst = 0.0;
    for (const auto& row : shared.interacting.rows) worst = std::max(worst, std::abs(row.mass - 1.0));
    const double thr = fault ? 1e-30 : 1e-12;
    return {"mass_conservation", worst <= thr, qoi("max|mass-1|", worst, thr)};
}

// --- criterion 2: positivity from a density with a zero cell --------------

CriterionResult crit_positivity(SharedRuns& shared) {
    Field rho0 = gaussian_density(shared.grid256, 0.45, 0.12);
    rho0[85] = 0.0;
    const double mass = integrate(shared.grid256, rho0);
    for (auto& v : rho0.v) v /= mass;

    StepControl ctrl;
    ctrl.dt = 1e-4;
    ctrl.energy_guard = false;
    // step() itself certifies min rho > 0 after every update and would throw
    const TrajectoryRecord traj =
        evolve(shared.grid256, rho0, ctrl, interacting_model(), 0.2, 10, {});
    double min_after = 1.0;
    for (std::size_t k = 1; k < traj.rows.size(); ++k)
        min_after = std::min(min_after, traj.rows[k].min_rho);
    return {"positivity", min_after > 0.0, qoi("min rho (t>0)", min_after, 0.0)};
}

// --- criterion 3: H-theorem and dissipation consistency -------------------

CriterionResult crit_h_theorem(SharedRuns& shared) {
    shared.ensure_interacting();
    const auto& rows = shared.interacting.rows;
    double worst_increase = -1e300;
    double worst_mismatch = 0.0;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const double dF = rows[k + 1].F_total - rows[k].F_total;
        worst_increase = std::max(worst_increase, dF - 1e-10 * (1.0 + std::abs(rows[k].F_total)));
        const double quotient = dF / (rows[k + 1].t - rows[k].t);
        const double mean_diss = 0.5 * (rows[k].dissipation + rows[k + 1].dissipation);
        if (std::abs(quotient) > 1e-6)
            worst_mismatch =
                std::max(worst_mismatch, std::abs(quotient - mean_diss) / std::abs(mean_diss));
    }
    const bool pass = worst_increase <= 0.0 && worst_mismatch <= 0.10;
    return {"h_theorem_dissipation", pass,
            qoi("max F increase", worst_increase, 0.0) + ", " +
                qoi("dissipation mismatch", worst_mismatch, 0.10)};
}

// --- criterion 4: heat-equation rate oracle -------------------------------

CriterionResult crit_heat_rate(SharedRuns& shared) {
    const Grid& g = shared.grid256;
    Field rho0(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        rho0[c] = 1.0 + 0.1 * std::cos(kPi * g.center(c).x[0]);

    ModelSpecs model;  // all zero
    StepControl ctrl;
    ctrl.dt = 1e-4;
    Field uniform(g.num_cells(), 1.0);
    EvolveOptions opts;
    opts.equilibrium_ref = &uniform;
    const TrajectoryRecord traj = evolve(g, rho0, ctrl, model, 0.2, 10, opts);

    // least-squares slope of log ||rho - 1||_2^2 against t
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (const auto& row : traj.rows) {
        if (!(row.l2_dist > 1e-9)) continue;
        const double y = 2.0 * std::log(row.l2_dist);
        st += row.t;
        sy += y;
        stt += row.t * row.t;
        sty += row.t * y;
        ++n;
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    const double target = -2.0 * kPi * kPi;
    const double rel = std::abs(slope - target) / std::abs(target);

    const RateReport rate = rate_estimate(traj);
    std::vector<int> violations;
    const bool envelope_ok = check_envelope(traj, rate, &violations);
    const double rt_expected = 0.2 * kPi * kPi;  // mu = 1, c_pw = 1/pi
    const double rt_err = std::abs(traj.rows.back().r_t_running - rt_expected) / rt_expected;

    const bool pass = rel <= 0.05 && rate.positive && envelope_ok && rt_err <= 1e-3;
    return {"heat_rate_oracle", pass,
            qoi("slope rel err", rel, 0.05) + ", " + qoi("r_t rel err", rt_err, 1e-3) +
                (envelope_ok ? ", envelope ok" : ", ENVELOPE VIOLATED")};
}

// --- criterion 5: equilibrium Euler-Lagrange and zero flux -----------------

CriterionResult crit_equilibrium(SharedRuns& shared) {
    const Grid& g = shared.grid256;
    const ModelSpecs model = interacting_model();
    Field uniform(g.num_cells(), 1.0);
    const EquilibriumResult eq = picard_solve(g, model.V1, model.V2, uniform, 1.0, 1e-12, 500);
    const double flux_inf = stationary_flux_check(g, eq.rho0, model);
    const bool pass = eq.converged && eq.el_residual <= 1e-6 && flux_inf <= 1e-8;
    return {"equilibrium_euler_lagrange", pass,
            qoi("stddev dF/drho", eq.el_residual, 1e-6) + ", " + qoi("|a|_inf", flux_inf, 1e-8)};
}

// --- criterion 6: HI-independence of the equilibrium ----------------------

CriterionResult crit_hi_independence() {
    const Grid g = build_grid(1.0, 128, 1);
    ModelSpecs with_z;
    with_z.V1 = KernelSpec::harmonic({{0.5, 0.0}}, 1.0);
    with_z.V2 = KernelSpec::gaussian(0.05, 0.2);
    with_z.Z1 = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.1, 0.2));
    with_z.Z2 = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.1, 0.2));
    ModelSpecs no_z = with_z;
    no_z.Z1 = TensorKernelSpec::zero();
    no_z.Z2 = TensorKernelSpec::zero();

    Field uniform(g.num_cells(), 1.0);
    const EquilibriumResult eq = picard_solve(g, with_z.V1, with_z.V2, uniform, 1.0, 1e-13, 500);

    StepControl ctrl;
    ctrl.dt = 1e-3;
    EvolveOptions opts;
    opts.equilibrium_ref = &eq.rho0;
    const Field rho0 = gaussian_density(g, 0.35, 0.1);
    const TrajectoryRecord on = evolve(g, rho0, ctrl, with_z, 5.0, 10, opts);
    const TrajectoryRecord off = evolve(g, rho0, ctrl, no_z, 5.0, 10, opts);

    const RateReport rate = rate_estimate(on);
    Field diff(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        diff[c] = on.final_state.rho[c] - off.final_state.rho[c];
    const double pair_dist = norm_l2(g, diff);
    const double on_dist = on.rows.back().l2_dist;
    const double off_dist = off.rows.back().l2_dist;

    const bool pass =
        rate.positive && pair_dist <= 1e-6 && on_dist <= 1e-5 && off_dist <= 1e-5;
    return {"hi_independence", pass,
            qoi("|rho_on-rho_off|_2", pair_dist, 1e-6) + ", " +
                qoi("max dist to fixed point", std::max(on_dist, off_dist), 1e-5) +
                (rate.positive ? "" : ", r_t NOT positive")};
}

// --- criterion 7: Picard contraction factor and uniqueness -----------------

CriterionResult crit_picard_contraction(SharedRuns& shared, std::uint64_t seed) {
    const Grid& g = shared.grid256;
    const KernelSpec V1 = KernelSpec::harmonic({{0.5, 0.0}}, 4.0);
    const KernelSpec V2 = KernelSpec::gaussian(0.2, 0.1);

    Field uniform(g.num_cells(), 1.0);
    const EquilibriumResult eq = picard_solve(g, V1, V2, uniform, 1.0, 1e-12, 500);
    double worst_ratio = 0.0;
    const auto& hist = eq.residual_history;
    const std::size_t first = hist.size() > 11 ? hist.size() - 11 : 0;
    for (std::size_t k = first; k + 1 < hist.size(); ++k)
        if (hist[k] > 1e-13) worst_ratio = std::max(worst_ratio, hist[k + 1] / hist[k]);

    std::mt19937_64 rng(seed);
    Field base;
    double worst_spread = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const EquilibriumResult r =
            picard_solve(g, V1, V2, random_density(g, rng), 1.0, 1e-12, 500);
        if (!r.converged) return {"picard_contraction_uniqueness", false, "a probe run failed"};
        if (trial == 0) {
            base = r.rho0;
        } else {
            double l1 = 0.0;
            for (int c = 0; c < g.num_cells(); ++c) l1 += std::abs(r.rho0[c] - base[c]);
            worst_spread = std::max(worst_spread, l1 * g.cell_volume());
        }
    }
    const bool pass = eq.converged && worst_ratio <= 0.83 && worst_spread <= 1e-8;
    return {"picard_contraction_uniqueness", pass,
            qoi("residual ratio", worst_ratio, 0.83) + ", " +
                qoi("uniqueness spread L1", worst_spread, 1e-8)};
}

// --- criteria 8/9: flux solver oracle equivalence + operator structure -----

struct OperatorChecks {
    double worst_pair = 0.0;       // solver route disagreement, relative L2
    double worst_defect = 0.0;     // weighted symmetry defect
    double worst_gamma_excess = 0.0;  // |gamma_k| - mu_max ||Z2||
};

OperatorChecks operator_checks(std::uint64_t seed) {
    const Grid g = build_grid(1.0, 128, 1);
    ModelSpecs m = interacting_model();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    OperatorChecks out;
    for (int trial = 0; trial < 20; ++trial) {
        const Field rho = random_density(g, rng);
        VectorField rhs(g.num_cells());
        for (auto& v : rhs.v) v.x[0] = uni(rng);

        const TensorField D = assemble_D(g, m.Z1, rho);
        const VectorField a1 = solve_flux(g, D, m.Z2, rho, rhs, 1e-12, 400);
        const VectorField a2 = solve_flux_dense(g, D, m.Z2, rho, rhs);
        const SpectralReport rep = spectral_report(g, D, m.Z2, rho);
        const VectorField a3 = flux_by_eigen_expansion(g, rep, rho, rhs);

        auto rel = [&](const VectorField& x, const VectorField& y) {
            VectorField d(x.size());
            double scale = 0.0;
            for (std::size_t c = 0; c < x.size(); ++c) d[c] = x[c] - y[c];
            scale = std::max(norm_l2(g, x), norm_l2(g, y));
            return scale > 0.0 ? norm_l2(g, d) / scale : 0.0;
        };
        out.worst_pair = std::max({out.worst_pair, rel(a1, a2), rel(a1, a3), rel(a2, a3)});
        out.worst_defect = std::max(out.worst_defect, rep.symmetry_defect);
        const double bound = rep.mu_max * rep.z2_sup;
        for (double gk : rep.eigenvalues_gamma)
            out.worst_gamma_excess = std::max(out.worst_gamma_excess, std::abs(gk) - bound);
    }
    return out;
}

CriterionResult crit_flux_oracles(const OperatorChecks& oc) {
    return {"flux_solver_oracles", oc.worst_pair <= 1e-8,
            qoi("max pairwise rel diff", oc.worst_pair, 1e-8)};
}

CriterionResult crit_operator_structure(const OperatorChecks& oc) {
    const bool pass = oc.worst_defect <= 1e-12 && oc.worst_gamma_excess <= 1e-10;
    return {"operator_structure", pass,
            qoi("symmetry defect", oc.worst_defect, 1e-12) + ", " +
                qoi("max |gamma|-bound", oc.worst_gamma_excess, 1e-10)};
}

// --- criterion 10: variational principle for the flux ----------------------

CriterionResult crit_j_principle(std::uint64_t seed) {
    const Grid g = build_grid(1.0, 128, 1);
    const ModelSpecs m = interacting_model();
    const Field rho = gaussian_density(g, 0.4, 0.15);

    // minimiser solves H a = +rho grad(dF/drho), the sign J is written with
    const VectorField rhs_diss = flux_rhs(g, rho, m.V1, m.V2, 0.0);
    VectorField rhs(g.num_cells());
    for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] = rhs_diss[c] * -1.0;
    const TensorField D = assemble_D(g, m.Z1, rho);
    const VectorField a_star = solve_flux(g, D, m.Z2, rho, rhs, 1e-12, 400);
    const double J_star = flux_objective_J(g, rho, a_star, m, 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double min_gap = 1e300;
    const double eps = 1e-3;
    for (int trial = 0; trial < 50; ++trial) {
        VectorField v(g.num_cells());
        for (auto& w : v.v) w.x[0] = uni(rng);
        VectorField perturbed(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) perturbed[c] = a_star[c] + v[c] * eps;
        min_gap = std::min(min_gap, flux_objective_J(g, rho, perturbed, m, 0.0) - J_star);
    }
    return {"j_variational_principle", min_gap > 0.0, qoi("min J[a+ew]-J[a]", min_gap, 0.0)};
}

// --- criterion 11: mean-field particle cross-check -------------------------

CriterionResult crit_particles(std::uint64_t seed) {
    const Grid g = build_grid(1.0, 64, 1);
    const KernelSpec V1 = KernelSpec::harmonic({{0.5, 0.0}}, 8.0);
    const KernelSpec V2 = KernelSpec::gaussian(0.2, 0.1);

    Field uniform(g.num_cells(), 1.0);
    const EquilibriumResult eq = picard_solve(g, V1, V2, uniform, 1.0, 1e-12, 500);
    const Field hist = simulate_histogram(g, 10000, 5e-4, 100000, V1, V2, seed);

    double l1 = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) l1 += std::abs(hist[c] - eq.rho0[c]);
    l1 *= g.cell_volume();
    return {"particle_mean_field", l1 <= 0.05, qoi("L1 distance", l1, 0.05)};
}

// --- criterion 12: functional-derivative gradient check --------------------

CriterionResult crit_gradient_check(std::uint64_t seed) {
    const Grid g = build_grid(1.0, 128, 1);
    const ModelSpecs m = interacting_model();
    // density bounded well away from zero so the one-sided difference quotient
    // is not dominated by the second variation int w^2 / rho
    Field rho(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        rho[c] = 1.0 + 0.4 * std::cos(2.0 * kPi * g.center(c).x[0]);
    const double mass = integrate(g, rho);
    for (auto& v : rho.v) v /= mass;
    const Field dF = functional_derivative(g, rho, m.V1, m.V2, 0.0);
    const double F0 = compute_F(g, rho, m.V1, m.V2, 0.0).total;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double eps = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        // random smooth cosine modes: mean-zero exactly under midpoint quadrature
        Field w(g.num_cells());
        for (int k = 1; k <= 8; ++k) {
            const double amp = 0.2 * uni(rng);
            for (int c = 0; c < g.num_cells(); ++c)
                w[c] += amp * std::cos(k * kPi * g.center(c).x[0]);
        }

        Field perturbed(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) perturbed[c] = rho[c] + eps * w[c];
        const double F1 = compute_F(g, perturbed, m.V1, m.V2, 0.0).total;
        double directional = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) directional += dF[c] * w[c];
        directional *= g.cell_volume();
        const double fd = (F1 - F0) / eps;
        worst = std::max(worst, std::abs(fd - directional) / std::max(std::abs(directional), 1e-12));
    }
    return {"functional_derivative_gradient", worst <= 1e-3, qoi("max rel err", worst, 1e-3)};
}

}  // namespace

std::vector<std::string> acceptance_criteria_names() {
    return {"mass_conservation",
            "positivity",
            "h_theorem_dissipation",
            "heat_rate_oracle",
            "equilibrium_euler_lagrange",
            "hi_independence",
            "picard_contraction_uniqueness",
            "flux_solver_oracles",
            "operator_structure",
            "j_variational_principle",
            "particle_mean_field",
            "functional_derivative_gradient"};
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
    SharedRuns shared;
    std::vector<CriterionResult> out;
    auto push = [&](CriterionResult r) {
        if (opts.progress)
            *opts.progress << (r.pass ? "pass " : "FAIL ") << r.name << "  " << r.details << "\n";
        out.push_back(std::move(r));
    };
    push(crit_mass(shared, opts.inject_fault));
    push(crit_positivity(shared));
    push(crit_h_theorem(shared));
    push(crit_heat_rate(shared));
    push(crit_equilibrium(shared));
    push(crit_hi_independence());
    push(crit_picard_contraction(shared, opts.seed + 7));
    const OperatorChecks oc = operator_checks(opts.seed + 13);
    push(crit_flux_oracles(oc));
    push(crit_operator_structure(oc));
    push(crit_j_principle(opts.seed + 21));
    push(crit_particles(opts.seed + 42));
    push(crit_gradient_check(opts.seed + 55));
    return out;
}

}  // namespace ddft
