#include "ddft/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddft/free_energy.hpp"

namespace ddft {

Field picard_map(const Grid& g, const Field& rho, const KernelSpec& V1, const KernelSpec& V2) {
    if (rho.size() != static_cast<std::size_t>(g.num_cells()))
        throw ConfigError("picard_map: density size does not match grid");
    Field upsilon(g.num_cells());
    const Field conv = V2.is_zero() ? Field(g.num_cells()) : convolve_scalar(g, V2, rho);
    for (int c = 0; c < g.num_cells(); ++c)
        upsilon[c] = eval_potential(V1, g.center(c), 0.0) + conv[c];
    const double shift = *std::min_element(upsilon.v.begin(), upsilon.v.end());
    Field out(g.num_cells());
    double z = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
        out[c] = std::exp(-(upsilon[c] - shift));
        z += out[c];
    }
    z *= g.cell_volume();
    for (auto& x : out.v) x /= z;
    return out;
}

EquilibriumResult picard_solve(const Grid& g, const KernelSpec& V1, const KernelSpec& V2,
                               const Field& rho_init, double omega, double tol, int max_iter) {
    if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("picard_solve: omega must be in (0,1]");
    if (!(tol > 0.0)) throw ConfigError("picard_solve: tol must be positive");
    if (max_iter < 1) throw ConfigError("picard_solve: max_iter must be >= 1");

    EquilibriumResult res;
    res.contraction_flag = sup_norm(V2, g, SupDomain::displacements) <= 0.25;

    Field rho = rho_init;
    for (auto& x : rho.v) x = std::max(x, 0.0);
    const double mass = integrate(g, rho);
    if (!(mass > 0.0)) throw ConfigError("picard_solve: initial density has no mass");
    for (auto& x : rho.v) x /= mass;

    double prev_defect = std::numeric_limits<double>::infinity();
    int updates = 0;
    for (;;) {
        const Field S = picard_map(g, rho, V1, V2);
        double defect = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) defect += std::abs(S[c] - rho[c]);
        defect *= g.cell_volume();
        res.residual_history.push_back(defect);
        if (defect <= tol) {
            rho = S;  // final polish: exact Gibbs form of the last iterate
            res.converged = true;
            break;
        }
        if (updates >= max_iter) break;
        if (defect > prev_defect) omega = std::max(0.5 * omega, 1.0 / 16.0);
        prev_defect = defect;
        for (int c = 0; c < g.num_cells(); ++c) rho[c] += omega * (S[c] - rho[c]);
        ++updates;
    }
    res.iterations = updates;
    res.final_omega = omega;
    res.rho0 = std::move(rho);

    const Field dF = functional_derivative(g, res.rho0, V1, V2, 0.0);
    double mean = 0.0;
    for (double x : dF.v) mean += x;
    mean /= dF.size();
    double var = 0.0;
    for (double x : dF.v) var += (x - mean) * (x - mean);
    res.chemical_potential = mean;
    res.el_residual = std::sqrt(var / dF.size());
    return res;
}

double stationary_flux_check(const Grid& g, const Field& rho0, const ModelSpecs& model) {
    const TensorField D = assemble_D(g, model.Z1, rho0);
    const VectorField rhs = flux_rhs(g, rho0, model.V1, model.V2, 0.0);
    if (model.Z2.is_zero()) {
        VectorField a(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) a[c] = D[c].apply(rhs[c], g.dim());
        return norm_linf(a);
    }
    return norm_linf(solve_flux(g, D, model.Z2, rho0, rhs, 1e-12, 400));
}

namespace {

/// Neumann Laplacian -div(grad .) on the cell-centered mesh; missing
/// neighbors across the boundary are simply absent (zero-flux faces).
Field apply_neumann_laplacian(const Grid& g, const Field& u) {
    const int n = g.cells_per_axis();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    Field out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            if (i > 0) s += u[i] - u[i - 1];
            if (i < n - 1) s += u[i] - u[i + 1];
            out[i] = s * inv_h2;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int c = g.index(ix, iy);
            double s = 0.0;
            if (ix > 0) s += u[c] - u[g.index(ix - 1, iy)];
            if (ix < n - 1) s += u[c] - u[g.index(ix + 1, iy)];
            if (iy > 0) s += u[c] - u[g.index(ix, iy - 1)];
            if (iy < n - 1) s += u[c] - u[g.index(ix, iy + 1)];
            out[c] = s * inv_h2;
        }
    return out;
}

void project_mean_zero(Field& u) {
    double mean = 0.0;
    for (double x : u.v) mean += x;
    mean /= u.size();
    for (auto& x : u.v) x -= mean;
}

double dot(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// CG solve of L x = b on the mean-zero subspace (L is SPD there).
Field cg_solve_laplacian(const Grid& g, const Field& b) {
    Field x(g.num_cells());
    Field r = b;
    project_mean_zero(r);
    Field p = r;
    double rs = dot(r, r);
    const double target = 1e-24 * rs;
    for (int it = 0; it < 20 * g.num_cells() && rs > target; ++it) {
        Field Ap = apply_neumann_laplacian(g, p);
        const double alpha = rs / dot(p, Ap);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        const double rs_new = dot(r, r);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rs_new / rs) * p[i];
        rs = rs_new;
    }
    project_mean_zero(x);
    return x;
}

}  // namespace

std::pair<double, double> poincare_constant(const Grid& g) {
    const double pi = 3.14159265358979323846;
    Field x(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const Vec2 p = g.center(c);
        x[c] = std::cos(pi * p.x[0] / g.length());
        if (g.dim() == 2) x[c] += std::cos(pi * p.x[1] / g.length());
    }
    project_mean_zero(x);

    double nu = 0.0, nu_prev = -1.0;
    for (int it = 0; it < 200; ++it) {
        Field y = cg_solve_laplacian(g, x);
        const double norm = std::sqrt(dot(y, y));
        if (!(norm > 0.0)) throw NumericalError("poincare_constant: inverse iteration degenerated");
        for (auto& v : y.v) v /= norm;
        const Field Ly = apply_neumann_laplacian(g, y);
        nu = dot(y, Ly) / dot(y, y);
        x = y;
        if (nu_prev > 0.0 && std::abs(nu - nu_prev) <= 1e-13 * nu) break;
        nu_prev = nu;
    }
    if (!(nu > 0.0)) throw NumericalError("poincare_constant: eigensolver stagnated");
    return {nu, 1.0 / std::sqrt(nu)};
}

RateReport rate_estimate(const TrajectoryRecord& traj, const RateInputs& inputs) {
    if (traj.rows.size() < 2)
        throw ConfigError("rate_estimate: trajectory too short (< 2 snapshots)");
    RateReport rep;
    rep.nu1 = inputs.nu1;
    rep.c_pw = inputs.c_pw;
    double mu_hat_min = 0.0, mu_hat_max = 0.0, flux_sq = 0.0;
    for (std::size_t k = 1; k < traj.rows.size(); ++k) {
        const auto& a = traj.rows[k - 1];
        const auto& b = traj.rows[k];
        const double dt = b.t - a.t;
        mu_hat_min += 0.5 * dt * (a.mu_min + b.mu_min);
        mu_hat_max += 0.5 * dt * (a.mu_max + b.mu_max);
        flux_sq += 0.5 * dt * (a.flux_l1 * a.flux_l1 + b.flux_l1 * b.flux_l1);
    }
    rep.mu_hat_min = mu_hat_min;
    rep.mu_hat_max = mu_hat_max;
    rep.flux_l1_sq_integral = flux_sq;

    const double e = std::exp(1.0);
    const double gv1sq = inputs.grad_v1_sup * inputs.grad_v1_sup;
    const double gv2sq = inputs.grad_v2_sup * inputs.grad_v2_sup;
    const double z2sq = inputs.z2_sup * inputs.z2_sup;
    const double base = mu_hat_min / (inputs.c_pw * inputs.c_pw) - z2sq * flux_sq * mu_hat_max;
    rep.r_t = base - 2.0 * mu_hat_max * (gv1sq + (e + 1.0) * gv2sq);
    const double big = std::max(e + 1.0, std::exp(4.0 * inputs.v2_sup) + 1.0);
    rep.r_t_conservative = base - 2.0 * mu_hat_max * (gv1sq + big * gv2sq);
    rep.positive = rep.r_t_conservative > 0.0;
    return rep;
}

RateReport rate_estimate(const TrajectoryRecord& traj) {
    if (!traj.rate_inputs.valid)
        throw ConfigError("rate_estimate: trajectory carries no rate inputs (time-dependent V1?)");
    return rate_estimate(traj, traj.rate_inputs);
}

}  // namespace ddft
