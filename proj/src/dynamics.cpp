#include "ddft/dynamics.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>

#include "ddft/diagnostics.hpp"
#include "ddft/equilibrium.hpp"

namespace ddft {

namespace {

/// B(x) = x/(e^x - 1), the exponential-fitting weight. B(x) > 0 for all x.
double bernoulli(double x) {
    if (std::abs(x) < 1e-5) return 1.0 - 0.5 * x + x * x / 12.0;
    return x / std::expm1(x);
}

/// Per-face upwinded coefficients: F = cp * rho_left - cm * rho_right,
/// cp = (D_f/h) B(dPsi), cm = (D_f/h) B(-dPsi). Boundary faces stay zero.
struct FaceCoeffs {
    std::vector<double> cpx, cmx;  // axis-0 faces, layout as FaceFluxField
    std::vector<double> cpy, cmy;  // axis-1 faces (2D)
};

struct DriftFields {
    Field v1;       // V1 at cell centers at the evaluation time (empty if V1 == 0)
    Field phi2;     // V2 * rho (empty if V2 == 0)
    VectorField wz; // Z2 * a   (empty if Z2 == 0)
};

FaceCoeffs build_face_coeffs(const Grid& g, const TensorField& D, const DriftFields& drift) {
    const int n = g.cells_per_axis();
    const double h = g.spacing();
    FaceCoeffs fc;

    auto dpsi_between = [&](int cl, int cr, int axis) {
        double d = 0.0;
        if (!drift.v1.v.empty()) d += drift.v1[cr] - drift.v1[cl];
        if (!drift.phi2.v.empty()) d += drift.phi2[cr] - drift.phi2[cl];
        if (!drift.wz.v.empty()) d += 0.5 * h * (drift.wz[cl].x[axis] + drift.wz[cr].x[axis]);
        return d;
    };

    if (g.dim() == 1) {
        fc.cpx.assign(n + 1, 0.0);
        fc.cmx.assign(n + 1, 0.0);
        for (int f = 1; f < n; ++f) {
            const int cl = f - 1, cr = f;
            const double df = 0.5 * (D[cl].m[0][0] + D[cr].m[0][0]);
            const double dpsi = dpsi_between(cl, cr, 0);
            fc.cpx[f] = df / h * bernoulli(dpsi);
            fc.cmx[f] = df / h * bernoulli(-dpsi);
        }
        return fc;
    }

    fc.cpx.assign((n + 1) * n, 0.0);
    fc.cmx.assign((n + 1) * n, 0.0);
    fc.cpy.assign(n * (n + 1), 0.0);
    fc.cmy.assign(n * (n + 1), 0.0);
    for (int iy = 0; iy < n; ++iy)
        for (int fx = 1; fx < n; ++fx) {
            const int cl = g.index(fx - 1, iy), cr = g.index(fx, iy);
            const double df = 0.5 * (D[cl].m[0][0] + D[cr].m[0][0]);
            const double dpsi = dpsi_between(cl, cr, 0);
            fc.cpx[fx + (n + 1) * iy] = df / h * bernoulli(dpsi);
            fc.cmx[fx + (n + 1) * iy] = df / h * bernoulli(-dpsi);
        }
    for (int fy = 1; fy < n; ++fy)
        for (int ix = 0; ix < n; ++ix) {
            const int cl = g.index(ix, fy - 1), cr = g.index(ix, fy);
            const double df = 0.5 * (D[cl].m[1][1] + D[cr].m[1][1]);
            const double dpsi = dpsi_between(cl, cr, 1);
            fc.cpy[ix + n * fy] = df / h * bernoulli(dpsi);
            fc.cmy[ix + n * fy] = df / h * bernoulli(-dpsi);
        }
    return fc;
}

/// Explicit time derivative -div(F) from the face coefficients.
Field explicit_derivative(const Grid& g, const FaceCoeffs& fc, const Field& rho) {
    const int n = g.cells_per_axis();
    const double inv_h = 1.0 / g.spacing();
    Field out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            const double f_right = i + 1 <= n - 1 ? fc.cpx[i + 1] * rho[i] - fc.cmx[i + 1] * rho[i + 1] : 0.0;
            const double f_left = i >= 1 ? fc.cpx[i] * rho[i - 1] - fc.cmx[i] * rho[i] : 0.0;
            out[i] = -(f_right - f_left) * inv_h;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int c = g.index(ix, iy);
            double div = 0.0;
            if (ix + 1 <= n - 1)
                div += fc.cpx[(ix + 1) + (n + 1) * iy] * rho[c] -
                       fc.cmx[(ix + 1) + (n + 1) * iy] * rho[g.index(ix + 1, iy)];
            if (ix >= 1)
                div -= fc.cpx[ix + (n + 1) * iy] * rho[g.index(ix - 1, iy)] -
                       fc.cmx[ix + (n + 1) * iy] * rho[c];
            if (iy + 1 <= n - 1)
                div += fc.cpy[ix + n * (iy + 1)] * rho[c] -
                       fc.cmy[ix + n * (iy + 1)] * rho[g.index(ix, iy + 1)];
            if (iy >= 1)
                div -= fc.cpy[ix + n * iy] * rho[g.index(ix, iy - 1)] -
                       fc.cmy[ix + n * iy] * rho[c];
            out[c] = -div * inv_h;
        }
    return out;
}

/// Backward-Euler solve of (I/dt + div F) rho_new = rho_old/dt with the face
/// coefficients frozen. Tridiagonal in 1D, sparse LU in 2D. The operator is an
/// M-matrix: column sums telescope to 1/dt (exact conservation) and the
/// inverse is nonnegative (unconditional positivity).
Field implicit_solve(const Grid& g, const FaceCoeffs& fc, const Field& rho_old, double dt) {
    const int n = g.cells_per_axis();
    const double inv_h = 1.0 / g.spacing();
    const double inv_dt = 1.0 / dt;

    if (g.dim() == 1) {
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
        for (int i = 0; i < n; ++i) {
            b[i] = inv_dt + (fc.cpx[i + 1] + fc.cmx[i]) * inv_h;
            if (i + 1 <= n - 1) c[i] = -fc.cmx[i + 1] * inv_h;
            if (i >= 1) a[i] = -fc.cpx[i] * inv_h;
            r[i] = rho_old[i] * inv_dt;
        }
        // Thomas algorithm
        for (int i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        Field out(n);
        out[n - 1] = r[n - 1] / b[n - 1];
        for (int i = n - 2; i >= 0; --i) out[i] = (r[i] - c[i] * out[i + 1]) / b[i];
        return out;
    }

    const int ncells = g.num_cells();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * ncells);
    Eigen::VectorXd rhs(ncells);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int c = g.index(ix, iy);
            double diag = inv_dt;
            diag += (fc.cpx[(ix + 1) + (n + 1) * iy] + fc.cmx[ix + (n + 1) * iy]) * inv_h;
            diag += (fc.cpy[ix + n * (iy + 1)] + fc.cmy[ix + n * iy]) * inv_h;
            trip.emplace_back(c, c, diag);
            if (ix + 1 <= n - 1)
                trip.emplace_back(c, g.index(ix + 1, iy), -fc.cmx[(ix + 1) + (n + 1) * iy] * inv_h);
            if (ix >= 1) trip.emplace_back(c, g.index(ix - 1, iy), -fc.cpx[ix + (n + 1) * iy] * inv_h);
            if (iy + 1 <= n - 1)
                trip.emplace_back(c, g.index(ix, iy + 1), -fc.cmy[ix + n * (iy + 1)] * inv_h);
            if (iy >= 1) trip.emplace_back(c, g.index(ix, iy - 1), -fc.cpy[ix + n * iy] * inv_h);
            rhs(c) = rho_old[c] * inv_dt;
        }
    Eigen::SparseMatrix<double> A(ncells, ncells);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw LinearSolveFailure("implicit step: sparse LU failed");
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw LinearSolveFailure("implicit step: sparse solve failed");
    Field out(ncells);
    for (int c = 0; c < ncells; ++c) out[c] = x(c);
    return out;
}

struct StageResult {
    Field rho;
    VectorField flux;
};

VectorField solve_stage_flux(const Grid& g, const ModelSpecs& model, const KernelWorkspace& ws,
                             const TensorField& D, const Field& rho, double t_eval,
                             const StepControl& ctrl) {
    const VectorField rhs = ws.v2_on ? flux_rhs(g, rho, model.V1, ws.V2, ws.gradV2, t_eval)
                                     : flux_rhs(g, rho, model.V1, KernelSpec::zero(), t_eval);
    if (!ws.z2_on) {
        VectorField a(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) a[c] = D[c].apply(rhs[c], g.dim());
        return a;
    }
    return solve_flux(g, D, ws.Z2, rho, rhs, ctrl.flux_tol, ctrl.flux_max_iter);
}

DriftFields build_drift_fields(const Grid& g, const ModelSpecs& model, const KernelWorkspace& ws,
                               const Field& rho, const VectorField& a, double t_eval) {
    DriftFields drift;
    if (!model.V1.is_zero()) {
        drift.v1 = Field(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c)
            drift.v1[c] = eval_potential(model.V1, g.center(c), t_eval);
    }
    if (ws.v2_on) drift.phi2 = convolve_scalar(g, ws.V2, rho);
    if (ws.z2_on) drift.wz = convolve_tensor(g, ws.Z2, a);
    return drift;
}

StageResult semi_implicit_sweeps(const Grid& g, const ModelSpecs& model, const KernelWorkspace& ws,
                                 const TensorField& D, const Field& rho_old, double t_new,
                                 double dt, const StepControl& ctrl) {
    Field rho_work = rho_old;
    VectorField a;
    Field rho_new;
    const int sweeps = std::max(1, ctrl.inner_picard_max);
    for (int m = 0; m < sweeps; ++m) {
        a = solve_stage_flux(g, model, ws, D, rho_work, t_new, ctrl);
        const DriftFields drift = build_drift_fields(g, model, ws, rho_work, a, t_new);
        const FaceCoeffs fc = build_face_coeffs(g, D, drift);
        rho_new = implicit_solve(g, fc, rho_old, dt);
        if (m + 1 >= sweeps) break;
        double diff = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) diff += std::abs(rho_new[c] - rho_work[c]);
        diff *= g.cell_volume();
        rho_work = rho_new;
        if (diff <= ctrl.inner_picard_tol) break;
    }
    return {std::move(rho_new), std::move(a)};
}

void check_step_result(const Grid& g, const Field& rho_old, const Field& rho_new) {
    double mass_old = 0.0, mass_new = 0.0, minv = rho_new[0];
    for (int c = 0; c < g.num_cells(); ++c) {
        mass_old += rho_old[c];
        mass_new += rho_new[c];
        minv = std::min(minv, rho_new[c]);
    }
    if (std::abs(mass_new - mass_old) * g.cell_volume() > 1e-11)
        throw LinearSolveFailure("step: discrete mass drifted by " +
                                 std::to_string((mass_new - mass_old) * g.cell_volume()));
    if (!(minv > 0.0))
        throw PositivityLoss("step: density lost positivity (min " + std::to_string(minv) + ")",
                             minv);
}

StageResult heun_step(const Grid& g, const ModelSpecs& model, const KernelWorkspace& ws,
                      const Field& rho_old, double t, double dt, const StepControl& ctrl) {
    auto derivative = [&](const Field& rho, double ts) {
        const TensorField D = assemble_D(g, ws, rho);
        const VectorField a = solve_stage_flux(g, model, ws, D, rho, ts, ctrl);
        const DriftFields drift = build_drift_fields(g, model, ws, rho, a, ts);
        return explicit_derivative(g, build_face_coeffs(g, D, drift), rho);
    };
    const Field k1 = derivative(rho_old, t);
    Field mid(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) mid[c] = rho_old[c] + dt * k1[c];
    const Field k2 = derivative(mid, t + dt);
    Field rho_new(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        rho_new[c] = rho_old[c] + 0.5 * dt * (k1[c] + k2[c]);
    // report the flux consistent with the accepted density
    const TensorField D = assemble_D(g, ws, rho_new);
    VectorField a = solve_stage_flux(g, model, ws, D, rho_new, t + dt, ctrl);
    return {std::move(rho_new), std::move(a)};
}

}  // namespace

KernelWorkspace KernelWorkspace::build(const Grid& g, const ModelSpecs& model) {
    KernelWorkspace ws;
    ws.v2_on = !model.V2.is_zero();
    ws.z1_on = !model.Z1.is_zero();
    ws.z2_on = !model.Z2.is_zero();
    if (ws.v2_on) {
        ws.V2 = tabulate_kernel(g, model.V2);
        ws.gradV2 = tabulate_kernel_gradient(g, model.V2);
    }
    if (ws.z1_on) ws.Z1 = tabulate_tensor(g, model.Z1);
    if (ws.z2_on) ws.Z2 = tabulate_tensor(g, model.Z2);
    return ws;
}

TensorField assemble_D(const Grid& g, const KernelWorkspace& ws, const Field& rho) {
    if (!ws.z1_on) {
        TensorField D(g.num_cells());
        for (auto& m : D.m) m = Mat2::identity(g.dim());
        return D;
    }
    // dense tensor convolution against the cached table, then per-cell inverse
    const int dim = g.dim();
    const double vol = g.cell_volume();
    TensorField D(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const int ix = g.ix_of(c), iy = g.iy_of(c);
        Mat2 M = Mat2::identity(dim);
        for (int j = 0; j < g.num_cells(); ++j) {
            const Mat2& z = ws.Z1.at(ix - g.ix_of(j), iy - g.iy_of(j));
            const double p = rho[j] * vol;
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) M.m[a][b] += z.m[a][b] * p;
        }
        if (std::abs(M.det(dim)) < 1e-14)
            throw SingularTensor("assemble_D: 1 + Z1*rho singular at cell " + std::to_string(c));
        D[c] = M.inverse(dim);
        if (D[c].sym_eigenvalues(dim)[0] <= 0.0)
            throw NotPositiveDefinite("assemble_D: diffusion tensor not positive definite at cell " +
                                      std::to_string(c));
    }
    return D;
}

SimState init_state(const Grid& g, Field rho0, std::vector<std::string>* warnings) {
    if (rho0.size() != static_cast<std::size_t>(g.num_cells()))
        throw ConfigError("init_state: density size does not match grid");
    for (std::size_t i = 0; i < rho0.size(); ++i) {
        if (rho0[i] < -1e-13)
            throw ConfigError("init_state: initial density has a negative cell");
        if (rho0[i] < 0.0) rho0[i] = 0.0;
    }
    const double mass = integrate(g, rho0);
    if (!(mass > 0.0)) throw ConfigError("init_state: initial density has zero mass");
    if (std::abs(mass - 1.0) > 1e-6)
        throw ConfigError("init_state: initial density mass " + std::to_string(mass) +
                          " is too far from 1 to silently normalize");
    if (std::abs(mass - 1.0) > 1e-12 && warnings)
        warnings->push_back("initial density renormalized (mass was " + std::to_string(mass) + ")");
    for (auto& x : rho0.v) x /= mass;

    SimState s;
    s.rho = std::move(rho0);
    s.flux = VectorField(g.num_cells());
    s.D_current = TensorField(g.num_cells());
    for (auto& m : s.D_current.m) m = Mat2::identity(g.dim());
    s.rho_prev = s.rho;
    return s;
}

VectorField assemble_drift(const Grid& g, const SimState& state, const ModelSpecs& model) {
    VectorField w(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        w[c] = eval_gradient(model.V1, g.center(c), state.time);
    if (!model.V2.is_zero()) {
        const VectorField conv = convolve_gradient(g, model.V2, state.rho);
        for (int c = 0; c < g.num_cells(); ++c) w[c] += conv[c];
    }
    if (!model.Z2.is_zero()) {
        const VectorField za = convolve_tensor(g, model.Z2, state.flux);
        for (int c = 0; c < g.num_cells(); ++c) w[c] += za[c];
    }
    return w;
}

void step(const Grid& g, SimState& state, StepControl& ctrl, const ModelSpecs& model,
          const KernelWorkspace& ws) {
    if (g.dim() == 2 && ws.z1_on &&
        model.Z1.structure == TensorKernelSpec::Structure::dyadic)
        throw ConfigError("step: 2D stepping supports isotropic Z1 only (five-point stencil)");

    const bool guard = ctrl.energy_guard && !model.V1.modulation.active();
    const double F_old =
        guard ? compute_F(g, state.rho, model.V1, model.V2, state.time).total : 0.0;
    const Field rho_entry = state.rho;
    const Field& rho_for_D =
        (ctrl.freeze == FreezePolicy::lagged && state.step_index > 0) ? state.rho_prev : state.rho;

    for (;;) {
        const double dt = ctrl.dt;
        StageResult res;
        TensorField D;
        if (ctrl.scheme == Scheme::explicit_heun) {
            res = heun_step(g, model, ws, rho_entry, state.time, dt, ctrl);
            D = assemble_D(g, ws, res.rho);
        } else {
            D = assemble_D(g, ws, rho_for_D);
            res = semi_implicit_sweeps(g, model, ws, D, rho_entry, state.time + dt, dt, ctrl);
        }
        check_step_result(g, rho_entry, res.rho);

        if (guard) {
            const double F_new =
                compute_F(g, res.rho, model.V1, model.V2, state.time + dt).total;
            if (F_new - F_old > ctrl.guard_tol * (1.0 + std::abs(F_old))) {
                ctrl.dt *= 0.5;
                if (ctrl.dt < 1e-12)
                    throw EnergyGuardExhausted("step: energy guard drove dt below 1e-12");
                continue;
            }
        }

        state.rho_prev = rho_entry;
        state.rho = std::move(res.rho);
        state.flux = std::move(res.flux);
        state.D_current = std::move(D);
        state.time += dt;
        state.step_index += 1;
        return;
    }
}

void step(const Grid& g, SimState& state, StepControl& ctrl, const ModelSpecs& model) {
    step(g, state, ctrl, model, KernelWorkspace::build(g, model));
}

TrajectoryRecord evolve(const Grid& g, const Field& rho0, StepControl ctrl,
                        const ModelSpecs& model, double t_end, int record_every,
                        const EvolveOptions& opts) {
    if (record_every < 1) throw ConfigError("evolve: record_every must be >= 1");
    if (!(t_end >= 0.0)) throw ConfigError("evolve: t_end must be nonnegative");
    const KernelWorkspace ws = KernelWorkspace::build(g, model);

    TrajectoryRecord rec;
    SimState state = init_state(g, rho0, &rec.warnings);

    rec.rate_inputs.z2_sup = sup_norm(model.Z2, g);
    if (opts.compute_rate && !model.V1.modulation.active()) {
        if (record_every > 10)
            rec.warnings.push_back(
                "record_every > 10: trapezoid accumulation of r_t may be too coarse");
        const auto [nu1, c_pw] = poincare_constant(g);
        rec.rate_inputs.valid = true;
        rec.rate_inputs.nu1 = nu1;
        rec.rate_inputs.c_pw = c_pw;
        rec.rate_inputs.grad_v1_sup = grad_sup_norm(model.V1, g, SupDomain::positions);
        rec.rate_inputs.grad_v2_sup = grad_sup_norm(model.V2, g, SupDomain::displacements);
        rec.rate_inputs.v2_sup = sup_norm(model.V2, g, SupDomain::displacements);
    }

    rec.append(g, state, model, ws, opts.equilibrium_ref, ctrl.flux_tol);
    if (opts.store_snapshots) rec.snapshots.emplace_back(state.time, state.rho);

    while (state.time < t_end - 0.5 * ctrl.dt) {
        double dt_before = ctrl.dt;
        step(g, state, ctrl, model, ws);
        while (dt_before > ctrl.dt * 1.5) {
            ++rec.guard_halvings;
            dt_before *= 0.5;
        }
        const bool last = !(state.time < t_end - 0.5 * ctrl.dt);
        if (state.step_index % record_every == 0 || last) {
            rec.append(g, state, model, ws, opts.equilibrium_ref, ctrl.flux_tol);
            if (opts.store_snapshots &&
                ((opts.snapshot_every > 0 && state.step_index % opts.snapshot_every == 0) || last))
                rec.snapshots.emplace_back(state.time, state.rho);
        }
    }
    rec.final_state = state;
    return rec;
}

}  // namespace ddft
