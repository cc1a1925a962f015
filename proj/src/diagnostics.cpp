#include "ddft/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace ddft {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

TrajectoryRow compute_row(const Grid& g, const SimState& state, const ModelSpecs& model,
                          const KernelWorkspace& ws, const Field* equilibrium_ref, double z2_sup,
                          double flux_tol) {
    TrajectoryRow row;
    row.t = state.time;
    row.mass = integrate(g, state.rho);
    row.min_rho = state.rho[0];
    row.max_rho = state.rho[0];
    for (double x : state.rho.v) {
        row.min_rho = std::min(row.min_rho, x);
        row.max_rho = std::max(row.max_rho, x);
    }
    row.harnack_ratio = row.min_rho > 0.0 ? row.max_rho / row.min_rho
                                          : std::numeric_limits<double>::infinity();

    const EnergyBreakdown F = compute_F(g, state.rho, model.V1, model.V2, state.time);
    row.F_total = F.total;
    row.F_entropy = F.entropy_term;
    row.F_external = F.external_term;
    row.F_interaction = F.interaction_term;

    const TensorField D = assemble_D(g, ws, state.rho);
    const auto [mu_lo, mu_hi] = eigen_bounds(g, D);
    row.mu_min = mu_lo;
    row.mu_max = mu_hi;
    row.contraction_margin = 1.0 - mu_hi * z2_sup;

    // Flux re-solved from the current density so every row satisfies the flux
    // equation at solver tolerance regardless of recording cadence.
    const VectorField rhs = ws.v2_on
                                ? flux_rhs(g, state.rho, model.V1, ws.V2, ws.gradV2, state.time)
                                : flux_rhs(g, state.rho, model.V1, KernelSpec::zero(), state.time);
    VectorField a(g.num_cells());
    if (ws.z2_on) {
        a = solve_flux(g, D, ws.Z2, state.rho, rhs, flux_tol, 400);
    } else {
        for (int c = 0; c < g.num_cells(); ++c) a[c] = D[c].apply(rhs[c], g.dim());
    }
    row.flux_l1 = norm_l1(g, a);

    if (row.min_rho > 0.0) {
        double s = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) s += (rhs[c] * (-1.0 / state.rho[c])).dot(a[c]);
        row.dissipation = s * g.cell_volume();
    } else {
        row.dissipation = 0.0;  // grad(dF/drho) undefined at vacuum cells (t = 0 only)
    }

    if (equilibrium_ref) {
        Field diff(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) diff[c] = state.rho[c] - (*equilibrium_ref)[c];
        row.l2_dist = norm_l2(g, diff);
    } else {
        row.l2_dist = kNaN;
    }
    row.r_t_running = kNaN;  // filled by TrajectoryRecord::append
    return row;
}

void TrajectoryRecord::append(const Grid& g, const SimState& state, const ModelSpecs& model,
                              const KernelWorkspace& ws, const Field* equilibrium_ref,
                              double flux_tol) {
    TrajectoryRow row =
        compute_row(g, state, model, ws, equilibrium_ref, rate_inputs.z2_sup, flux_tol);
    if (!rows.empty()) {
        const TrajectoryRow& prev = rows.back();
        const double dt = row.t - prev.t;
        mu_hat_min_ += 0.5 * dt * (prev.mu_min + row.mu_min);
        mu_hat_max_ += 0.5 * dt * (prev.mu_max + row.mu_max);
        flux_sq_int_ += 0.5 * dt * (prev.flux_l1 * prev.flux_l1 + row.flux_l1 * row.flux_l1);
    }
    if (rate_inputs.valid) {
        const double e = std::exp(1.0);
        const double big = std::max(e + 1.0, std::exp(4.0 * rate_inputs.v2_sup) + 1.0);
        const double gv1sq = rate_inputs.grad_v1_sup * rate_inputs.grad_v1_sup;
        const double gv2sq = rate_inputs.grad_v2_sup * rate_inputs.grad_v2_sup;
        row.r_t_running = mu_hat_min_ / (rate_inputs.c_pw * rate_inputs.c_pw) -
                          2.0 * mu_hat_max_ * (gv1sq + big * gv2sq) -
                          mu_hat_max_ * rate_inputs.z2_sup * rate_inputs.z2_sup * flux_sq_int_;
    }
    rows.push_back(std::move(row));
}

bool check_envelope(const TrajectoryRecord& traj, const RateReport& rate,
                    std::vector<int>* violations, std::string* notice) {
    if (!rate.positive) {
        if (notice) *notice = "rate hypothesis fails (r_t <= 0); envelope check skipped";
        return true;
    }
    if (traj.rows.empty() || std::isnan(traj.rows.front().l2_dist)) {
        if (notice) *notice = "no equilibrium reference recorded; envelope check skipped";
        return true;
    }
    const double d0sq = traj.rows.front().l2_dist * traj.rows.front().l2_dist;
    if (d0sq == 0.0) return true;
    bool ok = true;
    for (std::size_t k = 1; k < traj.rows.size(); ++k) {
        const TrajectoryRow& row = traj.rows[k];
        if (std::isnan(row.l2_dist) || std::isnan(row.r_t_running)) continue;
        const double bound = d0sq * std::exp(-row.r_t_running) * 1.05;  // 5% slack
        if (row.l2_dist * row.l2_dist > bound) {
            ok = false;
            if (violations) violations->push_back(static_cast<int>(k));
        }
    }
    return ok;
}

void write_diagnostics_csv(std::ostream& os, const TrajectoryRecord& traj) {
    os << "t,mass,min_rho,max_rho,F_total,F_entropy,F_external,F_interaction,dissipation,"
          "l2_dist_to_equilibrium,flux_l1_norm,mu_min,mu_max,contraction_margin,r_t_running,"
          "harnack_ratio\r\n";
    for (const TrajectoryRow& r : traj.rows) {
        os << fmt17(r.t) << ',' << fmt17(r.mass) << ',' << fmt17(r.min_rho) << ','
           << fmt17(r.max_rho) << ',' << fmt17(r.F_total) << ',' << fmt17(r.F_entropy) << ','
           << fmt17(r.F_external) << ',' << fmt17(r.F_interaction) << ',' << fmt17(r.dissipation)
           << ',' << fmt17(r.l2_dist) << ',' << fmt17(r.flux_l1) << ',' << fmt17(r.mu_min) << ','
           << fmt17(r.mu_max) << ',' << fmt17(r.contraction_margin) << ','
           << fmt17(r.r_t_running) << ',' << fmt17(r.harnack_ratio) << "\r\n";
    }
}

void write_snapshot_csv(std::ostream& os, const Grid& g, const Field& rho,
                        const VectorField* flux) {
    os << "index,x";
    if (g.dim() == 2) os << ",y";
    os << ",rho";
    if (flux) {
        os << ",flux_x";
        if (g.dim() == 2) os << ",flux_y";
    }
    os << "\r\n";
    for (int c = 0; c < g.num_cells(); ++c) {
        const Vec2 p = g.center(c);
        os << c << ',' << fmt17(p.x[0]);
        if (g.dim() == 2) os << ',' << fmt17(p.x[1]);
        os << ',' << fmt17(rho[c]);
        if (flux) {
            os << ',' << fmt17((*flux)[c].x[0]);
            if (g.dim() == 2) os << ',' << fmt17((*flux)[c].x[1]);
        }
        os << "\r\n";
    }
}

}  // namespace ddft
