#include "ddft/particles.hpp"

#include <cmath>
#include <random>

namespace ddft {

namespace {

/// Fold a coordinate back into [0, L] by reflection.
double reflect(double x, double L) {
    while (x < 0.0 || x > L) {
        if (x < 0.0) x = -x;
        if (x > L) x = 2.0 * L - x;
    }
    return x;
}

/// Crude sup bound on the largest second derivative of V along the axes,
/// central differences on a refined scan.
double hessian_sup_estimate(const Grid& g, const KernelSpec& V, SupDomain domain) {
    if (V.is_zero() || V.kind == KernelSpec::Kind::constant) return 0.0;
    const double lo = domain == SupDomain::positions ? 0.0 : -g.length();
    const double hi = g.length();
    const int npts = 10 * g.cells_per_axis();
    const double delta = (hi - lo) / npts * 0.5;
    double best = 0.0;
    for (int axis = 0; axis < g.dim(); ++axis)
        for (int i = 1; i < npts; ++i) {
            Vec2 x;
            x.x[axis] = lo + (hi - lo) * i / npts;
            Vec2 xp = x, xm = x;
            xp.x[axis] += delta;
            xm.x[axis] -= delta;
            const double d2 =
                (eval_gradient(V, xp, 0.0).x[axis] - eval_gradient(V, xm, 0.0).x[axis]) /
                (2.0 * delta);
            best = std::max(best, std::abs(d2));
        }
    return best;
}

struct MeanFieldForce {
    bool active = false;
    VectorKernelTable gradV2;
    VectorField force;  // (grad V2 * rho_hat) at cell centers

    void refresh(const Grid& g, const std::vector<Vec2>& pos) {
        if (!active) return;
        force = convolve_gradient(g, gradV2, histogram(pos, g));
    }

    /// Linear (cloud-in-cell) gather of the force at a particle position.
    Vec2 at(const Grid& g, const Vec2& p) const {
        if (!active) return {};
        const int n = g.cells_per_axis();
        const double h = g.spacing();
        auto cell_weight = [&](double x, int& i0, double& w1) {
            const double s = x / h - 0.5;
            i0 = static_cast<int>(std::floor(s));
            w1 = s - i0;
            if (i0 < 0) { i0 = 0; w1 = 0.0; }
            if (i0 > n - 2) { i0 = n - 2; w1 = 1.0; }
        };
        int ix;
        double wx;
        cell_weight(p.x[0], ix, wx);
        if (g.dim() == 1)
            return force[ix] * (1.0 - wx) + force[ix + 1] * wx;
        int iy;
        double wy;
        cell_weight(p.x[1], iy, wy);
        return force[g.index(ix, iy)] * ((1.0 - wx) * (1.0 - wy)) +
               force[g.index(ix + 1, iy)] * (wx * (1.0 - wy)) +
               force[g.index(ix, iy + 1)] * ((1.0 - wx) * wy) +
               force[g.index(ix + 1, iy + 1)] * (wx * wy);
    }
};

struct SimDriver {
    const Grid& g;
    double dt;
    std::mt19937_64 rng;
    std::normal_distribution<double> normal;
    const KernelSpec& V1;
    MeanFieldForce mf;

    SimDriver(const Grid& grid, int n_particles, double dt_, const KernelSpec& v1,
              const KernelSpec& v2, std::uint64_t seed)
        : g(grid), dt(dt_), rng(seed), normal(0.0, 1.0), V1(v1) {
        if (n_particles < 100) throw ConfigError("particle oracle: need at least 100 particles");
        if (!(dt > 0.0)) throw ConfigError("particle oracle: dt must be positive");
        const double hess =
            hessian_sup_estimate(g, v1, SupDomain::positions) +
            hessian_sup_estimate(g, v2, SupDomain::displacements);
        if (dt * hess >= 0.5)
            throw ConfigError("particle oracle: dt too large for the potential stiffness");
        if (!v2.is_zero()) {
            mf.active = true;
            mf.gradV2 = tabulate_kernel_gradient(g, v2);
        }
    }

    std::vector<Vec2> initial_positions(int n_particles) {
        std::uniform_real_distribution<double> uni(0.0, g.length());
        std::vector<Vec2> pos(n_particles);
        for (auto& p : pos) {
            p.x[0] = uni(rng);
            if (g.dim() == 2) p.x[1] = uni(rng);
        }
        return pos;
    }

    void advance(std::vector<Vec2>& pos) {
        mf.refresh(g, pos);
        const double noise = std::sqrt(2.0 * dt);
        for (auto& p : pos) {
            const Vec2 f = eval_gradient(V1, p, 0.0) + mf.at(g, p);
            for (int a = 0; a < g.dim(); ++a)
                p.x[a] = reflect(p.x[a] - f.x[a] * dt + noise * normal(rng), g.length());
        }
    }
};

}  // namespace

std::vector<ParticleEnsemble> simulate(const Grid& g, int n_particles, double dt, long steps,
                                       const KernelSpec& V1, const KernelSpec& V2,
                                       std::uint64_t seed, long thin) {
    if (steps < 1) throw ConfigError("particle oracle: need at least one step");
    if (thin < 1) thin = 1;
    SimDriver driver(g, n_particles, dt, V1, V2, seed);
    std::vector<Vec2> pos = driver.initial_positions(n_particles);
    std::vector<ParticleEnsemble> out;
    out.push_back({pos, seed, 0.0});
    for (long s = 1; s <= steps; ++s) {
        driver.advance(pos);
        if (s % thin == 0 || s == steps) out.push_back({pos, seed, s * dt});
    }
    return out;
}

Field simulate_histogram(const Grid& g, int n_particles, double dt, long steps,
                         const KernelSpec& V1, const KernelSpec& V2, std::uint64_t seed) {
    if (steps < 2) throw ConfigError("particle oracle: need at least two steps");
    SimDriver driver(g, n_particles, dt, V1, V2, seed);
    std::vector<Vec2> pos = driver.initial_positions(n_particles);
    Field acc(g.num_cells());
    long samples = 0;
    for (long s = 1; s <= steps; ++s) {
        driver.advance(pos);
        if (2 * s > steps) {  // average over the second half
            const Field h = histogram(pos, g);
            for (int c = 0; c < g.num_cells(); ++c) acc[c] += h[c];
            ++samples;
        }
    }
    for (auto& x : acc.v) x /= samples;
    return acc;
}

Field histogram(const std::vector<Vec2>& samples, const Grid& g) {
    const int n = g.cells_per_axis();
    Field out(g.num_cells());
    for (const Vec2& p : samples) {
        if (p.x[0] < 0.0 || p.x[0] > g.length() || (g.dim() == 2 && (p.x[1] < 0.0 || p.x[1] > g.length())))
            throw ConfigError("histogram: sample outside the domain");
        const int ix = std::min(static_cast<int>(p.x[0] / g.spacing()), n - 1);
        const int iy = g.dim() == 2 ? std::min(static_cast<int>(p.x[1] / g.spacing()), n - 1) : 0;
        out[g.index(ix, iy)] += 1.0;
    }
    const double norm = static_cast<double>(samples.size()) * g.cell_volume();
    for (auto& x : out.v) x /= norm;
    return out;
}

Field histogram(const ParticleEnsemble& ensemble, const Grid& g) {
    return histogram(ensemble.positions, g);
}

}  // namespace ddft
