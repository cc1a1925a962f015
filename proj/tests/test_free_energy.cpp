#include <doctest.h>

#include <cmath>
#include <random>

#include "ddft/free_energy.hpp"

using namespace ddft;

TEST_SUITE_BEGIN("free_energy");

TEST_CASE("uniform density reference values") {
    const Grid g = build_grid(1.0, 32, 1);
    const Field rho(32, 1.0);
    const EnergyBreakdown e0 = compute_F(g, rho, KernelSpec::zero(), KernelSpec::zero());
    CHECK(e0.total == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(e0.entropy_term == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(e0.external_term == 0.0);
    CHECK(e0.interaction_term == 0.0);

    const EnergyBreakdown e1 = compute_F(g, rho, KernelSpec::constant(0.7), KernelSpec::zero());
    CHECK(e1.total == doctest::Approx(-1.0 + 0.7).epsilon(1e-14));
    CHECK(e1.total == doctest::Approx(e1.entropy_term + e1.external_term + e1.interaction_term));
}

TEST_CASE("entropy term against a refined quadrature oracle") {
    // rho = exp(-8 (x-1/2)^2) / Z on [0,1]; grid quadrature at N = 4096 vs a
    // 10^6-point midpoint reference of the same integrand.
    auto unnormalized = [](double x) { return std::exp(-8.0 * (x - 0.5) * (x - 0.5)); };
    const long M = 1000000;
    double Z = 0.0;
    for (long i = 0; i < M; ++i) Z += unnormalized((i + 0.5) / M);
    Z /= M;
    double ref = 0.0;
    for (long i = 0; i < M; ++i) {
        const double r = unnormalized((i + 0.5) / M) / Z;
        ref += r * std::log(r) - r;
    }
    ref /= M;

    const Grid g = build_grid(1.0, 8192, 1);
    Field rho(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) rho[c] = unnormalized(g.center(c).x[0]) / Z;
    const EnergyBreakdown e = compute_F(g, rho, KernelSpec::zero(), KernelSpec::zero());
    CHECK(std::abs(e.entropy_term - ref) <= 1e-8);
}

TEST_CASE("rho log rho is continued by zero at vacuum cells") {
    const Grid g = build_grid(1.0, 8, 1);
    Field rho(8, 0.0);
    rho[3] = 8.0;  // integrates to 1
    const EnergyBreakdown e = compute_F(g, rho, KernelSpec::zero(), KernelSpec::zero());
    CHECK(std::isfinite(e.total));
    CHECK(e.entropy_term == doctest::Approx(std::log(8.0) - 1.0).epsilon(1e-14));

    Field bad(8, 1.0);
    bad[0] = -1e-3;
    CHECK_THROWS_AS(compute_F(g, bad, KernelSpec::zero(), KernelSpec::zero()), NumericalError);
}

TEST_CASE("functional derivative: reference cases") {
    const Grid g = build_grid(1.0, 64, 1);
    {
        const Field rho(64, 1.0);
        const Field dF = functional_derivative(g, rho, KernelSpec::zero(), KernelSpec::zero());
        for (double v : dF.v) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    }
    {
        // Gibbs density for V2 = 0 has spatially constant dF/drho = -log Z
        const KernelSpec V1 = KernelSpec::harmonic({{0.5, 0.0}}, 6.0);
        Field rho(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c)
            rho[c] = std::exp(-eval_potential(V1, g.center(c)));
        const double Z = integrate(g, rho);
        for (auto& v : rho.v) v /= Z;
        const Field dF = functional_derivative(g, rho, V1, KernelSpec::zero());
        for (double v : dF.v) CHECK(v == doctest::Approx(-std::log(Z)).epsilon(1e-12));
    }
    Field bad(g.num_cells(), 1.0);
    bad[5] = 0.0;
    CHECK_THROWS_AS(functional_derivative(g, bad, KernelSpec::zero(), KernelSpec::zero()),
                    NumericalError);
}

TEST_CASE("functional derivative is the gradient of F") {
    const Grid g = build_grid(1.0, 96, 1);
    const KernelSpec V1 = KernelSpec::harmonic({{0.4, 0.0}}, 3.0);
    const KernelSpec V2 = KernelSpec::gaussian(0.3, 0.15);
    Field rho(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const double x = g.center(c).x[0];
        rho[c] = 1.0 + 0.4 * std::cos(2.0 * M_PI * x);
    }
    const double mass = integrate(g, rho);
    for (auto& v : rho.v) v /= mass;

    const Field dF = functional_derivative(g, rho, V1, V2);
    const double F0 = compute_F(g, rho, V1, V2).total;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double eps = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        // smooth mean-zero direction: random cosine modes integrate to zero
        // exactly under the midpoint rule
        Field w(g.num_cells());
        for (int k = 1; k <= 8; ++k) {
            const double amp = 0.2 * uni(rng);
            for (int c = 0; c < g.num_cells(); ++c)
                w[c] += amp * std::cos(k * M_PI * g.center(c).x[0]);
        }
        Field pert(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) pert[c] = rho[c] + eps * w[c];
        const double fd = (compute_F(g, pert, V1, V2).total - F0) / eps;
        double directional = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) directional += dF[c] * w[c];
        directional *= g.cell_volume();
        CHECK(std::abs(fd - directional) <= 1e-3 * std::max(std::abs(directional), 1e-10));
    }
}

TEST_CASE("dissipation vanishes at equilibrium configurations") {
    const Grid g = build_grid(1.0, 32, 1);
    const Field rho(32, 1.0);
    CHECK(dissipation(g, rho, VectorField(32), KernelSpec::zero(), KernelSpec::zero()) == 0.0);

    // uniform rho with no potentials: grad dF/drho = 0, any flux dissipates nothing
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    VectorField a(32);
    for (auto& v : a.v) v.x[0] = uni(rng);
    CHECK(std::abs(dissipation(g, rho, a, KernelSpec::zero(), KernelSpec::zero())) <= 1e-13);
}

TEST_CASE("flux objective: zero field evaluates to zero") {
    const Grid g = build_grid(1.0, 24, 1);
    ModelSpecs m;
    m.V1 = KernelSpec::harmonic({{0.5, 0.0}}, 2.0);
    const Field rho(24, 1.0);
    CHECK(flux_objective_J(g, rho, VectorField(24), m) == 0.0);
}

TEST_CASE("flux objective: closed-form minimiser for the trivial operator") {
    // Z1 = Z2 = 0 and rho = 1: J[v] = 1/2 int |v|^2 - int v.grad(dF), minimised
    // by v = grad(dF/drho) = grad V1 exactly.
    const Grid g = build_grid(1.0, 48, 1);
    ModelSpecs m;
    m.V1 = KernelSpec::harmonic({{0.5, 0.0}}, 2.0);
    const Field rho(48, 1.0);

    const VectorField rhs_diss = flux_rhs(g, rho, m.V1, m.V2);
    VectorField rhs(48);
    for (int c = 0; c < 48; ++c) rhs[c] = rhs_diss[c] * -1.0;
    const TensorField D = assemble_D(g, m.Z1, rho);
    const VectorField a_star = solve_flux(g, D, m.Z2, rho, rhs);
    for (int c = 0; c < 48; ++c)
        CHECK(a_star[c].x[0] ==
              doctest::Approx(eval_gradient(m.V1, g.center(c)).x[0]).epsilon(1e-12));

    const double J_star = flux_objective_J(g, rho, a_star, m);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        VectorField v(48);
        for (auto& w : v.v) w.x[0] = uni(rng);
        VectorField pert(48);
        for (int c = 0; c < 48; ++c) pert[c] = a_star[c] + v[c] * 1e-3;
        CHECK(flux_objective_J(g, rho, pert, m) > J_star);
    }
}

TEST_SUITE_END();
