#include <doctest.h>

#include <cmath>

#include "ddft/equilibrium.hpp"
#include "ddft/particles.hpp"

using namespace ddft;

TEST_SUITE_BEGIN("particles");

TEST_CASE("histogram: point mass, normalization, domain check") {
    const Grid g = build_grid(1.0, 8, 1);
    std::vector<Vec2> samples(50, Vec2{{0.3, 0.0}});  // all in cell 2
    const Field h = histogram(samples, g);
    CHECK(h[2] == doctest::Approx(8.0));  // 1/h^d
    for (int c = 0; c < 8; ++c)
        if (c != 2) CHECK(h[c] == 0.0);
    CHECK(integrate(g, h) == doctest::Approx(1.0).epsilon(1e-15));

    samples.push_back(Vec2{{1.5, 0.0}});
    CHECK_THROWS_AS(histogram(samples, g), ConfigError);
}

TEST_CASE("histogram: uniform samples approach the flat density") {
    const Grid g = build_grid(1.0, 16, 1);
    std::vector<Vec2> samples;
    // deterministic low-discrepancy fill
    for (int i = 0; i < 160000; ++i)
        samples.push_back(Vec2{{std::fmod(0.5 + i * 0.6180339887498949, 1.0), 0.0}});
    const Field h = histogram(samples, g);
    for (int c = 0; c < 16; ++c) CHECK(h[c] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("simulate is deterministic for a fixed seed") {
    const Grid g = build_grid(1.0, 16, 1);
    const KernelSpec V1 = KernelSpec::harmonic({{0.5, 0.0}}, 4.0);
    const auto a = simulate(g, 200, 1e-3, 50, V1, KernelSpec::zero(), 99, 10);
    const auto b = simulate(g, 200, 1e-3, 50, V1, KernelSpec::zero(), 99, 10);
    REQUIRE(a.size() == b.size());
    for (std::size_t s = 0; s < a.size(); ++s)
        for (int p = 0; p < a[s].n(); ++p)
            CHECK(a[s].positions[p].x[0] == b[s].positions[p].x[0]);
    // and a different seed decorrelates
    const auto c = simulate(g, 200, 1e-3, 50, V1, KernelSpec::zero(), 100, 10);
    double diff = 0.0;
    for (int p = 0; p < c[1].n(); ++p)
        diff += std::abs(a[1].positions[p].x[0] - c[1].positions[p].x[0]);
    CHECK(diff > 0.0);
}

TEST_CASE("simulate validates its preconditions") {
    const Grid g = build_grid(1.0, 16, 1);
    CHECK_THROWS_AS(simulate(g, 50, 1e-3, 10, KernelSpec::zero(), KernelSpec::zero(), 1, 1),
                    ConfigError);
    // dt * ||V''|| >= 0.5 rejected
    CHECK_THROWS_AS(
        simulate(g, 200, 1e-1, 10, KernelSpec::harmonic({{0.5, 0.0}}, 100.0), KernelSpec::zero(), 1, 1),
        ConfigError);
}

TEST_CASE("reflecting walls keep every particle inside the box") {
    const Grid g = build_grid(1.0, 16, 1);
    const auto snaps =
        simulate(g, 300, 5e-4, 200, KernelSpec::zero(), KernelSpec::zero(), 7, 50);
    for (const auto& snap : snaps)
        for (const auto& p : snap.positions) {
            CHECK(p.x[0] >= 0.0);
            CHECK(p.x[0] <= 1.0);
        }
}

TEST_CASE("free diffusion equilibrates to the uniform density") {
    const Grid g = build_grid(1.0, 16, 1);
    const int n_particles = 4000;
    const long steps = 40000;
    const double dt = 5e-4;
    const Field h = simulate_histogram(g, n_particles, dt, steps, KernelSpec::zero(),
                                       KernelSpec::zero(), 2024);
    CHECK(integrate(g, h) == doctest::Approx(1.0).epsilon(1e-12));
    // 3-sigma multinomial band, effective sample count from the slowest
    // relaxation time 1/nu1 ~ 0.1 (factor 2 conservative)
    const double span = 0.5 * steps * dt;
    const double n_eff = n_particles * span / 0.2;
    const double sigma = std::sqrt(16.0 / n_eff);  // per-cell density sd, rho = 1
    for (int c = 0; c < 16; ++c) CHECK(std::abs(h[c] - 1.0) <= 3.0 * sigma);
}

TEST_CASE("harmonic trap matches the Gibbs density") {
    const Grid g = build_grid(1.0, 64, 1);
    const KernelSpec V1 = KernelSpec::harmonic({{0.5, 0.0}}, 8.0);
    const Field h = simulate_histogram(g, 10000, 5e-4, 100000, V1, KernelSpec::zero(), 4242);

    Field gibbs(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) gibbs[c] = std::exp(-eval_potential(V1, g.center(c)));
    const double Z = integrate(g, gibbs);
    double l1 = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) l1 += std::abs(h[c] - gibbs[c] / Z);
    l1 *= g.cell_volume();
    CHECK(l1 <= 0.05);
}

TEST_SUITE_END();
