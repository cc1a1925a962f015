#include <doctest.h>

#include <cmath>
#include <random>

#include "ddft/grid_ops.hpp"

using namespace ddft;

TEST_SUITE_BEGIN("grid");

TEST_CASE("build_grid basic geometry") {
    const Grid g = build_grid(1.0, 4, 1);
    CHECK(g.spacing() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.num_cells() == 4);
    CHECK(g.center(0).x[0] == doctest::Approx(0.125));
    CHECK(g.center(1).x[0] == doctest::Approx(0.375));
    CHECK(g.center(2).x[0] == doctest::Approx(0.625));
    CHECK(g.center(3).x[0] == doctest::Approx(0.875));

    const Grid g2 = build_grid(2.0, 8, 1);
    CHECK(g2.spacing() == doctest::Approx(0.25));
    CHECK(g2.num_cells() == 8);

    const Grid g3 = build_grid(1.0, 4, 2);
    CHECK(g3.num_cells() == 16);
    CHECK(g3.cell_volume() == doctest::Approx(1.0 / 16.0));
    // cell volumes sum to the box volume exactly
    CHECK(g3.num_cells() * g3.cell_volume() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("build_grid rejects bad arguments") {
    CHECK_THROWS_AS(build_grid(1.0, 4, 3), ConfigError);
    CHECK_THROWS_AS(build_grid(1.0, 3, 1), ConfigError);
    CHECK_THROWS_AS(build_grid(-1.0, 8, 1), ConfigError);
    CHECK_THROWS_AS(build_grid(0.0, 8, 1), ConfigError);
}

TEST_CASE("integrate constants and a Neumann mode") {
    {
        const Grid g = build_grid(1.0, 16, 1);
        Field f(g.num_cells(), 1.0);
        CHECK(integrate(g, f) == doctest::Approx(1.0).epsilon(1e-15));
    }
    {
        const Grid g = build_grid(2.0, 16, 1);
        Field f(g.num_cells(), 3.0);
        CHECK(integrate(g, f) == doctest::Approx(6.0).epsilon(1e-15));
    }
    {
        // midpoint rule integrates cos(pi x) to its zero mean by symmetry
        const Grid g = build_grid(1.0, 64, 1);
        Field f(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) f[c] = std::cos(M_PI * g.center(c).x[0]);
        CHECK(std::abs(integrate(g, f)) <= 1e-12);
    }
}

TEST_CASE("integrate rejects size mismatch") {
    const Grid g = build_grid(1.0, 8, 1);
    Field f(4, 1.0);
    CHECK_THROWS_AS(integrate(g, f), ConfigError);
}

TEST_CASE("divergence: hand-computed 1D case") {
    const Grid g = build_grid(1.0, 4, 1);
    FaceFluxField F = FaceFluxField::zeros(g);
    F.f0(1) = 1.0;
    F.f0(2) = 1.0;
    F.f0(3) = 1.0;
    const Field d = divergence(g, F);
    CHECK(d[0] == doctest::Approx(4.0));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(0.0));
    CHECK(d[3] == doctest::Approx(-4.0));
}

TEST_CASE("divergence of zero flux is zero") {
    const Grid g = build_grid(1.0, 8, 2);
    const Field d = divergence(g, FaceFluxField::zeros(g));
    for (double v : d.v) CHECK(v == 0.0);
}

TEST_CASE("discrete divergence theorem on random admissible fluxes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int dim = 1; dim <= 2; ++dim) {
        const Grid g = build_grid(1.5, 12, dim);
        for (int trial = 0; trial < 20; ++trial) {
            FaceFluxField F = FaceFluxField::zeros(g);
            double sup = 0.0;
            if (dim == 1) {
                for (int f = 1; f < 12; ++f) {
                    F.f0(f) = uni(rng);
                    sup = std::max(sup, std::abs(F.f0(f)));
                }
            } else {
                for (int iy = 0; iy < 12; ++iy)
                    for (int f = 1; f < 12; ++f) {
                        F.f0(f, iy) = uni(rng);
                        sup = std::max(sup, std::abs(F.f0(f, iy)));
                    }
                for (int fy = 1; fy < 12; ++fy)
                    for (int ix = 0; ix < 12; ++ix) {
                        F.f1(ix, fy) = uni(rng);
                        sup = std::max(sup, std::abs(F.f1(ix, fy)));
                    }
            }
            CHECK(std::abs(integrate(g, divergence(g, F))) <= 1e-13 * sup);
        }
    }
}

TEST_CASE("divergence rejects nonzero boundary faces") {
    const Grid g = build_grid(1.0, 4, 1);
    FaceFluxField F = FaceFluxField::zeros(g);
    F.f0(0) = 0.5;
    CHECK_THROWS_AS(divergence(g, F), ConfigError);
}

TEST_CASE("gradient_cells is exact for constants, linears and quadratics") {
    const Grid g = build_grid(1.0, 16, 1);
    Field c(g.num_cells(), 2.5), lin(g.num_cells()), quad(g.num_cells());
    for (int i = 0; i < g.num_cells(); ++i) {
        lin[i] = g.center(i).x[0];
        quad[i] = g.center(i).x[0] * g.center(i).x[0];
    }
    const VectorField gc = gradient_cells(g, c);
    const VectorField gl = gradient_cells(g, lin);
    const VectorField gq = gradient_cells(g, quad);
    for (int i = 0; i < g.num_cells(); ++i) {
        CHECK(gc[i].x[0] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(gl[i].x[0] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(gq[i].x[0] == doctest::Approx(2.0 * g.center(i).x[0]).epsilon(1e-12));
    }
}

TEST_CASE("gradient_cells 2D per-axis exactness") {
    const Grid g = build_grid(1.0, 8, 2);
    Field f(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const Vec2 p = g.center(c);
        f[c] = 3.0 * p.x[0] + p.x[1] * p.x[1];
    }
    const VectorField grad = gradient_cells(g, f);
    for (int c = 0; c < g.num_cells(); ++c) {
        CHECK(grad[c].x[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(grad[c].x[1] == doctest::Approx(2.0 * g.center(c).x[1]).epsilon(1e-12));
    }
}

TEST_CASE("convolve_scalar: constant kernel returns c * mass") {
    const Grid g = build_grid(1.0, 32, 1);
    Field f(g.num_cells());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0.0, 2.0);
    for (auto& v : f.v) v = uni(rng);
    const double mass = integrate(g, f);
    const Field out = convolve_scalar(g, KernelSpec::constant(0.7), f);
    for (double v : out.v) CHECK(v == doctest::Approx(0.7 * mass).epsilon(1e-13));
}

TEST_CASE("convolve_scalar of zero field is zero") {
    const Grid g = build_grid(1.0, 16, 1);
    const Field out = convolve_scalar(g, KernelSpec::gaussian(1.0, 0.1), Field(16));
    for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("narrow-Gaussian kernel approaches the identity away from walls") {
    // refinement study: N fixed, sigma decreasing with N*sigma >> h
    const Grid g = build_grid(1.0, 512, 1);
    Field f(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) f[c] = 1.0 + 0.3 * std::sin(4.0 * g.center(c).x[0]);
    std::vector<double> errs;
    for (double sigma : {0.04, 0.02, 0.01}) {
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
        const Field out = convolve_scalar(g, KernelSpec::gaussian(norm, sigma), f);
        double err = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) {
            const double x = g.center(c).x[0];
            if (x < 6.0 * 0.04 || x > 1.0 - 6.0 * 0.04) continue;  // mollifier truncation zone
            err = std::max(err, std::abs(out[c] - f[c]));
        }
        errs.push_back(err);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    // second-order mollification: halving sigma quarters the error
    CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.3));
    CHECK(errs[2] <= 5e-4);
}

TEST_CASE("convolution is self-adjoint for even kernels") {
    const Grid g = build_grid(1.0, 24, 1);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const KernelSpec K = KernelSpec::gaussian(0.8, 0.2);
    for (int trial = 0; trial < 10; ++trial) {
        Field f(g.num_cells()), h(g.num_cells());
        for (auto& v : f.v) v = uni(rng);
        for (auto& v : h.v) v = uni(rng);
        const Field Kf = convolve_scalar(g, K, f);
        const Field Kh = convolve_scalar(g, K, h);
        double lhs = 0.0, rhs = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) {
            lhs += h[c] * Kf[c];
            rhs += f[c] * Kh[c];
        }
        CHECK(lhs * g.cell_volume() == doctest::Approx(rhs * g.cell_volume()).epsilon(1e-13));
    }
}

TEST_CASE("convolve_scalar rejects uneven kernels") {
    const Grid g = build_grid(1.0, 8, 1);
    CHECK_THROWS_AS(convolve_scalar(g, KernelSpec::harmonic({{0.3, 0.0}}, 1.0), Field(8, 1.0)),
                    ConfigError);
}

TEST_CASE("convolve_tensor matches a direct double-loop quadrature") {
    const Grid g = build_grid(1.0, 48, 1);
    const TensorKernelSpec Z = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.5, 0.15));
    VectorField v(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const double x = g.center(c).x[0];  // hat profile
        v[c].x[0] = std::max(0.0, 1.0 - 4.0 * std::abs(x - 0.5));
    }
    const VectorField fast = convolve_tensor(g, Z, v);
    // independent summation order, direct kernel evaluation
    for (int i = 0; i < g.num_cells(); ++i) {
        double s = 0.0;
        for (int j = g.num_cells() - 1; j >= 0; --j) {
            const Vec2 r{{g.center(i).x[0] - g.center(j).x[0], 0.0}};
            s += eval_tensor(Z, r, 1).m[0][0] * v[j].x[0];
        }
        s *= g.cell_volume();
        CHECK(fast[i].x[0] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("convolve_tensor: constant isotropic kernel returns c * vector mass") {
    const Grid g = build_grid(1.0, 20, 2);
    const TensorKernelSpec Z = TensorKernelSpec::isotropic(KernelSpec::constant(0.4));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    VectorField v(g.num_cells());
    Vec2 mass;
    for (auto& w : v.v) {
        w.x[0] = uni(rng);
        w.x[1] = uni(rng);
    }
    for (const auto& w : v.v) mass += w * g.cell_volume();
    const VectorField out = convolve_tensor(g, Z, v);
    for (const auto& w : out.v) {
        CHECK(w.x[0] == doctest::Approx(0.4 * mass.x[0]).epsilon(1e-12));
        CHECK(w.x[1] == doctest::Approx(0.4 * mass.x[1]).epsilon(1e-12));
    }
}

TEST_CASE("tensor convolution with symmetric even kernel is a symmetric bilinear form") {
    const Grid g = build_grid(1.0, 10, 2);
    const TensorKernelSpec Z =
        TensorKernelSpec::dyadic(KernelSpec::gaussian(0.3, 0.25), 1.0, 0.5, 0.05);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
        VectorField u(g.num_cells()), v(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) {
            u[c] = {{uni(rng), uni(rng)}};
            v[c] = {{uni(rng), uni(rng)}};
        }
        const VectorField Zu = convolve_tensor(g, Z, u);
        const VectorField Zv = convolve_tensor(g, Z, v);
        double lhs = 0.0, rhs = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) {
            lhs += v[c].dot(Zu[c]);
            rhs += u[c].dot(Zv[c]);
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_SUITE_END();
