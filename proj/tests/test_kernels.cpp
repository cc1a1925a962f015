#include <doctest.h>

#include <cmath>
#include <random>

#include "ddft/grid_ops.hpp"

using namespace ddft;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("potential values at reference points") {
    CHECK(eval_potential(KernelSpec::harmonic({{0.5, 0.0}}, 1.0), {{0.5, 0.0}}) ==
          doctest::Approx(0.0));
    CHECK(eval_potential(KernelSpec::gaussian(1.0, 1.0), {{0.0, 0.0}}) == doctest::Approx(1.0));
    CHECK(eval_potential(KernelSpec::double_well(1.0, 1.0), {{0.0, 0.0}}) == doctest::Approx(0.0));
    // a x^4 - b x^2 along an axis
    CHECK(eval_potential(KernelSpec::double_well(1.0, 1.0), {{2.0, 0.0}}) ==
          doctest::Approx(16.0 - 4.0));
    CHECK(eval_potential(KernelSpec::constant(3.0), {{0.7, 0.0}}) == doctest::Approx(3.0));
    CHECK(eval_potential(KernelSpec::zero(), {{0.7, 0.0}}) == doctest::Approx(0.0));
}

TEST_CASE("gradient values at reference points") {
    CHECK(eval_gradient(KernelSpec::harmonic({{0.5, 0.0}}, 1.0), {{0.75, 0.0}}).x[0] ==
          doctest::Approx(0.25));
    CHECK(eval_gradient(KernelSpec::constant(2.0), {{0.3, 0.0}}).x[0] == doctest::Approx(0.0));
}

TEST_CASE("analytic gradients match central differences on random points") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-0.9, 0.9);
    const double delta = 1e-4;
    std::vector<KernelSpec> specs = {
        KernelSpec::harmonic({{0.2, -0.1}}, 3.0),
        KernelSpec::gaussian(0.8, 0.3),
        KernelSpec::soft_core(0.6, 0.4),
        KernelSpec::double_well(1.5, 0.7, {{0.1, 0.0}}),
        KernelSpec::constant(2.0),
    };
    {
        // smooth tabulated radial profile over [0, 2]
        std::vector<double> samples;
        for (int i = 0; i <= 40; ++i) {
            const double r = 2.0 * i / 40.0;
            samples.push_back(std::exp(-r * r) * (1.0 + 0.5 * r * r));
        }
        specs.push_back(KernelSpec::tabulated(samples, 2.0));
    }
    KernelSpec modulated = KernelSpec::harmonic({{0.0, 0.0}}, 2.0);
    modulated.modulation = {TimeModulation::Kind::sine, 0.3, 2.0};
    specs.push_back(modulated);

    for (const auto& spec : specs) {
        for (int dim = 1; dim <= 2; ++dim) {
            for (int trial = 0; trial < 100; ++trial) {
                Vec2 x{{uni(rng), dim == 2 ? uni(rng) : 0.0}};
                const double t = 0.37;
                const Vec2 grad = eval_gradient(spec, x, t);
                for (int a = 0; a < dim; ++a) {
                    Vec2 xp = x, xm = x;
                    xp.x[a] += delta;
                    xm.x[a] -= delta;
                    const double fd =
                        (eval_potential(spec, xp, t) - eval_potential(spec, xm, t)) / (2 * delta);
                    CHECK(std::abs(grad.x[a] - fd) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("two-body families are even") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const std::vector<KernelSpec> even = {
        KernelSpec::gaussian(0.5, 0.2), KernelSpec::soft_core(0.4, 0.3),
        KernelSpec::double_well(1.0, 0.5), KernelSpec::constant(1.0)};
    for (const auto& spec : even) {
        CHECK(is_even_kernel(spec));
        for (int trial = 0; trial < 50; ++trial) {
            const Vec2 r{{uni(rng), uni(rng)}};
            const Vec2 minus_r{{-r.x[0], -r.x[1]}};
            CHECK(eval_potential(spec, r) == doctest::Approx(eval_potential(spec, minus_r)));
        }
    }
    CHECK_FALSE(is_even_kernel(KernelSpec::harmonic({{0.3, 0.0}}, 1.0)));
    CHECK(is_even_kernel(KernelSpec::harmonic({{0.0, 0.0}}, 1.0)));
}

TEST_CASE("tensor kernels: symmetry, evenness, dyadic structure") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const TensorKernelSpec iso = TensorKernelSpec::isotropic(KernelSpec::gaussian(0.3, 0.2));
    const TensorKernelSpec dyad =
        TensorKernelSpec::dyadic(KernelSpec::gaussian(0.5, 0.3), 1.0, 0.7, 0.04);

    CHECK(eval_tensor(iso, {{0.0, 0.0}}, 2).m[0][0] == doctest::Approx(0.3));
    CHECK(eval_tensor(iso, {{0.0, 0.0}}, 2).m[1][1] == doctest::Approx(0.3));
    CHECK(eval_tensor(iso, {{0.0, 0.0}}, 2).m[0][1] == doctest::Approx(0.0));

    // dyad vanishes at the origin under regularization: profile(0) * c1 * I
    const Mat2 at0 = eval_tensor(dyad, {{0.0, 0.0}}, 2);
    CHECK(at0.m[0][0] == doctest::Approx(0.5));
    CHECK(at0.m[0][1] == doctest::Approx(0.0));

    for (int trial = 0; trial < 50; ++trial) {
        const Vec2 r{{uni(rng), uni(rng)}};
        const Vec2 mr{{-r.x[0], -r.x[1]}};
        for (const auto& spec : {iso, dyad}) {
            const Mat2 Z = eval_tensor(spec, r, 2);
            const Mat2 Zm = eval_tensor(spec, mr, 2);
            CHECK(Z.m[0][1] == Z.m[1][0]);  // exact transpose symmetry
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) CHECK(Z.m[a][b] == doctest::Approx(Zm.m[a][b]));
        }
    }
    CHECK_THROWS_AS(TensorKernelSpec::dyadic(KernelSpec::gaussian(1.0, 1.0), 1.0, 1.0, 0.0),
                    ConfigError);
}

TEST_CASE("sup_norm: analytic cases and scan upper-bounds samples") {
    const Grid g = build_grid(1.0, 32, 1);
    CHECK(sup_norm(KernelSpec::zero(), g, SupDomain::displacements) == 0.0);
    CHECK(sup_norm(KernelSpec::gaussian(0.3, 0.2), g, SupDomain::displacements) ==
          doctest::Approx(0.3));
    CHECK(sup_norm(TensorKernelSpec::isotropic(KernelSpec::gaussian(0.3, 0.2)), g) ==
          doctest::Approx(0.3));
    // dyadic bound: sup|profile| * max(1, |c1| + |c2|)
    CHECK(sup_norm(TensorKernelSpec::dyadic(KernelSpec::gaussian(0.3, 0.2), 1.0, 0.5, 0.02), g) ==
          doctest::Approx(0.45));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const std::vector<KernelSpec> specs = {KernelSpec::harmonic({{0.5, 0.0}}, 2.0),
                                           KernelSpec::double_well(1.0, 0.8),
                                           KernelSpec::soft_core(0.9, 0.2)};
    for (const auto& spec : specs) {
        const double sup = sup_norm(spec, g, SupDomain::displacements);
        const double gsup = grad_sup_norm(spec, g, SupDomain::displacements);
        for (int trial = 0; trial < 200; ++trial) {
            const Vec2 r{{uni(rng), 0.0}};
            CHECK(std::abs(eval_potential(spec, r)) <= sup * (1.0 + 1e-9) + 1e-12);
            CHECK(eval_gradient(spec, r).norm() <= gsup * (1.0 + 1e-6) + 1e-9);
        }
    }
}

TEST_CASE("tabulated sup_norm cross-checked by dense scan") {
    const Grid g = build_grid(1.0, 16, 1);
    std::vector<double> samples;
    for (int i = 0; i <= 32; ++i) {
        const double r = 2.0 * i / 32.0;
        samples.push_back(std::sin(3.0 * r) * std::exp(-r));
    }
    const KernelSpec spec = KernelSpec::tabulated(samples, 2.0);
    const double sup = sup_norm(spec, g, SupDomain::displacements);
    double brute = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double r = 1.0 * i / 100000.0;  // displacements reach |r| <= L
        brute = std::max(brute, std::abs(eval_potential(spec, {{r, 0.0}})));
    }
    CHECK(sup >= brute * (1.0 - 1e-6));
    CHECK(sup <= brute * (1.0 + 5e-2) + 1e-12);
}

TEST_CASE("tabulated kernel rejects queries outside the sample range") {
    std::vector<double> samples = {1.0, 0.8, 0.5, 0.2, 0.1};
    const KernelSpec spec = KernelSpec::tabulated(samples, 0.5);
    CHECK_THROWS_AS(eval_potential(spec, {{0.7, 0.0}}), ConfigError);
}

TEST_CASE("time modulation scales potential and gradient together") {
    KernelSpec spec = KernelSpec::harmonic({{0.0, 0.0}}, 2.0);
    spec.modulation = {TimeModulation::Kind::sine, 0.5, 3.0};
    const double m = 1.0 + 0.5 * std::sin(3.0 * 1.2);
    CHECK(eval_potential(spec, {{0.4, 0.0}}, 1.2) == doctest::Approx(m * 0.16));
    CHECK(eval_gradient(spec, {{0.4, 0.0}}, 1.2).x[0] == doctest::Approx(m * 0.8));
}

TEST_CASE("kernel spec strings round-trip") {
    const std::vector<std::string> texts = {
        "zero",
        "constant:value=2.5",
        "harmonic:center=0.5,stiffness=4",
        "gaussian:amplitude=0.2,width=0.1",
        "soft_core:amplitude=0.6,width=0.4",
        "double_well:a=1,b=0.5",
        "harmonic:center=0.5,stiffness=4|mod=sine,amp=0.1,omega=3",
    };
    for (const auto& text : texts) {
        const KernelSpec a = parse_kernel_spec(text);
        const KernelSpec b = parse_kernel_spec(to_string(a));
        for (double x : {0.1, 0.4, 0.9})
            CHECK(eval_potential(a, {{x, 0.0}}, 0.3) ==
                  doctest::Approx(eval_potential(b, {{x, 0.0}}, 0.3)));
    }
    const TensorKernelSpec t1 = parse_tensor_spec("isotropic(gaussian:amplitude=0.3,width=0.2)");
    CHECK(eval_tensor(t1, {{0.0, 0.0}}, 1).m[0][0] == doctest::Approx(0.3));
    const TensorKernelSpec t2 =
        parse_tensor_spec("dyadic(gaussian:amplitude=0.3,width=0.2;c1=1,c2=0.5,eps_reg=0.05)");
    const TensorKernelSpec t3 = parse_tensor_spec(to_string(t2));
    CHECK(eval_tensor(t2, {{0.1, 0.2}}, 2).m[0][1] ==
          doctest::Approx(eval_tensor(t3, {{0.1, 0.2}}, 2).m[0][1]));

    CHECK_THROWS_AS(parse_kernel_spec("wiggle:a=1"), ConfigError);
    CHECK_THROWS_AS(parse_kernel_spec("gaussian:amplitude=0.2"), ConfigError);  // missing width
    CHECK_THROWS_AS(parse_tensor_spec("dyadic(gaussian:amplitude=1,width=1)"), ConfigError);
}

TEST_SUITE_END();
