#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddft/geometry.hpp"

namespace ddft {

/// Optional smooth multiplicative time dependence, m(t) = 1 + amp*sin(omega t).
/// Only meaningful for the one-body potential V1.
struct TimeModulation {
    enum class Kind { none, sine };
    Kind kind = Kind::none;
    double amp = 0.0;
    double omega = 0.0;

    double value(double t) const {
        return kind == Kind::none ? 1.0 : 1.0 + amp * std::sin(omega * t);
    }
    bool active() const { return kind != Kind::none; }
};

/// Parameterized scalar potential / kernel.
///
/// All shipped families are bounded with two bounded derivatives on the box,
/// so the two-body members are admissible interaction kernels as-is. The
/// radial families (gaussian, soft_core, tabulated) are even in r.
struct KernelSpec {
    enum class Kind { zero, constant, harmonic, gaussian, soft_core, double_well, tabulated };

    Kind kind = Kind::zero;
    double value = 0.0;              // constant
    Vec2 center{};                   // harmonic, double_well
    double stiffness = 0.0;          // harmonic
    double amplitude = 0.0;          // gaussian, soft_core
    double width = 1.0;              // gaussian, soft_core
    double quartic = 0.0;            // double_well a
    double quadratic = 0.0;          // double_well b
    std::vector<double> samples;     // tabulated, uniform radii on [0, sample_rmax]
    double sample_rmax = 0.0;
    std::vector<double> spline_d2;   // tabulated second derivatives (precomputed)
    TimeModulation modulation;

    static KernelSpec zero();
    static KernelSpec constant(double c);
    static KernelSpec harmonic(Vec2 center, double stiffness);
    static KernelSpec gaussian(double amplitude, double width);
    static KernelSpec soft_core(double amplitude, double width);
    static KernelSpec double_well(double a, double b, Vec2 center = {});
    static KernelSpec tabulated(std::vector<double> samples, double rmax);

    bool is_zero() const { return kind == Kind::zero; }
};

/// V(x, t). Time-independent specs ignore t.
double eval_potential(const KernelSpec& spec, const Vec2& x, double t = 0.0);

/// Analytic gradient of eval_potential; matches central differences to O(delta^2).
Vec2 eval_gradient(const KernelSpec& spec, const Vec2& x, double t = 0.0);

/// True when V(r) = V(-r) holds identically (required of two-body kernels).
bool is_even_kernel(const KernelSpec& spec);

/// Symmetric d x d tensor kernel: isotropic profile*I, or a regularized dyadic
/// profile*(c1 I + c2 (r ox r)/(|r|^2 + eps_reg^2)).
struct TensorKernelSpec {
    enum class Structure { isotropic, dyadic };

    Structure structure = Structure::isotropic;
    KernelSpec profile = KernelSpec::zero();
    double c1 = 1.0;
    double c2 = 0.0;
    double eps_reg = 0.0;  // required > 0 for dyadic

    static TensorKernelSpec zero();
    static TensorKernelSpec isotropic(KernelSpec profile);
    static TensorKernelSpec dyadic(KernelSpec profile, double c1, double c2, double eps_reg);

    bool is_zero() const { return profile.is_zero(); }
};

Mat2 eval_tensor(const TensorKernelSpec& spec, const Vec2& r, int dim);

/// Domain over which a sup-norm is taken: cell positions in [0,L]^d, or
/// displacements in [-L,L]^d (the two-body case, Omega - Omega).
enum class SupDomain { positions, displacements };

/// Sup of |V| over the requested domain. Analytic where cheap, otherwise a
/// max over a 10x refined sample grid.
double sup_norm(const KernelSpec& spec, const Grid& g, SupDomain domain);

/// Sup of |grad V| over the requested domain (same sampling policy).
double grad_sup_norm(const KernelSpec& spec, const Grid& g, SupDomain domain);

/// Sup of the spectral norm of Z over displacements; for the dyadic form the
/// bound sup|profile| * max(1, |c1|+|c2|) is used.
double sup_norm(const TensorKernelSpec& spec, const Grid& g);

/// The model of one run: one-body potential, two-body potential, and the two
/// hydrodynamic interaction tensors.
struct ModelSpecs {
    KernelSpec V1 = KernelSpec::zero();
    KernelSpec V2 = KernelSpec::zero();
    TensorKernelSpec Z1 = TensorKernelSpec::zero();
    TensorKernelSpec Z2 = TensorKernelSpec::zero();
};

/// Config-file syntax: "kind:key=value,key=value[|mod=sine,amp=..,omega=..]",
/// e.g. "harmonic:center=0.5,stiffness=4" or "zero".
KernelSpec parse_kernel_spec(const std::string& text);
std::string to_string(const KernelSpec& spec);

/// Tensor syntax: "zero", "isotropic(<scalar spec>)",
/// "dyadic(<scalar spec>;c1=..,c2=..,eps_reg=..)".
TensorKernelSpec parse_tensor_spec(const std::string& text);
std::string to_string(const TensorKernelSpec& spec);

}  // namespace ddft
