#include "ddft/free_energy.hpp"

#include <cmath>
#include <string>

namespace ddft {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void check_nonnegative(const Field& rho) {
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] < -1e-13)
            throw NumericalError("free energy: negative density at cell " + std::to_string(i) +
                                 " (" + std::to_string(rho[i]) + ")");
}

void check_positive(const Field& rho, const char* what) {
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (!(rho[i] > 0.0))
            throw NumericalError(std::string(what) + ": density must be strictly positive, cell " +
                                 std::to_string(i));
}

}  // namespace

EnergyBreakdown compute_F(const Grid& g, const Field& rho, const KernelSpec& V1,
                          const KernelSpec& V2, double t) {
    check_nonnegative(rho);
    const double vol = g.cell_volume();
    EnergyBreakdown e;
    for (int c = 0; c < g.num_cells(); ++c) e.entropy_term += xlogx(rho[c]) - rho[c];
    e.entropy_term *= vol;
    if (!V1.is_zero()) {
        double s = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) s += rho[c] * eval_potential(V1, g.center(c), t);
        e.external_term = s * vol;
    }
    if (!V2.is_zero()) {
        const Field conv = convolve_scalar(g, V2, rho);
        double s = 0.0;
        for (int c = 0; c < g.num_cells(); ++c) s += rho[c] * conv[c];
        e.interaction_term = 0.5 * s * vol;
    }
    e.total = e.entropy_term + e.external_term + e.interaction_term;
    return e;
}

Field functional_derivative(const Grid& g, const Field& rho, const KernelSpec& V1,
                            const KernelSpec& V2, double t) {
    check_positive(rho, "functional_derivative");
    Field out(g.num_cells());
    const Field conv = V2.is_zero() ? Field(g.num_cells()) : convolve_scalar(g, V2, rho);
    for (int c = 0; c < g.num_cells(); ++c)
        out[c] = std::log(rho[c]) + eval_potential(V1, g.center(c), t) + conv[c];
    return out;
}

namespace {

bool strictly_positive(const Field& rho) {
    for (double v : rho.v)
        if (!(v > 0.0)) return false;
    return true;
}

VectorField rhs_literal(const Grid& g, const Field& rho, const KernelSpec& V1, const Field& conv,
                        double t) {
    Field dF(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
        dF[c] = std::log(rho[c]) + eval_potential(V1, g.center(c), t) + conv[c];
    const VectorField grad = gradient_cells(g, dF);
    VectorField out(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) out[c] = grad[c] * -rho[c];
    return out;
}

VectorField rhs_product_rule(const Grid& g, const Field& rho, const KernelSpec& V1,
                             const VectorField& grad_conv, double t) {
    const VectorField grad_rho = gradient_cells(g, rho);
    VectorField out(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        const Vec2 drift = eval_gradient(V1, g.center(c), t) + grad_conv[c];
        out[c] = (grad_rho[c] + rho[c] * drift) * -1.0;
    }
    return out;
}

}  // namespace

VectorField flux_rhs(const Grid& g, const Field& rho, const KernelSpec& V1,
                     const ScalarKernelTable& V2table, const VectorKernelTable& gradV2, double t) {
    if (strictly_positive(rho))
        return rhs_literal(g, rho, V1, convolve_scalar(g, V2table, rho), t);
    return rhs_product_rule(g, rho, V1, convolve_gradient(g, gradV2, rho), t);
}

VectorField flux_rhs(const Grid& g, const Field& rho, const KernelSpec& V1, const KernelSpec& V2,
                     double t) {
    if (strictly_positive(rho)) {
        const Field conv = V2.is_zero() ? Field(g.num_cells()) : convolve_scalar(g, V2, rho);
        return rhs_literal(g, rho, V1, conv, t);
    }
    const VectorField grad_conv =
        V2.is_zero() ? VectorField(g.num_cells()) : convolve_gradient(g, V2, rho);
    return rhs_product_rule(g, rho, V1, grad_conv, t);
}

double dissipation(const Grid& g, const Field& rho, const VectorField& a, const KernelSpec& V1,
                   const KernelSpec& V2, double t) {
    check_positive(rho, "dissipation");
    const VectorField rhs = flux_rhs(g, rho, V1, V2, t);
    double s = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) s += (rhs[c] * (-1.0 / rho[c])).dot(a[c]);
    return s * g.cell_volume();
}

double flux_objective_J(const Grid& g, const Field& rho, const VectorField& v,
                        const ModelSpecs& model, double t) {
    check_positive(rho, "flux_objective_J");
    const TensorField D = assemble_D(g, model.Z1, rho);
    const VectorField Hv = apply_H(g, D, model.Z2, rho, v);
    const VectorField rhs = flux_rhs(g, rho, model.V1, model.V2, t);
    double s = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
        const Vec2 grad_dF = rhs[c] * (-1.0 / rho[c]);
        s += 0.5 * v[c].dot(Hv[c]) / rho[c] - v[c].dot(grad_dF);
    }
    return s * g.cell_volume();
}

}  // namespace ddft
