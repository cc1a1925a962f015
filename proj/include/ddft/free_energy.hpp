#pragma once

#include "ddft/grid_ops.hpp"
#include "ddft/nonlocal_ops.hpp"

namespace ddft {

/// Helmholtz free energy split into its three contributions,
/// F = int rho(log rho - 1) + int rho V1 + 1/2 int rho (V2 * rho).
struct EnergyBreakdown {
    double entropy_term = 0.0;
    double external_term = 0.0;
    double interaction_term = 0.0;
    double total = 0.0;
};

/// Quadrature of the free energy. rho log rho is continued by 0 at rho = 0;
/// negative densities beyond round-off (-1e-13) are an error.
EnergyBreakdown compute_F(const Grid& g, const Field& rho, const KernelSpec& V1,
                          const KernelSpec& V2, double t = 0.0);

/// dF/drho = log rho + V1 + V2 * rho. Requires rho > 0 everywhere.
Field functional_derivative(const Grid& g, const Field& rho, const KernelSpec& V1,
                            const KernelSpec& V2, double t = 0.0);

/// Right-hand side of the flux equation under the dissipative convention,
/// -rho grad(dF/drho). For strictly positive rho this is the literal form
/// rho * gradient_cells(log rho + V1 + V2*rho), which vanishes identically at
/// the discrete Gibbs fixed point (dF/drho is exactly constant there). At
/// states with vacuum cells it falls back to the product-rule form
/// -(grad rho + rho grad V1 + rho (grad V2 * rho)); the two agree to O(h^2).
VectorField flux_rhs(const Grid& g, const Field& rho, const KernelSpec& V1, const KernelSpec& V2,
                     double t = 0.0);
VectorField flux_rhs(const Grid& g, const Field& rho, const KernelSpec& V1,
                     const ScalarKernelTable& V2table, const VectorKernelTable& gradV2,
                     double t = 0.0);

/// Free-energy production int grad(dF/drho) . a dr. For the solved flux this
/// equals the negative weighted norm of the H-theorem and must be <= 0 up to
/// tolerance.
double dissipation(const Grid& g, const Field& rho, const VectorField& a, const KernelSpec& V1,
                   const KernelSpec& V2, double t = 0.0);

/// Quadratic flux functional J[v] = 1/2 int rho^-1 v.(H v) - int v.grad(dF/drho)
/// whose unique minimiser is the flux solving H a = +rho grad(dF/drho).
/// Diagnostic for the variational cross-check only.
double flux_objective_J(const Grid& g, const Field& rho, const VectorField& v,
                        const ModelSpecs& model, double t = 0.0);

}  // namespace ddft
