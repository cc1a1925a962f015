#pragma once

#include "ddft/diagnostics.hpp"

namespace ddft {

struct EquilibriumResult {
    Field rho0;
    std::vector<double> residual_history;  // L1 fixed-point defects ||S rho_k - rho_k||_1
    int iterations = 0;                    // damped updates applied
    bool converged = false;
    bool contraction_flag = false;  // ||V2||_inf <= 1/4: proven-contraction regime
    double el_residual = 0.0;       // spatial stddev of dF/drho at the solution
    double chemical_potential = 0.0;  // spatial mean of dF/drho
    double final_omega = 1.0;
};

/// One application of the self-consistency map S rho = e^{-(V1 + V2*rho)} / Z.
/// The exponent is shifted by its minimum before exponentiation, and the
/// output is a probability density by construction.
Field picard_map(const Grid& g, const Field& rho, const KernelSpec& V1, const KernelSpec& V2);

/// Damped Picard iteration rho <- (1-omega) rho + omega S rho, halving omega
/// (floor 1/16) whenever the defect increases. Finishes with a pure map
/// application so the returned density is exactly of Gibbs form. A run that
/// exhausts max_iter returns converged = false with the history preserved.
EquilibriumResult picard_solve(const Grid& g, const KernelSpec& V1, const KernelSpec& V2,
                               const Field& rho_init, double omega, double tol, int max_iter);

/// Solves the flux equation at rho0 and returns ||a||_inf; at a converged
/// equilibrium this is zero up to solver tolerance (the equilibrium flux
/// vanishes and is independent of the HI tensors).
double stationary_flux_check(const Grid& g, const Field& rho0, const ModelSpecs& model);

/// Smallest nonzero eigenvalue nu1 of the discrete Neumann Laplacian (same
/// stencil as the diffusion operator) by inverse iteration on the mean-zero
/// subspace, and the Poincare-Wirtinger constant c_pw = nu1^{-1/2}.
std::pair<double, double> poincare_constant(const Grid& g);

/// Decay-rate estimate over a recorded trajectory: time-mean eigenvalue
/// integrals by trapezoid, the (e+1) main-text constant and the
/// (e^{4||V2||}+1) appendix constant; `positive` gates on the conservative
/// (larger-constant, smaller-rate) variant.
RateReport rate_estimate(const TrajectoryRecord& traj, const RateInputs& inputs);
RateReport rate_estimate(const TrajectoryRecord& traj);  // uses traj.rate_inputs

}  // namespace ddft
