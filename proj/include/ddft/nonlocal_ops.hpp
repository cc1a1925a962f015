#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ddft/grid_ops.hpp"

namespace ddft {

/// Per-cell diffusion tensor D_phi = (I + Z1 * phi)^-1. Every cell matrix is
/// symmetric positive definite or the assembly reports failure.
TensorField assemble_D(const Grid& g, const TensorKernelSpec& Z1, const Field& phi);

/// Spatial (min, max) over all cells of the per-cell eigenvalues.
std::pair<double, double> eigen_bounds(const Grid& g, const TensorField& D);

/// Advection operator A[a] = Z2 * a.
VectorField apply_A(const Grid& g, const TensorKernelSpec& Z2, const VectorField& a);

/// H_phi v = D^-1 v + phi (Z2 * v), with per-cell solves for D^-1 v.
VectorField apply_H(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                    const Field& phi, const VectorField& v);
VectorField apply_H(const Grid& g, const TensorField& D, const TensorKernelTable& Z2,
                    const Field& phi, const VectorField& v);

/// Solve H a = rhs by the fixed-point iteration a <- D(rhs - rho Z2*a),
/// convergent whenever the contraction margin is positive; falls back to a
/// dense direct solve on stagnation (matrix dimension permitting).
/// The returned flux has relative residual ||H a - rhs||_2 <= tol ||rhs||_2.
VectorField solve_flux(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                       const Field& rho, const VectorField& rhs, double tol = 1e-12,
                       int max_iter = 400);
VectorField solve_flux(const Grid& g, const TensorField& D, const TensorKernelTable& Z2,
                       const Field& rho, const VectorField& rhs, double tol = 1e-12,
                       int max_iter = 400);

/// Dense matrix of the discrete H operator (stacking cell*dim + component).
Eigen::MatrixXd assemble_H_dense(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                                 const Field& rho);

/// Direct dense solve of H a = rhs; independent oracle for solve_flux.
VectorField solve_flux_dense(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                             const Field& rho, const VectorField& rhs);

/// Spectral diagnostics of the discrete H operator in the rho^{-1}-weighted
/// inner product, where it is self-adjoint.
struct SpectralReport {
    double mu_min = 1.0;
    double mu_max = 1.0;
    double z2_sup = 0.0;
    double contraction_margin = 1.0;   // 1 - mu_max * ||Z2||_inf
    double log_fredholm_det = 0.0;     // sum_k log(1-gamma_k) - sum log mu
    double symmetry_defect = 0.0;      // ||W M - M^T W||_inf / ||W M||_inf
    std::vector<double> eigenvalues_H;      // spectrum of H (ascending)
    std::vector<double> eigenvalues_gamma;  // spectrum of the Z_rho part

    // Internals enabling the eigenfunction expansion of the flux: the
    // orthonormal basis of the symmetrized operator and the cell weights.
    Eigen::MatrixXd basis;
    std::vector<double> weights;  // h^d / rho_i per flattened component
};

SpectralReport spectral_report(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                               const Field& rho);

/// Reconstruct the flux from the eigenpairs: a = sum_n gamma_n^{-1}
/// <u_n, rhs>_w u_n. Cross-check oracle for solve_flux, not a production path.
VectorField flux_by_eigen_expansion(const Grid& g, const SpectralReport& report, const Field& rho,
                                    const VectorField& rhs);

}  // namespace ddft
