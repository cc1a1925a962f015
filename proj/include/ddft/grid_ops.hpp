#pragma once

#include "ddft/geometry.hpp"
#include "ddft/kernels.hpp"

namespace ddft {

/// Midpoint quadrature: sum_i f_i h^d.
double integrate(const Grid& g, const Field& f);

/// L1, L2 and sup norms under the same quadrature.
double norm_l1(const Grid& g, const Field& f);
double norm_l2(const Grid& g, const Field& f);
double norm_linf(const Field& f);
double norm_l1(const Grid& g, const VectorField& f);
double norm_l2(const Grid& g, const VectorField& f);
double norm_linf(const VectorField& f);

/// Discrete divergence of a face flux field: net outflow per cell volume.
/// Rejects nonzero boundary faces (they would break mass conservation).
Field divergence(const Grid& g, const FaceFluxField& F);

/// Second-order gradient at cell centers: central in the interior, one-sided
/// second-order at boundary cells.
VectorField gradient_cells(const Grid& g, const Field& f);

/// Toeplitz tables of kernel samples at cell-center displacements. Offset
/// k = i - j runs over [-(N-1), N-1] per axis; index k + (N-1).
struct ScalarKernelTable {
    int n = 0;
    int dim = 1;
    std::vector<double> k;  // 2N-1 entries in 1D, (2N-1)^2 in 2D
    double at(int di, int dj = 0) const {
        const int m = 2 * n - 1;
        return dim == 1 ? k[di + n - 1] : k[(di + n - 1) + m * (dj + n - 1)];
    }
};

struct VectorKernelTable {
    int n = 0;
    int dim = 1;
    std::vector<Vec2> k;
    const Vec2& at(int di, int dj = 0) const {
        const int m = 2 * n - 1;
        return dim == 1 ? k[di + n - 1] : k[(di + n - 1) + m * (dj + n - 1)];
    }
};

struct TensorKernelTable {
    int n = 0;
    int dim = 1;
    std::vector<Mat2> k;
    const Mat2& at(int di, int dj = 0) const {
        const int m = 2 * n - 1;
        return dim == 1 ? k[di + n - 1] : k[(di + n - 1) + m * (dj + n - 1)];
    }
};

ScalarKernelTable tabulate_kernel(const Grid& g, const KernelSpec& spec);
VectorKernelTable tabulate_kernel_gradient(const Grid& g, const KernelSpec& spec);
TensorKernelTable tabulate_tensor(const Grid& g, const TensorKernelSpec& spec);

/// Dense quadrature convolution (K * f)(x_i) = sum_j K(x_i - x_j) f_j h^d.
/// The domain is bounded and non-periodic; no wrap-around.
Field convolve_scalar(const Grid& g, const KernelSpec& K, const Field& f);
Field convolve_scalar(const Grid& g, const ScalarKernelTable& K, const Field& f);

/// (grad K * f): d-vector per cell.
VectorField convolve_gradient(const Grid& g, const KernelSpec& K, const Field& f);
VectorField convolve_gradient(const Grid& g, const VectorKernelTable& K, const Field& f);

/// Tensor convolution (Z * v)(x_i) = sum_j Z(x_i - x_j) v_j h^d.
VectorField convolve_tensor(const Grid& g, const TensorKernelSpec& Z, const VectorField& v);
VectorField convolve_tensor(const Grid& g, const TensorKernelTable& Z, const VectorField& v);

}  // namespace ddft
