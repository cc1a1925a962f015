#include "ddft/grid_ops.hpp"

#include <cmath>
#include <string>

namespace ddft {

namespace {

void check_size(const Grid& g, std::size_t got, const char* what) {
    if (got != static_cast<std::size_t>(g.num_cells()))
        throw ConfigError(std::string(what) + ": field size " + std::to_string(got) +
                          " does not match grid cell count " + std::to_string(g.num_cells()));
}

}  // namespace

double integrate(const Grid& g, const Field& f) {
    check_size(g, f.size(), "integrate");
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * g.cell_volume();
}

double norm_l1(const Grid& g, const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += std::abs(x);
    return s * g.cell_volume();
}

double norm_l2(const Grid& g, const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * g.cell_volume());
}

double norm_linf(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s = std::max(s, std::abs(x));
    return s;
}

double norm_l1(const Grid& g, const VectorField& f) {
    double s = 0.0;
    for (const Vec2& x : f.v) s += x.norm();
    return s * g.cell_volume();
}

double norm_l2(const Grid& g, const VectorField& f) {
    double s = 0.0;
    for (const Vec2& x : f.v) s += x.dot(x);
    return std::sqrt(s * g.cell_volume());
}

double norm_linf(const VectorField& f) {
    double s = 0.0;
    for (const Vec2& x : f.v) s = std::max(s, x.norm());
    return s;
}

Field divergence(const Grid& g, const FaceFluxField& F) {
    const int n = g.cells_per_axis();
    if (F.n != n || F.dim != g.dim()) throw ConfigError("divergence: face field does not match grid");
    if (!F.boundary_closed())
        throw ConfigError("divergence: nonzero flux on a boundary face violates the no-flux condition");
    const double inv_h = 1.0 / g.spacing();
    Field out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) out[i] = (F.f0(i + 1) - F.f0(i)) * inv_h;
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            out[g.index(ix, iy)] =
                (F.f0(ix + 1, iy) - F.f0(ix, iy) + F.f1(ix, iy + 1) - F.f1(ix, iy)) * inv_h;
    return out;
}

namespace {

// One-axis derivative along a line of values with stride access.
// Central in the interior, one-sided second order at the two ends.
template <typename Get>
double line_derivative(Get&& val, int i, int n, double h) {
    if (i == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * val(n - 1) - 4.0 * val(n - 2) + val(n - 3)) / (2.0 * h);
    return (val(i + 1) - val(i - 1)) / (2.0 * h);
}

}  // namespace

VectorField gradient_cells(const Grid& g, const Field& f) {
    check_size(g, f.size(), "gradient_cells");
    const int n = g.cells_per_axis();
    const double h = g.spacing();
    VectorField out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i)
            out[i].x[0] = line_derivative([&](int k) { return f[k]; }, i, n, h);
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int c = g.index(ix, iy);
            out[c].x[0] = line_derivative([&](int k) { return f[g.index(k, iy)]; }, ix, n, h);
            out[c].x[1] = line_derivative([&](int k) { return f[g.index(ix, k)]; }, iy, n, h);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Convolutions. The grid is uniform, so K(x_i - x_j) only depends on the index
// offset; kernels are sampled once into Toeplitz tables and the sums are plain
// dense quadrature (bounded non-periodic domain, no wrap).

namespace {

Vec2 offset_displacement(const Grid& g, int di, int dj) {
    Vec2 r;
    r.x[0] = di * g.spacing();
    if (g.dim() == 2) r.x[1] = dj * g.spacing();
    return r;
}

}  // namespace

ScalarKernelTable tabulate_kernel(const Grid& g, const KernelSpec& spec) {
    if (!is_even_kernel(spec))
        throw ConfigError("convolution kernel must be even: V(r) = V(-r)");
    const int n = g.cells_per_axis();
    const int m = 2 * n - 1;
    ScalarKernelTable t;
    t.n = n;
    t.dim = g.dim();
    t.k.resize(g.dim() == 1 ? m : m * m);
    if (g.dim() == 1) {
        for (int di = -(n - 1); di <= n - 1; ++di)
            t.k[di + n - 1] = eval_potential(spec, offset_displacement(g, di, 0));
    } else {
        for (int dj = -(n - 1); dj <= n - 1; ++dj)
            for (int di = -(n - 1); di <= n - 1; ++di)
                t.k[(di + n - 1) + m * (dj + n - 1)] =
                    eval_potential(spec, offset_displacement(g, di, dj));
    }
    return t;
}

VectorKernelTable tabulate_kernel_gradient(const Grid& g, const KernelSpec& spec) {
    if (!is_even_kernel(spec))
        throw ConfigError("convolution kernel must be even: V(r) = V(-r)");
    const int n = g.cells_per_axis();
    const int m = 2 * n - 1;
    VectorKernelTable t;
    t.n = n;
    t.dim = g.dim();
    t.k.resize(g.dim() == 1 ? m : m * m);
    if (g.dim() == 1) {
        for (int di = -(n - 1); di <= n - 1; ++di)
            t.k[di + n - 1] = eval_gradient(spec, offset_displacement(g, di, 0));
    } else {
        for (int dj = -(n - 1); dj <= n - 1; ++dj)
            for (int di = -(n - 1); di <= n - 1; ++di)
                t.k[(di + n - 1) + m * (dj + n - 1)] =
                    eval_gradient(spec, offset_displacement(g, di, dj));
    }
    return t;
}

TensorKernelTable tabulate_tensor(const Grid& g, const TensorKernelSpec& spec) {
    if (!is_even_kernel(spec.profile))
        throw ConfigError("tensor kernel profile must be even");
    const int n = g.cells_per_axis();
    const int m = 2 * n - 1;
    TensorKernelTable t;
    t.n = n;
    t.dim = g.dim();
    t.k.resize(g.dim() == 1 ? m : m * m);
    if (g.dim() == 1) {
        for (int di = -(n - 1); di <= n - 1; ++di)
            t.k[di + n - 1] = eval_tensor(spec, offset_displacement(g, di, 0), 1);
    } else {
        for (int dj = -(n - 1); dj <= n - 1; ++dj)
            for (int di = -(n - 1); di <= n - 1; ++di)
                t.k[(di + n - 1) + m * (dj + n - 1)] =
                    eval_tensor(spec, offset_displacement(g, di, dj), 2);
    }
    return t;
}

Field convolve_scalar(const Grid& g, const ScalarKernelTable& K, const Field& f) {
    check_size(g, f.size(), "convolve_scalar");
    const int n = g.cells_per_axis();
    const double vol = g.cell_volume();
    Field out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += K.at(i - j) * f[j];
            out[i] = s * vol;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            double s = 0.0;
            for (int jy = 0; jy < n; ++jy)
                for (int jx = 0; jx < n; ++jx) s += K.at(ix - jx, iy - jy) * f[g.index(jx, jy)];
            out[g.index(ix, iy)] = s * vol;
        }
    return out;
}

Field convolve_scalar(const Grid& g, const KernelSpec& K, const Field& f) {
    return convolve_scalar(g, tabulate_kernel(g, K), f);
}

VectorField convolve_gradient(const Grid& g, const VectorKernelTable& K, const Field& f) {
    check_size(g, f.size(), "convolve_gradient");
    const int n = g.cells_per_axis();
    const double vol = g.cell_volume();
    VectorField out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += K.at(i - j).x[0] * f[j];
            out[i].x[0] = s * vol;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            Vec2 s;
            for (int jy = 0; jy < n; ++jy)
                for (int jx = 0; jx < n; ++jx) s += K.at(ix - jx, iy - jy) * f[g.index(jx, jy)];
            out[g.index(ix, iy)] = s * vol;
        }
    return out;
}

VectorField convolve_gradient(const Grid& g, const KernelSpec& K, const Field& f) {
    return convolve_gradient(g, tabulate_kernel_gradient(g, K), f);
}

VectorField convolve_tensor(const Grid& g, const TensorKernelTable& Z, const VectorField& v) {
    check_size(g, v.size(), "convolve_tensor");
    const int n = g.cells_per_axis();
    const int dim = g.dim();
    const double vol = g.cell_volume();
    VectorField out(g.num_cells());
    if (dim == 1) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += Z.at(i - j).m[0][0] * v[j].x[0];
            out[i].x[0] = s * vol;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            Vec2 s;
            for (int jy = 0; jy < n; ++jy)
                for (int jx = 0; jx < n; ++jx)
                    s += Z.at(ix - jx, iy - jy).apply(v[g.index(jx, jy)], 2);
            out[g.index(ix, iy)] = s * vol;
        }
    return out;
}

VectorField convolve_tensor(const Grid& g, const TensorKernelSpec& Z, const VectorField& v) {
    return convolve_tensor(g, tabulate_tensor(g, Z), v);
}

}  // namespace ddft
