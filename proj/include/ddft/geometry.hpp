#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ddft/errors.hpp"

namespace ddft {

/// Small fixed-size vector for spatial data (dimension 1 or 2; unused
/// components stay zero).
struct Vec2 {
    double x[2] = {0.0, 0.0};

    double& operator[](int i) { return x[i]; }
    double operator[](int i) const { return x[i]; }

    Vec2 operator+(const Vec2& o) const { return {{x[0] + o.x[0], x[1] + o.x[1]}}; }
    Vec2 operator-(const Vec2& o) const { return {{x[0] - o.x[0], x[1] - o.x[1]}}; }
    Vec2 operator*(double s) const { return {{x[0] * s, x[1] * s}}; }
    Vec2& operator+=(const Vec2& o) {
        x[0] += o.x[0];
        x[1] += o.x[1];
        return *this;
    }
    double dot(const Vec2& o) const { return x[0] * o.x[0] + x[1] * o.x[1]; }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Symmetric d x d matrix (d <= 2) stored dense.
struct Mat2 {
    double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    static Mat2 identity(int dim) {
        Mat2 r;
        for (int i = 0; i < dim; ++i) r.m[i][i] = 1.0;
        return r;
    }
    static Mat2 zero() { return Mat2{}; }

    double& operator()(int i, int j) { return m[i][j]; }
    double operator()(int i, int j) const { return m[i][j]; }

    Mat2 operator+(const Mat2& o) const {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
        return r;
    }
    Mat2 operator*(double s) const {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] * s;
        return r;
    }
    Vec2 apply(const Vec2& v, int dim) const {
        Vec2 r;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) r.x[i] += m[i][j] * v.x[j];
        return r;
    }

    double det(int dim) const {
        return dim == 1 ? m[0][0] : m[0][0] * m[1][1] - m[0][1] * m[1][0];
    }
    double trace(int dim) const { return dim == 1 ? m[0][0] : m[0][0] + m[1][1]; }

    /// Eigenvalues of the symmetric part, ascending. Closed form for d <= 2.
    std::array<double, 2> sym_eigenvalues(int dim) const {
        if (dim == 1) return {m[0][0], m[0][0]};
        const double a = m[0][0], d = m[1][1], b = 0.5 * (m[0][1] + m[1][0]);
        const double mean = 0.5 * (a + d);
        const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        return {mean - disc, mean + disc};
    }

    Mat2 inverse(int dim) const {
        Mat2 r;
        const double dd = det(dim);
        if (dim == 1) {
            r.m[0][0] = 1.0 / dd;
        } else {
            r.m[0][0] = m[1][1] / dd;
            r.m[1][1] = m[0][0] / dd;
            r.m[0][1] = -m[0][1] / dd;
            r.m[1][0] = -m[1][0] / dd;
        }
        return r;
    }

    /// Solve M x = v without forming the inverse.
    Vec2 solve(const Vec2& v, int dim) const {
        if (dim == 1) return {{v.x[0] / m[0][0], 0.0}};
        const double dd = det(2);
        return {{(m[1][1] * v.x[0] - m[0][1] * v.x[1]) / dd,
                 (m[0][0] * v.x[1] - m[1][0] * v.x[0]) / dd}};
    }

    /// Principal square root of a symmetric positive definite matrix.
    Mat2 sqrt_spd(int dim) const {
        Mat2 r;
        if (dim == 1) {
            r.m[0][0] = std::sqrt(m[0][0]);
            return r;
        }
        // sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det))
        const double s = std::sqrt(det(2));
        const double t = std::sqrt(trace(2) + 2.0 * s);
        r = *this;
        r.m[0][0] += s;
        r.m[1][1] += s;
        return r * (1.0 / t);
    }
};

/// Uniform cell-centered finite-volume mesh on the box [0,L]^d, d in {1,2}.
/// Cell i along an axis is centered at (i + 1/2) h with h = L/N.
class Grid {
public:
    Grid() = default;

    int dim() const { return dim_; }
    double length() const { return length_; }
    int cells_per_axis() const { return n_; }
    double spacing() const { return h_; }
    int num_cells() const { return dim_ == 1 ? n_ : n_ * n_; }
    double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

    /// Flattened index of cell (ix, iy); iy ignored in 1D.
    int index(int ix, int iy = 0) const { return dim_ == 1 ? ix : ix + n_ * iy; }
    int ix_of(int idx) const { return dim_ == 1 ? idx : idx % n_; }
    int iy_of(int idx) const { return dim_ == 1 ? 0 : idx / n_; }

    Vec2 center(int idx) const {
        Vec2 p;
        p.x[0] = (ix_of(idx) + 0.5) * h_;
        if (dim_ == 2) p.x[1] = (iy_of(idx) + 0.5) * h_;
        return p;
    }

    friend Grid build_grid(double L, int N, int d);

private:
    int dim_ = 1;
    double length_ = 1.0;
    int n_ = 4;
    double h_ = 0.25;
};

/// Validates L > 0, N >= 4, d in {1,2} and constructs the mesh.
Grid build_grid(double L, int N, int d);

/// Scalar cell field (density, potential, ...). One value per cell.
struct Field {
    std::vector<double> v;

    Field() = default;
    explicit Field(std::size_t n, double fill = 0.0) : v(n, fill) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

/// Cell vector field (flux, drift, gradients). One d-vector per cell.
struct VectorField {
    std::vector<Vec2> v;

    VectorField() = default;
    explicit VectorField(std::size_t n) : v(n) {}

    std::size_t size() const { return v.size(); }
    Vec2& operator[](std::size_t i) { return v[i]; }
    const Vec2& operator[](std::size_t i) const { return v[i]; }
};

/// One d x d matrix per cell (diffusion tensor and friends).
struct TensorField {
    std::vector<Mat2> m;

    TensorField() = default;
    explicit TensorField(std::size_t n) : m(n) {}

    std::size_t size() const { return m.size(); }
    Mat2& operator[](std::size_t i) { return m[i]; }
    const Mat2& operator[](std::size_t i) const { return m[i]; }
};

/// Normal flux values on cell faces, one scalar per face per axis.
/// Boundary faces carry exactly zero; that is the discrete no-flux condition.
///
/// Axis 0 faces sit between cells (ix-1,iy) and (ix,iy); there are N+1 of
/// them per row, indexed fx + (N+1)*iy. Axis 1 (2D only) analogous.
struct FaceFluxField {
    int dim = 1;
    int n = 0;  // cells per axis
    std::vector<double> axis0;
    std::vector<double> axis1;

    static FaceFluxField zeros(const Grid& g);

    double& f0(int fx, int iy = 0) { return axis0[fx + (n + 1) * iy]; }
    double f0(int fx, int iy = 0) const { return axis0[fx + (n + 1) * iy]; }
    double& f1(int ix, int fy) { return axis1[ix + n * fy]; }
    double f1(int ix, int fy) const { return axis1[ix + n * fy]; }

    /// True when every boundary-face entry is exactly zero.
    bool boundary_closed() const;
};

}  // namespace ddft
