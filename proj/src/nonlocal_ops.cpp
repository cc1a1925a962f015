#include "ddft/nonlocal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ddft {

namespace {

constexpr int kDenseLimit = 4096;  // largest stacked dimension for dense work

TensorField convolve_tensor_scalar(const Grid& g, const TensorKernelSpec& Z, const Field& phi) {
    const TensorKernelTable tab = tabulate_tensor(g, Z);
    const int n = g.cells_per_axis();
    const double vol = g.cell_volume();
    TensorField out(g.num_cells());
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += tab.at(i - j).m[0][0] * phi[j];
            out[i].m[0][0] = s * vol;
        }
        return out;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            Mat2 s;
            for (int jy = 0; jy < n; ++jy)
                for (int jx = 0; jx < n; ++jx) {
                    const Mat2& z = tab.at(ix - jx, iy - jy);
                    const double p = phi[g.index(jx, jy)];
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) s.m[a][b] += z.m[a][b] * p;
                }
            out[g.index(ix, iy)] = s * vol;
        }
    return out;
}

int flat(int cell, int comp, int dim) { return cell * dim + comp; }

Eigen::MatrixXd dense_from_table(const Grid& g, const TensorField& D, const TensorKernelTable& tab,
                                 const Field& rho) {
    const int dim = g.dim();
    const int ncells = g.num_cells();
    const double vol = g.cell_volume();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ncells * dim, ncells * dim);
    for (int i = 0; i < ncells; ++i) {
        const Mat2 Dinv = D[i].inverse(dim);
        for (int al = 0; al < dim; ++al)
            for (int be = 0; be < dim; ++be) M(flat(i, al, dim), flat(i, be, dim)) = Dinv.m[al][be];
    }
    for (int i = 0; i < ncells; ++i) {
        const int ix = g.ix_of(i), iy = g.iy_of(i);
        for (int j = 0; j < ncells; ++j) {
            const Mat2& z = tab.at(ix - g.ix_of(j), iy - g.iy_of(j));
            for (int al = 0; al < dim; ++al)
                for (int be = 0; be < dim; ++be)
                    M(flat(i, al, dim), flat(j, be, dim)) += rho[i] * z.m[al][be] * vol;
        }
    }
    return M;
}

}  // namespace

TensorField assemble_D(const Grid& g, const TensorKernelSpec& Z1, const Field& phi) {
    const int dim = g.dim();
    TensorField conv = Z1.is_zero() ? TensorField(g.num_cells()) : convolve_tensor_scalar(g, Z1, phi);
    TensorField D(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        Mat2 M = conv[c];
        for (int i = 0; i < dim; ++i) M.m[i][i] += 1.0;
        const double det = M.det(dim);
        if (std::abs(det) < 1e-14)
            throw SingularTensor("assemble_D: 1 + Z1*phi is singular at cell " + std::to_string(c));
        D[c] = M.inverse(dim);
        if (D[c].sym_eigenvalues(dim)[0] <= 0.0)
            throw NotPositiveDefinite("assemble_D: diffusion tensor not positive definite at cell " +
                                      std::to_string(c));
    }
    return D;
}

std::pair<double, double> eigen_bounds(const Grid& g, const TensorField& D) {
    const int dim = g.dim();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Mat2& m : D.m) {
        const auto ev = m.sym_eigenvalues(dim);
        lo = std::min(lo, ev[0]);
        hi = std::max(hi, dim == 1 ? ev[0] : ev[1]);
    }
    return {lo, hi};
}

VectorField apply_A(const Grid& g, const TensorKernelSpec& Z2, const VectorField& a) {
    if (Z2.is_zero()) return VectorField(a.size());
    return convolve_tensor(g, Z2, a);
}

VectorField apply_H(const Grid& g, const TensorField& D, const TensorKernelTable& Z2,
                    const Field& phi, const VectorField& v) {
    const int dim = g.dim();
    VectorField conv = convolve_tensor(g, Z2, v);
    VectorField out(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = D[c].solve(v[c], dim) + phi[c] * conv[c];
    return out;
}

VectorField apply_H(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                    const Field& phi, const VectorField& v) {
    return apply_H(g, D, tabulate_tensor(g, Z2), phi, v);
}

VectorField solve_flux(const Grid& g, const TensorField& D, const TensorKernelTable& Z2,
                       const Field& rho, const VectorField& rhs, double tol, int max_iter) {
    const int dim = g.dim();
    const int ncells = g.num_cells();
    const double rhs_norm = norm_l2(g, rhs);
    if (rhs_norm == 0.0) return VectorField(ncells);

    bool kernel_zero = true;
    for (const Mat2& m : Z2.k)
        if (m.m[0][0] != 0.0 || m.m[0][1] != 0.0 || m.m[1][0] != 0.0 || m.m[1][1] != 0.0) {
            kernel_zero = false;
            break;
        }

    VectorField a(ncells);
    for (int c = 0; c < ncells; ++c) a[c] = D[c].apply(rhs[c], dim);
    if (kernel_zero) return a;  // H reduces to D^-1

    double relax = 1.0;
    double best_res = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int m = 0; m < max_iter; ++m) {
        const VectorField conv = convolve_tensor(g, Z2, a);
        VectorField next(ncells);
        double res2 = 0.0;
        for (int c = 0; c < ncells; ++c) {
            const Vec2 fixed = D[c].apply(rhs[c] - rho[c] * conv[c], dim);
            next[c] = a[c] + relax * (fixed - a[c]);
            // residual of the current iterate: H a - rhs = -D^-1 (next - a)/relax
            const Vec2 r = D[c].solve((next[c] - a[c]) * (1.0 / relax), dim);
            res2 += r.dot(r);
        }
        const double res = std::sqrt(res2 * g.cell_volume());
        if (res <= tol * rhs_norm) return a;
        if (res < 0.999 * best_res) {
            best_res = res;
            stalled = 0;
        } else if (++stalled >= 3) {
            if (relax > 0.49) {  // one retry with under-relaxation
                relax = 0.5;
                stalled = 0;
                best_res = std::numeric_limits<double>::infinity();
            } else {
                break;  // stagnated; go dense
            }
        }
        a = std::move(next);
    }

    if (ncells * dim <= kDenseLimit) {
        const Eigen::MatrixXd M = dense_from_table(g, D, Z2, rho);
        Eigen::VectorXd b(ncells * dim);
        for (int c = 0; c < ncells; ++c)
            for (int al = 0; al < dim; ++al) b(flat(c, al, dim)) = rhs[c].x[al];
        const Eigen::VectorXd x = M.partialPivLu().solve(b);
        VectorField out(ncells);
        for (int c = 0; c < ncells; ++c)
            for (int al = 0; al < dim; ++al) out[c].x[al] = x(flat(c, al, dim));
        const VectorField Ha = apply_H(g, D, Z2, rho, out);
        double res2 = 0.0;
        for (int c = 0; c < ncells; ++c) {
            const Vec2 r = Ha[c] - rhs[c];
            res2 += r.dot(r);
        }
        const double res = std::sqrt(res2 * g.cell_volume());
        if (res <= std::max(tol, 1e-10) * rhs_norm) return out;
        throw NoConvergence("solve_flux: dense fallback residual too large", res / rhs_norm);
    }
    throw NoConvergence("solve_flux: fixed-point iteration stagnated and system too large for dense solve",
                        best_res / rhs_norm);
}

VectorField solve_flux(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                       const Field& rho, const VectorField& rhs, double tol, int max_iter) {
    return solve_flux(g, D, tabulate_tensor(g, Z2), rho, rhs, tol, max_iter);
}

Eigen::MatrixXd assemble_H_dense(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                                 const Field& rho) {
    if (g.num_cells() * g.dim() > kDenseLimit)
        throw ConfigError("assemble_H_dense: system too large for dense assembly");
    return dense_from_table(g, D, tabulate_tensor(g, Z2), rho);
}

VectorField solve_flux_dense(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                             const Field& rho, const VectorField& rhs) {
    const int dim = g.dim();
    const int ncells = g.num_cells();
    const Eigen::MatrixXd M = assemble_H_dense(g, D, Z2, rho);
    Eigen::VectorXd b(ncells * dim);
    for (int c = 0; c < ncells; ++c)
        for (int al = 0; al < dim; ++al) b(flat(c, al, dim)) = rhs[c].x[al];
    const Eigen::VectorXd x = M.partialPivLu().solve(b);
    VectorField out(ncells);
    for (int c = 0; c < ncells; ++c)
        for (int al = 0; al < dim; ++al) out[c].x[al] = x(flat(c, al, dim));
    return out;
}

SpectralReport spectral_report(const Grid& g, const TensorField& D, const TensorKernelSpec& Z2,
                               const Field& rho) {
    const int dim = g.dim();
    const int ncells = g.num_cells();
    const int n = ncells * dim;
    if (n > 1024)
        throw ConfigError("spectral_report: dense spectral work restricted to N <= 512 in 1D");
    for (int c = 0; c < ncells; ++c)
        if (!(rho[c] > 0.0))
            throw ConfigError("spectral_report: rho must be strictly positive (weighted space)");

    SpectralReport rep;
    const auto [lo, hi] = eigen_bounds(g, D);
    rep.mu_min = lo;
    rep.mu_max = hi;
    rep.z2_sup = sup_norm(Z2, g);
    rep.contraction_margin = 1.0 - rep.mu_max * rep.z2_sup;

    const Eigen::MatrixXd M = assemble_H_dense(g, D, Z2, rho);
    const double vol = g.cell_volume();
    rep.weights.resize(n);
    for (int c = 0; c < ncells; ++c)
        for (int al = 0; al < dim; ++al) rep.weights[flat(c, al, dim)] = vol / rho[c];

    // Self-adjointness defect of M in the weighted inner product.
    double defect = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double wm = rep.weights[i] * M(i, j);
            defect = std::max(defect, std::abs(wm - rep.weights[j] * M(j, i)));
            scale = std::max(scale, std::abs(wm));
        }
    rep.symmetry_defect = scale > 0.0 ? defect / scale : 0.0;

    // Similarity-symmetrized H: S = W^{1/2} M W^{-1/2}.
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            S(i, j) = std::sqrt(rep.weights[i] / rep.weights[j]) * M(i, j);
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    rep.eigenvalues_H.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    rep.basis = es.eigenvectors();

    // Z_rho part: the operator a -> -D rho (Z2 * a), symmetrized through the
    // per-cell D^{1/2} similarity so its (real) spectrum comes out of a
    // symmetric eigensolve.
    const TensorKernelTable tab = tabulate_tensor(g, Z2);
    std::vector<Mat2> Dsqrt(ncells);
    for (int c = 0; c < ncells; ++c) Dsqrt[c] = D[c].sqrt_spd(dim);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < ncells; ++i) {
        const int ix = g.ix_of(i), iy = g.iy_of(i);
        for (int j = 0; j < ncells; ++j) {
            const Mat2& z = tab.at(ix - g.ix_of(j), iy - g.iy_of(j));
            const double w = -std::sqrt(rho[i] * rho[j]) * vol;
            for (int al = 0; al < dim; ++al)
                for (int be = 0; be < dim; ++be) {
                    double acc = 0.0;
                    for (int p = 0; p < dim; ++p)
                        for (int q = 0; q < dim; ++q)
                            acc += Dsqrt[i].m[al][p] * z.m[p][q] * Dsqrt[j].m[q][be];
                    T(flat(i, al, dim), flat(j, be, dim)) = w * acc;
                }
        }
    }
    // the similarity is exact up to round-off; a larger defect would mean the
    // spectrum picked up spurious imaginary parts
    const double t_scale = T.cwiseAbs().maxCoeff();
    const double t_defect = (T - T.transpose()).cwiseAbs().maxCoeff();
    if (t_scale > 0.0 && t_defect > 1e-12 * t_scale)
        throw NumericalError("spectral_report: symmetrized Z_rho has defect " +
                             std::to_string(t_defect / t_scale));
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esz(T);
    rep.eigenvalues_gamma.assign(esz.eigenvalues().data(), esz.eigenvalues().data() + n);

    // det H = det(D^-1) det(1 - Z_rho) = prod(mu^-1) prod(1 - gamma_k)
    double logdet = 0.0;
    bool finite = true;
    for (const Mat2& m : D.m) {
        const auto ev = m.sym_eigenvalues(dim);
        for (int al = 0; al < dim; ++al) logdet -= std::log(ev[al == 0 ? 0 : 1]);
    }
    for (double gk : rep.eigenvalues_gamma) {
        if (1.0 - gk <= 0.0) {
            finite = false;
            break;
        }
        logdet += std::log1p(-gk);
    }
    rep.log_fredholm_det = finite ? logdet : -std::numeric_limits<double>::infinity();
    return rep;
}

VectorField flux_by_eigen_expansion(const Grid& g, const SpectralReport& report, const Field& rho,
                                    const VectorField& rhs) {
    (void)rho;  // the weighting is already baked into report.weights
    const int dim = g.dim();
    const int ncells = g.num_cells();
    const int n = ncells * dim;
    if (report.basis.rows() != n)
        throw ConfigError("flux_by_eigen_expansion: report does not match grid");
    Eigen::VectorXd y(n);
    for (int c = 0; c < ncells; ++c)
        for (int al = 0; al < dim; ++al) {
            const int k = flat(c, al, dim);
            y(k) = std::sqrt(report.weights[k]) * rhs[c].x[al];
        }
    Eigen::VectorXd z = report.basis.transpose() * y;
    for (int k = 0; k < n; ++k) {
        if (std::abs(report.eigenvalues_H[k]) < 1e-300)
            throw SingularTensor("flux_by_eigen_expansion: zero eigenvalue of H");
        z(k) /= report.eigenvalues_H[k];
    }
    const Eigen::VectorXd x = report.basis * z;
    VectorField out(ncells);
    for (int c = 0; c < ncells; ++c)
        for (int al = 0; al < dim; ++al) {
            const int k = flat(c, al, dim);
            out[c].x[al] = x(k) / std::sqrt(report.weights[k]);
        }
    return out;
}

}  // namespace ddft
