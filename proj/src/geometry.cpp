#include "ddft/geometry.hpp"

#include <string>

namespace ddft {

Grid build_grid(double L, int N, int d) {
    if (d != 1 && d != 2)
        throw ConfigError("build_grid: dimension must be 1 or 2, got " + std::to_string(d));
    if (N < 4) throw ConfigError("build_grid: need at least 4 cells per axis, got " + std::to_string(N));
    if (!(L > 0.0)) throw ConfigError("build_grid: domain extent must be positive");
    Grid g;
    g.dim_ = d;
    g.length_ = L;
    g.n_ = N;
    g.h_ = L / N;
    return g;
}

FaceFluxField FaceFluxField::zeros(const Grid& g) {
    FaceFluxField f;
    f.dim = g.dim();
    f.n = g.cells_per_axis();
    if (f.dim == 1) {
        f.axis0.assign(f.n + 1, 0.0);
    } else {
        f.axis0.assign((f.n + 1) * f.n, 0.0);
        f.axis1.assign(f.n * (f.n + 1), 0.0);
    }
    return f;
}

bool FaceFluxField::boundary_closed() const {
    if (dim == 1) return axis0.front() == 0.0 && axis0.back() == 0.0;
    for (int iy = 0; iy < n; ++iy)
        if (f0(0, iy) != 0.0 || f0(n, iy) != 0.0) return false;
    for (int ix = 0; ix < n; ++ix)
        if (f1(ix, 0) != 0.0 || f1(ix, n) != 0.0) return false;
    return true;
}

}  // namespace ddft
