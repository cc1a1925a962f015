#include "ddft/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ddft {

namespace {

/// Clamped-at-origin cubic spline (s'(0) = 0, natural at the far end). The
/// zero slope at r = 0 keeps the radial kernel even and C^2 through the origin.
std::vector<double> spline_second_derivs(const std::vector<double>& y, double dr) {
    const int n = static_cast<int>(y.size());
    std::vector<double> d2(n, 0.0), u(n, 0.0);
    // clamped left end: s'(0) = 0
    d2[0] = -0.5;
    u[0] = 3.0 / dr * ((y[1] - y[0]) / dr);
    for (int i = 1; i < n - 1; ++i) {
        const double p = 0.5 * d2[i - 1] + 2.0;
        d2[i] = -0.5 / p;
        u[i] = (6.0 * ((y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dr * dr)) / 2.0 - 0.5 * u[i - 1]) / p;
    }
    d2[n - 1] = 0.0;  // natural right end
    for (int i = n - 2; i >= 0; --i) d2[i] = d2[i] * d2[i + 1] + u[i];
    return d2;
}

struct SplineEval {
    double value;
    double deriv;
};

SplineEval eval_spline(const KernelSpec& s, double r) {
    const int n = static_cast<int>(s.samples.size());
    const double dr = s.sample_rmax / (n - 1);
    if (r < -1e-14 || r > s.sample_rmax * (1.0 + 1e-12))
        throw ConfigError("tabulated kernel queried outside its sample range");
    r = std::clamp(r, 0.0, s.sample_rmax);
    int i = std::min(static_cast<int>(r / dr), n - 2);
    const double a = ((i + 1) * dr - r) / dr;
    const double b = 1.0 - a;
    const double y = a * s.samples[i] + b * s.samples[i + 1] +
                     ((a * a * a - a) * s.spline_d2[i] + (b * b * b - b) * s.spline_d2[i + 1]) *
                         (dr * dr) / 6.0;
    const double yp = (s.samples[i + 1] - s.samples[i]) / dr +
                      (-(3.0 * a * a - 1.0) * s.spline_d2[i] + (3.0 * b * b - 1.0) * s.spline_d2[i + 1]) *
                          dr / 6.0;
    return {y, yp};
}

}  // namespace

KernelSpec KernelSpec::zero() { return KernelSpec{}; }

KernelSpec KernelSpec::constant(double c) {
    KernelSpec s;
    s.kind = Kind::constant;
    s.value = c;
    return s;
}

KernelSpec KernelSpec::harmonic(Vec2 center, double stiffness) {
    KernelSpec s;
    s.kind = Kind::harmonic;
    s.center = center;
    s.stiffness = stiffness;
    return s;
}

KernelSpec KernelSpec::gaussian(double amplitude, double width) {
    if (!(width > 0.0)) throw ConfigError("gaussian kernel needs width > 0");
    KernelSpec s;
    s.kind = Kind::gaussian;
    s.amplitude = amplitude;
    s.width = width;
    return s;
}

KernelSpec KernelSpec::soft_core(double amplitude, double width) {
    if (!(width > 0.0)) throw ConfigError("soft_core kernel needs width > 0");
    KernelSpec s;
    s.kind = Kind::soft_core;
    s.amplitude = amplitude;
    s.width = width;
    return s;
}

KernelSpec KernelSpec::double_well(double a, double b, Vec2 center) {
    KernelSpec s;
    s.kind = Kind::double_well;
    s.quartic = a;
    s.quadratic = b;
    s.center = center;
    return s;
}

KernelSpec KernelSpec::tabulated(std::vector<double> samples, double rmax) {
    if (samples.size() < 4) throw ConfigError("tabulated kernel needs at least 4 samples");
    if (!(rmax > 0.0)) throw ConfigError("tabulated kernel needs rmax > 0");
    KernelSpec s;
    s.kind = Kind::tabulated;
    s.samples = std::move(samples);
    s.sample_rmax = rmax;
    s.spline_d2 = spline_second_derivs(s.samples, rmax / (s.samples.size() - 1));
    return s;
}

double eval_potential(const KernelSpec& spec, const Vec2& x, double t) {
    const double m = spec.modulation.value(t);
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
            return 0.0;
        case KernelSpec::Kind::constant:
            return m * spec.value;
        case KernelSpec::Kind::harmonic: {
            const Vec2 d = x - spec.center;
            return m * 0.5 * spec.stiffness * d.dot(d);
        }
        case KernelSpec::Kind::gaussian: {
            const double q = x.dot(x) / (2.0 * spec.width * spec.width);
            return m * spec.amplitude * std::exp(-q);
        }
        case KernelSpec::Kind::soft_core: {
            const double r2 = x.dot(x);
            const double s = r2 * r2 / std::pow(spec.width, 4);
            return m * spec.amplitude / (1.0 + s);
        }
        case KernelSpec::Kind::double_well: {
            const Vec2 d = x - spec.center;
            const double u = d.dot(d);
            return m * (spec.quartic * u * u - spec.quadratic * u);
        }
        case KernelSpec::Kind::tabulated:
            return m * eval_spline(spec, x.norm()).value;
    }
    return 0.0;
}

Vec2 eval_gradient(const KernelSpec& spec, const Vec2& x, double t) {
    const double m = spec.modulation.value(t);
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
        case KernelSpec::Kind::constant:
            return {};
        case KernelSpec::Kind::harmonic:
            return (m * spec.stiffness) * (x - spec.center);
        case KernelSpec::Kind::gaussian: {
            const double w2 = spec.width * spec.width;
            const double q = x.dot(x) / (2.0 * w2);
            return (-m * spec.amplitude * std::exp(-q) / w2) * x;
        }
        case KernelSpec::Kind::soft_core: {
            const double r2 = x.dot(x);
            const double w4 = std::pow(spec.width, 4);
            const double s = r2 * r2 / w4;
            const double denom = (1.0 + s) * (1.0 + s);
            return (-4.0 * m * spec.amplitude * r2 / (w4 * denom)) * x;
        }
        case KernelSpec::Kind::double_well: {
            const Vec2 d = x - spec.center;
            const double u = d.dot(d);
            return (m * (4.0 * spec.quartic * u - 2.0 * spec.quadratic)) * d;
        }
        case KernelSpec::Kind::tabulated: {
            const double r = x.norm();
            if (r == 0.0) return {};
            return (m * eval_spline(spec, r).deriv / r) * x;
        }
    }
    return {};
}

bool is_even_kernel(const KernelSpec& spec) {
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
        case KernelSpec::Kind::constant:
        case KernelSpec::Kind::gaussian:
        case KernelSpec::Kind::soft_core:
        case KernelSpec::Kind::tabulated:
            return true;
        case KernelSpec::Kind::harmonic:
        case KernelSpec::Kind::double_well:
            return spec.center.x[0] == 0.0 && spec.center.x[1] == 0.0;
    }
    return false;
}

TensorKernelSpec TensorKernelSpec::zero() { return TensorKernelSpec{}; }

TensorKernelSpec TensorKernelSpec::isotropic(KernelSpec profile) {
    TensorKernelSpec s;
    s.structure = Structure::isotropic;
    s.profile = std::move(profile);
    return s;
}

TensorKernelSpec TensorKernelSpec::dyadic(KernelSpec profile, double c1, double c2, double eps_reg) {
    if (!(eps_reg > 0.0)) throw ConfigError("dyadic tensor kernel needs eps_reg > 0");
    TensorKernelSpec s;
    s.structure = Structure::dyadic;
    s.profile = std::move(profile);
    s.c1 = c1;
    s.c2 = c2;
    s.eps_reg = eps_reg;
    return s;
}

Mat2 eval_tensor(const TensorKernelSpec& spec, const Vec2& r, int dim) {
    const double p = eval_potential(spec.profile, r, 0.0);
    Mat2 out;
    if (spec.structure == TensorKernelSpec::Structure::isotropic) {
        for (int i = 0; i < dim; ++i) out.m[i][i] = p;
        return out;
    }
    const double q = r.dot(r) + spec.eps_reg * spec.eps_reg;
    // each off-diagonal pair computed once so the matrix is bit-exactly symmetric
    for (int i = 0; i < dim; ++i) {
        out.m[i][i] = p * (spec.c1 + spec.c2 * r.x[i] * r.x[i] / q);
        for (int j = i + 1; j < dim; ++j) {
            const double v = p * (spec.c2 * (r.x[i] * r.x[j]) / q);
            out.m[i][j] = v;
            out.m[j][i] = v;
        }
    }
    return out;
}

namespace {

/// Max of f over a 10x refined sample grid, inflated by half the largest
/// observed neighbor gap so the result upper-bounds the continuum sup for
/// Lipschitz f (the gap realizes the local Lipschitz step).
template <typename F>
double scan_max(const Grid& g, SupDomain domain, F&& f) {
    const int per_axis = 10 * g.cells_per_axis();
    const double lo = domain == SupDomain::positions ? 0.0 : -g.length();
    const double hi = g.length();
    const int npts = domain == SupDomain::positions ? per_axis : 2 * per_axis;
    double best = 0.0, gap = 0.0;
    if (g.dim() == 1) {
        double prev = 0.0;
        for (int i = 0; i <= npts; ++i) {
            const double v = f(Vec2{{lo + (hi - lo) * i / npts, 0.0}});
            best = std::max(best, v);
            if (i > 0) gap = std::max(gap, std::abs(v - prev));
            prev = v;
        }
        return best + 0.5 * gap;
    }
    std::vector<double> vals((npts + 1) * (npts + 1));
    for (int j = 0; j <= npts; ++j)
        for (int i = 0; i <= npts; ++i) {
            const double v =
                f(Vec2{{lo + (hi - lo) * i / npts, lo + (hi - lo) * j / npts}});
            vals[i + (npts + 1) * j] = v;
            best = std::max(best, v);
        }
    for (int j = 0; j <= npts; ++j)
        for (int i = 0; i <= npts; ++i) {
            const double v = vals[i + (npts + 1) * j];
            if (i > 0) gap = std::max(gap, std::abs(v - vals[(i - 1) + (npts + 1) * j]));
            if (j > 0) gap = std::max(gap, std::abs(v - vals[i + (npts + 1) * (j - 1)]));
        }
    return best + 0.5 * gap;
}

}  // namespace

double sup_norm(const KernelSpec& spec, const Grid& g, SupDomain domain) {
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
            return 0.0;
        case KernelSpec::Kind::constant:
            return std::abs(spec.value);
        case KernelSpec::Kind::gaussian:
            // |r| = 0 lies in both domains
            return std::abs(spec.amplitude);
        case KernelSpec::Kind::soft_core:
            return std::abs(spec.amplitude);
        default:
            return scan_max(g, domain,
                            [&](const Vec2& x) { return std::abs(eval_potential(spec, x, 0.0)); });
    }
}

double grad_sup_norm(const KernelSpec& spec, const Grid& g, SupDomain domain) {
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
        case KernelSpec::Kind::constant:
            return 0.0;
        default:
            return scan_max(g, domain,
                            [&](const Vec2& x) { return eval_gradient(spec, x, 0.0).norm(); });
    }
}

double sup_norm(const TensorKernelSpec& spec, const Grid& g) {
    const double p = sup_norm(spec.profile, g, SupDomain::displacements);
    if (spec.structure == TensorKernelSpec::Structure::isotropic) return p;
    return p * std::max(1.0, std::abs(spec.c1) + std::abs(spec.c2));
}

// ---------------------------------------------------------------------------
// Spec strings: "kind:key=value,..." with an optional "|mod=sine,amp=..,omega=.."
// suffix, e.g. "harmonic:center=0.5,stiffness=4".

namespace {

std::vector<std::pair<std::string, std::string>> parse_kv_list(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("kernel spec: expected key=value, got '" + item + "'");
        kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return kv;
}

double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("kernel spec: bad numeric value for '" + key + "': '" + s + "'");
    }
}

std::vector<double> to_double_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '/')) out.push_back(to_double(key, item));
    return out;
}

TimeModulation parse_modulation(const std::string& text) {
    TimeModulation mod;
    for (const auto& [key, val] : parse_kv_list(text)) {
        if (key == "mod") {
            if (val == "sine")
                mod.kind = TimeModulation::Kind::sine;
            else if (val != "none")
                throw ConfigError("unknown time modulation '" + val + "'");
        } else if (key == "amp") {
            mod.amp = to_double(key, val);
        } else if (key == "omega") {
            mod.omega = to_double(key, val);
        } else {
            throw ConfigError("unknown modulation key '" + key + "'");
        }
    }
    return mod;
}

}  // namespace

KernelSpec parse_kernel_spec(const std::string& text) {
    std::string body = text;
    TimeModulation mod;
    if (const auto bar = text.find('|'); bar != std::string::npos) {
        mod = parse_modulation(text.substr(bar + 1));
        body = text.substr(0, bar);
    }
    const auto colon = body.find(':');
    const std::string kind = body.substr(0, colon);
    std::vector<std::pair<std::string, std::string>> kv;
    if (colon != std::string::npos) kv = parse_kv_list(body.substr(colon + 1));

    auto get = [&](const std::string& key, std::optional<double> fallback = {}) {
        for (const auto& [k, v] : kv)
            if (k == key) return to_double(key, v);
        if (fallback) return *fallback;
        throw ConfigError("kernel spec '" + kind + "' is missing key '" + key + "'");
    };

    KernelSpec s;
    if (kind == "zero") {
        s = KernelSpec::zero();
    } else if (kind == "constant") {
        s = KernelSpec::constant(get("value"));
    } else if (kind == "harmonic") {
        Vec2 c{{get("center"), get("center_y", 0.0)}};
        s = KernelSpec::harmonic(c, get("stiffness"));
    } else if (kind == "gaussian") {
        s = KernelSpec::gaussian(get("amplitude"), get("width"));
    } else if (kind == "soft_core") {
        s = KernelSpec::soft_core(get("amplitude"), get("width"));
    } else if (kind == "double_well") {
        Vec2 c{{get("center", 0.0), get("center_y", 0.0)}};
        s = KernelSpec::double_well(get("a"), get("b"), c);
    } else if (kind == "tabulated") {
        std::vector<double> samples;
        for (const auto& [k, v] : kv)
            if (k == "samples") samples = to_double_list(k, v);
        s = KernelSpec::tabulated(std::move(samples), get("rmax"));
    } else {
        throw ConfigError("unknown kernel kind '" + kind + "'");
    }
    s.modulation = mod;
    return s;
}

std::string to_string(const KernelSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    switch (spec.kind) {
        case KernelSpec::Kind::zero:
            os << "zero";
            break;
        case KernelSpec::Kind::constant:
            os << "constant:value=" << spec.value;
            break;
        case KernelSpec::Kind::harmonic:
            os << "harmonic:center=" << spec.center.x[0] << ",center_y=" << spec.center.x[1]
               << ",stiffness=" << spec.stiffness;
            break;
        case KernelSpec::Kind::gaussian:
            os << "gaussian:amplitude=" << spec.amplitude << ",width=" << spec.width;
            break;
        case KernelSpec::Kind::soft_core:
            os << "soft_core:amplitude=" << spec.amplitude << ",width=" << spec.width;
            break;
        case KernelSpec::Kind::double_well:
            os << "double_well:a=" << spec.quartic << ",b=" << spec.quadratic
               << ",center=" << spec.center.x[0] << ",center_y=" << spec.center.x[1];
            break;
        case KernelSpec::Kind::tabulated: {
            os << "tabulated:samples=";
            for (std::size_t i = 0; i < spec.samples.size(); ++i)
                os << (i ? "/" : "") << spec.samples[i];
            os << ",rmax=" << spec.sample_rmax;
            break;
        }
    }
    if (spec.modulation.active())
        os << "|mod=sine,amp=" << spec.modulation.amp << ",omega=" << spec.modulation.omega;
    return os.str();
}

TensorKernelSpec parse_tensor_spec(const std::string& text) {
    if (text == "zero") return TensorKernelSpec::zero();
    const auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')')
        throw ConfigError("tensor spec: expected 'structure(profile...)', got '" + text + "'");
    const std::string structure = text.substr(0, open);
    const std::string inner = text.substr(open + 1, text.size() - open - 2);
    if (structure == "isotropic") return TensorKernelSpec::isotropic(parse_kernel_spec(inner));
    if (structure == "dyadic") {
        const auto semi = inner.find(';');
        if (semi == std::string::npos)
            throw ConfigError("dyadic tensor spec needs ';c1=..,c2=..,eps_reg=..' after the profile");
        const KernelSpec profile = parse_kernel_spec(inner.substr(0, semi));
        double c1 = 1.0, c2 = 0.0, eps = 0.0;
        for (const auto& [k, v] : parse_kv_list(inner.substr(semi + 1))) {
            if (k == "c1")
                c1 = to_double(k, v);
            else if (k == "c2")
                c2 = to_double(k, v);
            else if (k == "eps_reg")
                eps = to_double(k, v);
            else
                throw ConfigError("unknown dyadic tensor key '" + k + "'");
        }
        return TensorKernelSpec::dyadic(profile, c1, c2, eps);
    }
    throw ConfigError("unknown tensor structure '" + structure + "'");
}

std::string to_string(const TensorKernelSpec& spec) {
    if (spec.is_zero() && spec.structure == TensorKernelSpec::Structure::isotropic) return "zero";
    std::ostringstream os;
    os.precision(17);
    if (spec.structure == TensorKernelSpec::Structure::isotropic) {
        os << "isotropic(" << to_string(spec.profile) << ")";
    } else {
        os << "dyadic(" << to_string(spec.profile) << ";c1=" << spec.c1 << ",c2=" << spec.c2
           << ",eps_reg=" << spec.eps_reg << ")";
    }
    return os.str();
}

}  // namespace ddft
