#include "ddft/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ddft {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

SectionMap parse_ini(const std::string& text) {
    SectionMap out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            out[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
        out[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

SectionMap parse_json_sections(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config JSON must be an object of sections");
    SectionMap out;
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object())
            throw ConfigError("config JSON section '" + section + "' must be an object");
        for (const auto& [key, val] : body.items()) {
            if (val.is_string())
                out[section][key] = val.get<std::string>();
            else if (val.is_boolean())
                out[section][key] = val.get<bool>() ? "true" : "false";
            else
                out[section][key] = val.dump();
        }
    }
    return out;
}

class SectionReader {
public:
    SectionReader(const SectionMap& map, std::string section)
        : map_(map), section_(std::move(section)) {
        if (auto it = map_.find(section_); it != map_.end())
            for (const auto& [k, v] : it->second) unread_.insert(k);
    }

    bool has(const std::string& key) const {
        auto it = map_.find(section_);
        return it != map_.end() && it->second.count(key) > 0;
    }

    std::string str(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        unread_.erase(key);
        return map_.at(section_).at(key);
    }

    double num(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const std::string v = str(key, "");
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config [" + section_ + "] " + key + ": bad number '" + v + "'");
        }
    }

    long integer(const std::string& key, long fallback) {
        const double x = num(key, static_cast<double>(fallback));
        if (x != std::floor(x))
            throw ConfigError("config [" + section_ + "] " + key + ": expected an integer");
        return static_cast<long>(x);
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const std::string v = str(key, "");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config [" + section_ + "] " + key + ": expected a boolean, got '" + v + "'");
    }

    void reject_unknown() const {
        if (!unread_.empty())
            throw ConfigError("config [" + section_ + "]: unknown key '" + *unread_.begin() + "'");
    }

private:
    const SectionMap& map_;
    std::string section_;
    std::set<std::string> unread_;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '/')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config " + what + ": bad number '" + item + "'");
        }
    }
    return out;
}

InitialDensitySpec parse_initial(SectionReader& r) {
    InitialDensitySpec spec;
    const std::string kind = r.str("kind", "uniform");
    if (kind == "uniform") {
        spec.kind = InitialDensitySpec::Kind::uniform;
    } else if (kind == "gaussian") {
        spec.kind = InitialDensitySpec::Kind::gaussian;
        spec.centers = {r.num("center", 0.5)};
        if (r.has("center_y")) spec.centers_y = {r.num("center_y", 0.0)};
        spec.widths = {r.num("width", 0.1)};
        spec.weights = {1.0};
    } else if (kind == "mixture") {
        spec.kind = InitialDensitySpec::Kind::mixture;
        spec.centers = parse_list(r.str("centers", ""), "[initial_density] centers");
        if (r.has("centers_y"))
            spec.centers_y = parse_list(r.str("centers_y", ""), "[initial_density] centers_y");
        spec.widths = parse_list(r.str("widths", ""), "[initial_density] widths");
        spec.weights = parse_list(r.str("weights", ""), "[initial_density] weights");
        if (spec.centers.empty() || spec.centers.size() != spec.widths.size() ||
            spec.centers.size() != spec.weights.size())
            throw ConfigError("config [initial_density]: centers/widths/weights sizes disagree");
    } else if (kind == "file") {
        spec.kind = InitialDensitySpec::Kind::file;
        spec.path = r.str("path", "");
        if (spec.path.empty()) throw ConfigError("config [initial_density]: file kind needs path");
    } else {
        throw ConfigError("config [initial_density]: unknown kind '" + kind + "'");
    }
    return spec;
}

RunConfig from_sections(const SectionMap& sections, std::string source) {
    for (const auto& [name, _] : sections) {
        static const char* known[] = {"domain",     "initial_density", "potentials", "hi_kernels",
                                      "stepping",   "equilibrium",     "oracle",     "output"};
        if (std::find(std::begin(known), std::end(known), name) == std::end(known))
            throw ConfigError("config: unknown section '" + name + "'");
    }

    RunConfig cfg;
    cfg.source_text = std::move(source);

    SectionReader dom(sections, "domain");
    cfg.L = dom.num("L", cfg.L);
    cfg.N = static_cast<int>(dom.integer("N", cfg.N));
    cfg.d = static_cast<int>(dom.integer("d", cfg.d));
    dom.reject_unknown();

    SectionReader init(sections, "initial_density");
    cfg.initial = parse_initial(init);
    init.reject_unknown();

    SectionReader pot(sections, "potentials");
    cfg.model.V1 = parse_kernel_spec(pot.str("V1", "zero"));
    cfg.model.V2 = parse_kernel_spec(pot.str("V2", "zero"));
    pot.reject_unknown();

    SectionReader hik(sections, "hi_kernels");
    cfg.model.Z1 = parse_tensor_spec(hik.str("Z1", "zero"));
    cfg.model.Z2 = parse_tensor_spec(hik.str("Z2", "zero"));
    hik.reject_unknown();

    SectionReader st(sections, "stepping");
    cfg.stepping.dt = st.num("dt", cfg.stepping.dt);
    const std::string scheme = st.str("scheme", "semi_implicit_cc");
    if (scheme == "semi_implicit_cc")
        cfg.stepping.scheme = Scheme::semi_implicit_cc;
    else if (scheme == "explicit_heun")
        cfg.stepping.scheme = Scheme::explicit_heun;
    else
        throw ConfigError("config [stepping] scheme: unknown scheme '" + scheme + "'");
    cfg.stepping.inner_picard_tol = st.num("inner_picard_tol", cfg.stepping.inner_picard_tol);
    cfg.stepping.inner_picard_max =
        static_cast<int>(st.integer("inner_picard_max", cfg.stepping.inner_picard_max));
    cfg.stepping.energy_guard = st.boolean("energy_guard", cfg.stepping.energy_guard);
    cfg.stepping.guard_tol = st.num("guard_tol", cfg.stepping.guard_tol);
    const std::string freeze = st.str("freeze", "synchronized");
    if (freeze == "synchronized")
        cfg.stepping.freeze = FreezePolicy::synchronized;
    else if (freeze == "lagged")
        cfg.stepping.freeze = FreezePolicy::lagged;
    else
        throw ConfigError("config [stepping] freeze: expected synchronized or lagged");
    cfg.stepping.flux_tol = st.num("flux_tol", cfg.stepping.flux_tol);
    cfg.stepping.flux_max_iter =
        static_cast<int>(st.integer("flux_max_iter", cfg.stepping.flux_max_iter));
    cfg.t_end = st.num("t_end", cfg.t_end);
    cfg.record_every = static_cast<int>(st.integer("record_every", cfg.record_every));
    cfg.snapshot_every = static_cast<int>(st.integer("snapshot_every", cfg.snapshot_every));
    st.reject_unknown();

    SectionReader eq(sections, "equilibrium");
    cfg.eq_damping = eq.num("damping", cfg.eq_damping);
    cfg.eq_tol = eq.num("tol", cfg.eq_tol);
    cfg.eq_max_iter = static_cast<int>(eq.integer("max_iter", cfg.eq_max_iter));
    cfg.eq_reference = eq.boolean("reference", cfg.eq_reference);
    eq.reject_unknown();

    SectionReader orc(sections, "oracle");
    cfg.particles = static_cast<int>(orc.integer("particles", cfg.particles));
    cfg.particle_dt = orc.num("dt", cfg.particle_dt);
    cfg.particle_steps = orc.integer("steps", cfg.particle_steps);
    cfg.particle_thin = orc.integer("thin", cfg.particle_thin);
    orc.reject_unknown();

    SectionReader outp(sections, "output");
    cfg.output_dir = outp.str("directory", cfg.output_dir);
    const long seed = outp.integer("seed", static_cast<long>(cfg.seed));
    if (seed < 0) throw ConfigError("config [output] seed: must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    outp.reject_unknown();

    cfg.threads = env_thread_cap();
    return cfg;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool json = first != std::string::npos && text[first] == '{';
    return from_sections(json ? parse_json_sections(text) : parse_ini(text), text);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string to_string(const InitialDensitySpec& spec) {
    std::ostringstream os;
    os.precision(17);
    auto list = [&](const std::vector<double>& v) {
        std::ostringstream ls;
        ls.precision(17);
        for (std::size_t i = 0; i < v.size(); ++i) ls << (i ? "/" : "") << v[i];
        return ls.str();
    };
    switch (spec.kind) {
        case InitialDensitySpec::Kind::uniform:
            os << "kind = uniform\n";
            break;
        case InitialDensitySpec::Kind::gaussian:
            os << "kind = gaussian\ncenter = " << spec.centers[0];
            if (!spec.centers_y.empty()) os << "\ncenter_y = " << spec.centers_y[0];
            os << "\nwidth = " << spec.widths[0] << "\n";
            break;
        case InitialDensitySpec::Kind::mixture:
            os << "kind = mixture\ncenters = " << list(spec.centers);
            if (!spec.centers_y.empty()) os << "\ncenters_y = " << list(spec.centers_y);
            os << "\nwidths = " << list(spec.widths) << "\nweights = " << list(spec.weights) << "\n";
            break;
        case InitialDensitySpec::Kind::file:
            os << "kind = file\npath = " << spec.path << "\n";
            break;
    }
    return os.str();
}

std::string config_to_text(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "[domain]\nL = " << cfg.L << "\nN = " << cfg.N << "\nd = " << cfg.d << "\n\n";
    os << "[initial_density]\n" << to_string(cfg.initial) << "\n";
    os << "[potentials]\nV1 = " << to_string(cfg.model.V1) << "\nV2 = " << to_string(cfg.model.V2)
       << "\n\n";
    os << "[hi_kernels]\nZ1 = " << to_string(cfg.model.Z1) << "\nZ2 = " << to_string(cfg.model.Z2)
       << "\n\n";
    os << "[stepping]\ndt = " << cfg.stepping.dt << "\nscheme = "
       << (cfg.stepping.scheme == Scheme::semi_implicit_cc ? "semi_implicit_cc" : "explicit_heun")
       << "\ninner_picard_tol = " << cfg.stepping.inner_picard_tol
       << "\ninner_picard_max = " << cfg.stepping.inner_picard_max << "\nenergy_guard = "
       << (cfg.stepping.energy_guard ? "true" : "false") << "\nguard_tol = " << cfg.stepping.guard_tol
       << "\nfreeze = "
       << (cfg.stepping.freeze == FreezePolicy::synchronized ? "synchronized" : "lagged")
       << "\nflux_tol = " << cfg.stepping.flux_tol
       << "\nflux_max_iter = " << cfg.stepping.flux_max_iter << "\nt_end = " << cfg.t_end
       << "\nrecord_every = " << cfg.record_every << "\nsnapshot_every = " << cfg.snapshot_every
       << "\n\n";
    os << "[equilibrium]\ndamping = " << cfg.eq_damping << "\ntol = " << cfg.eq_tol
       << "\nmax_iter = " << cfg.eq_max_iter << "\nreference = "
       << (cfg.eq_reference ? "true" : "false") << "\n\n";
    os << "[oracle]\nparticles = " << cfg.particles << "\ndt = " << cfg.particle_dt
       << "\nsteps = " << cfg.particle_steps << "\nthin = " << cfg.particle_thin << "\n\n";
    os << "[output]\ndirectory = " << cfg.output_dir << "\nseed = " << cfg.seed << "\n";
    return os.str();
}

Field build_initial_density(const Grid& g, const InitialDensitySpec& spec,
                            std::vector<std::string>* warnings) {
    Field rho(g.num_cells());
    switch (spec.kind) {
        case InitialDensitySpec::Kind::uniform: {
            const double v = 1.0;
            for (auto& x : rho.v) x = v;
            break;
        }
        case InitialDensitySpec::Kind::gaussian:
        case InitialDensitySpec::Kind::mixture: {
            for (int c = 0; c < g.num_cells(); ++c) {
                const Vec2 p = g.center(c);
                double s = 0.0;
                for (std::size_t k = 0; k < spec.centers.size(); ++k) {
                    Vec2 d = p;
                    d.x[0] -= spec.centers[k];
                    if (g.dim() == 2)
                        d.x[1] -= k < spec.centers_y.size() ? spec.centers_y[k] : 0.5 * g.length();
                    const double w = spec.widths[k];
                    s += spec.weights[k] * std::exp(-d.dot(d) / (2.0 * w * w));
                }
                rho[c] = s;
            }
            break;
        }
        case InitialDensitySpec::Kind::file: {
            std::ifstream in(spec.path);
            if (!in) throw ConfigError("initial density file '" + spec.path + "' not found");
            std::string line;
            std::vector<double> vals;
            int rho_col = -1;
            bool first = true;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                std::stringstream ss(line);
                std::string tok;
                std::vector<std::string> toks;
                while (std::getline(ss, tok, ',')) toks.push_back(tok);
                if (first) {
                    first = false;
                    for (std::size_t i = 0; i < toks.size(); ++i)
                        if (trim(toks[i]) == "rho") rho_col = static_cast<int>(i);
                    if (rho_col >= 0) continue;  // header line consumed
                    rho_col = toks.size() > 1 ? static_cast<int>(toks.size()) - 1 : 0;
                }
                if (static_cast<int>(toks.size()) <= rho_col)
                    throw ConfigError("initial density file: short row in '" + spec.path + "'");
                try {
                    vals.push_back(std::stod(toks[rho_col]));
                } catch (const std::exception&) {
                    throw ConfigError("initial density file: bad value '" + toks[rho_col] + "'");
                }
            }
            if (vals.size() != static_cast<std::size_t>(g.num_cells()))
                throw ConfigError("initial density file has " + std::to_string(vals.size()) +
                                  " cells, grid needs " + std::to_string(g.num_cells()));
            rho.v = std::move(vals);
            break;
        }
    }

    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] < -1e-13)
            throw ConfigError("initial density is negative at cell " + std::to_string(i));
        if (rho[i] < 0.0) rho[i] = 0.0;
    }
    const double mass = integrate(g, rho);
    if (!(mass > 0.0)) throw ConfigError("initial density integrates to zero");
    if (spec.kind == InitialDensitySpec::Kind::file) {
        if (std::abs(mass - 1.0) > 1e-6)
            throw ConfigError("initial density file mass " + std::to_string(mass) +
                              " deviates from 1 by more than 1e-6");
        if (std::abs(mass - 1.0) > 1e-12 && warnings)
            warnings->push_back("initial density file renormalized (mass was " +
                                std::to_string(mass) + ")");
    }
    for (auto& x : rho.v) x /= mass;
    return rho;
}

ValidationReport validate_assumptions(const Grid& g, const RunConfig& cfg) {
    ValidationReport rep;
    const ModelSpecs& m = cfg.model;

    if (!is_even_kernel(m.V2))
        throw ConfigError("assumption gate: the two-body potential V2 must be even");
    if (m.V2.modulation.active() || m.Z1.profile.modulation.active() ||
        m.Z2.profile.modulation.active())
        throw ConfigError("assumption gate: time modulation is only supported on V1");
    if (g.dim() == 2 && m.Z1.structure == TensorKernelSpec::Structure::dyadic && !m.Z1.is_zero())
        throw ConfigError("assumption gate: 2D runs support isotropic Z1 only");

    const double diam = g.length() * std::sqrt(static_cast<double>(g.dim()));
    auto check_tabulated_range = [&](const KernelSpec& k, const char* name) {
        if (k.kind == KernelSpec::Kind::tabulated && k.sample_rmax < diam * (1.0 - 1e-12))
            throw ConfigError(std::string("assumption gate: tabulated ") + name +
                              " does not cover the domain (rmax < diam)");
    };
    check_tabulated_range(m.V1, "V1");
    check_tabulated_range(m.V2, "V2");
    check_tabulated_range(m.Z1.profile, "Z1 profile");
    check_tabulated_range(m.Z2.profile, "Z2 profile");

    rep.v2_sup = sup_norm(m.V2, g, SupDomain::displacements);
    rep.v2_small = rep.v2_sup <= 0.25;
    if (!rep.v2_small)
        rep.warnings.push_back("||V2||_inf = " + std::to_string(rep.v2_sup) +
                               " > 1/4: uniqueness of the equilibrium is not guaranteed");

    rep.z2_sup = sup_norm(m.Z2, g);
    const double z1_sup = sup_norm(m.Z1, g);
    // mu_max of (1 + Z1*rho)^{-1} with int rho = 1 is bounded by 1/(1 - sup|Z1|)
    rep.mu_max_estimate = z1_sup < 1.0 ? 1.0 / (1.0 - z1_sup) : std::numeric_limits<double>::infinity();
    if (z1_sup >= 1.0)
        rep.warnings.push_back("sup|Z1| >= 1: positive definiteness of the diffusion tensor "
                               "cannot be guaranteed a priori");
    rep.contraction_ok = rep.z2_sup * rep.mu_max_estimate < 1.0;
    if (!rep.contraction_ok)
        rep.warnings.push_back("contraction condition violated: sup|Z2| * mu_max estimate = " +
                               std::to_string(rep.z2_sup * rep.mu_max_estimate) + " >= 1");
    return rep;
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int env_thread_cap() {
    const char* v = std::getenv("DDFT_THREADS");
    if (!v) return 1;
    try {
        const int n = std::stoi(v);
        return std::max(1, n);
    } catch (const std::exception&) {
        return 1;
    }
}

}  // namespace ddft
