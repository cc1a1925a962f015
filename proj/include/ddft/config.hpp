#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddft/dynamics.hpp"

namespace ddft {

struct InitialDensitySpec {
    enum class Kind { uniform, gaussian, mixture, file };
    Kind kind = Kind::uniform;
    std::vector<double> centers;    // x centers (gaussian: one entry)
    std::vector<double> centers_y;  // optional, 2D
    std::vector<double> widths;
    std::vector<double> weights;
    std::string path;  // file kind
};

/// Everything one run needs; mirrors the sectioned config file.
struct RunConfig {
    // [domain]
    double L = 1.0;
    int N = 256;
    int d = 1;
    // [initial_density]
    InitialDensitySpec initial;
    // [potentials] + [hi_kernels]
    ModelSpecs model;
    // [stepping]
    StepControl stepping;
    double t_end = 1.0;
    int record_every = 10;
    int snapshot_every = 0;
    // [equilibrium]
    double eq_damping = 1.0;
    double eq_tol = 1e-12;
    int eq_max_iter = 500;
    bool eq_reference = true;  // solve the fixed point as the L2-distance reference
    // [oracle]
    int particles = 10000;
    double particle_dt = 5e-4;
    long particle_steps = 100000;
    long particle_thin = 1000;
    // [output]
    std::string output_dir = "out";
    std::uint64_t seed = 42;

    int threads = 1;          // DDFT_THREADS cap; 1 keeps runs deterministic
    std::string source_text;  // raw config echo
};

/// Reads either the line-oriented sectioned key=value format or, when the
/// first non-space byte is '{', the JSON rendering of the same schema.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Canonical sectioned rendering; reparsing it yields an identical RunConfig.
std::string config_to_text(const RunConfig& cfg);

std::string to_string(const InitialDensitySpec& spec);

/// Builds (and exactly normalizes) the initial density. File densities must
/// integrate to 1 within 1e-6 (then they are silently renormalized, with a
/// warning when the correction exceeds round-off).
Field build_initial_density(const Grid& g, const InitialDensitySpec& spec,
                            std::vector<std::string>* warnings = nullptr);

/// Assumption gate: evenness and boundedness of the two-body kernels, the
/// contraction condition estimate sup(Z2) * mu_max < 1, the small-interaction
/// flag ||V2|| <= 1/4, and scheme restrictions. Hard violations throw;
/// soft ones come back as warnings.
struct ValidationReport {
    std::vector<std::string> warnings;
    double v2_sup = 0.0;
    bool v2_small = false;  // ||V2||_inf <= 1/4
    double z2_sup = 0.0;
    double mu_max_estimate = 1.0;
    bool contraction_ok = true;
};
ValidationReport validate_assumptions(const Grid& g, const RunConfig& cfg);

/// FNV-1a 64-bit content hash, hex-encoded; identifies the config in run.json.
std::string content_hash(const std::string& text);

/// DDFT_THREADS environment cap (>= 1); default 1.
int env_thread_cap();

}  // namespace ddft
