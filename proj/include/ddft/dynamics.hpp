#pragma once

#include <optional>

#include "ddft/free_energy.hpp"

namespace ddft {

struct TrajectoryRecord;  // diagnostics.hpp

enum class Scheme { semi_implicit_cc, explicit_heun };

/// Which density the diffusion tensor is frozen at during a step: the current
/// one, or the one from the previous step (a lagged frozen-coefficient
/// iteration; the drift always comes from the current density).
enum class FreezePolicy { synchronized, lagged };

struct StepControl {
    double dt = 1e-4;
    Scheme scheme = Scheme::semi_implicit_cc;
    double inner_picard_tol = 0.0;  // only used when inner_picard_max > 1
    int inner_picard_max = 1;
    bool energy_guard = true;
    double guard_tol = 1e-10;
    FreezePolicy freeze = FreezePolicy::synchronized;
    double flux_tol = 1e-11;
    int flux_max_iter = 400;
};

struct SimState {
    double time = 0.0;
    Field rho;
    VectorField flux;       // cell-centered solved flux, diagnostic
    TensorField D_current;  // diffusion tensor used by the last step
    Field rho_prev;         // density at entry of the previous step
    int step_index = 0;
};

/// Sampled kernel tables reused across steps (all kernels are static in time).
struct KernelWorkspace {
    bool v2_on = false, z1_on = false, z2_on = false;
    ScalarKernelTable V2;
    VectorKernelTable gradV2;
    TensorKernelTable Z1;
    TensorKernelTable Z2;

    static KernelWorkspace build(const Grid& g, const ModelSpecs& model);
};

/// assemble_D against the cached Z1 table (identity when Z1 is off).
TensorField assemble_D(const Grid& g, const KernelWorkspace& ws, const Field& rho);

/// Validates and normalizes the initial density into a fresh state.
/// Off-normalization below 1e-6 is silently corrected; beyond that it is an
/// error. Appends a note to `warnings` when a correction was non-trivial.
SimState init_state(const Grid& g, Field rho0, std::vector<std::string>* warnings = nullptr);

/// Total drift w = grad V1 + (grad V2 * rho) + Z2 * a at cell centers.
VectorField assemble_drift(const Grid& g, const SimState& state, const ModelSpecs& model);

/// One time step. The default scheme freezes the diffusion tensor, solves the
/// flux equation, builds exponentially fitted (Chang-Cooper) face fluxes with
/// zero boundary faces, and advances with an implicit linear solve; mass is
/// conserved to solver round-off and positivity is unconditional. The energy
/// guard may halve ctrl.dt (persistently) and retry when F increases.
void step(const Grid& g, SimState& state, StepControl& ctrl, const ModelSpecs& model,
          const KernelWorkspace& ws);
void step(const Grid& g, SimState& state, StepControl& ctrl, const ModelSpecs& model);

struct EvolveOptions {
    const Field* equilibrium_ref = nullptr;  // enables the L2-distance column
    bool store_snapshots = false;
    int snapshot_every = 0;  // 0: first and last only (when storing)
    bool compute_rate = true;  // r_t accumulators (static V1 only)
};

/// March to t_end recording diagnostics every record_every steps (the initial
/// and final states are always recorded).
TrajectoryRecord evolve(const Grid& g, const Field& rho0, StepControl ctrl,
                        const ModelSpecs& model, double t_end, int record_every,
                        const EvolveOptions& opts = {});

}  // namespace ddft
