#pragma once

#include <cstdint>
#include <vector>

#include "ddft/grid_ops.hpp"

namespace ddft {

/// Positions of an overdamped Brownian ensemble confined to the box by
/// reflecting walls.
struct ParticleEnsemble {
    std::vector<Vec2> positions;
    std::uint64_t rng_seed = 0;
    double time = 0.0;

    int n() const { return static_cast<int>(positions.size()); }
};

/// Euler-Maruyama simulation of N weakly interacting diffusions,
///   X <- X - (grad V1(X) + (1/N) sum_j grad V2(X - X_j)) dt + sqrt(2 dt) xi,
/// with reflecting walls. The mean-field pair force is gathered from the
/// binned empirical density on `g` (particle-mesh), which is the same
/// approximation the continuum limit makes. No hydrodynamic interactions.
///
/// Caller contract: dt * ||hess V||_inf < 0.5 (checked approximately).
/// Deterministic for a fixed seed. Returns snapshots every `thin` steps,
/// including the final state.
std::vector<ParticleEnsemble> simulate(const Grid& g, int n_particles, double dt, long steps,
                                       const KernelSpec& V1, const KernelSpec& V2,
                                       std::uint64_t seed, long thin);

/// Streaming variant: time-averaged histogram over the second half of the
/// run (memory stays O(grid)). Used where long runs would make storing
/// snapshots wasteful.
Field simulate_histogram(const Grid& g, int n_particles, double dt, long steps,
                         const KernelSpec& V1, const KernelSpec& V2, std::uint64_t seed);

/// Nearest-cell counts normalized to a probability density on g
/// (integrates to 1 exactly).
Field histogram(const std::vector<Vec2>& samples, const Grid& g);
Field histogram(const ParticleEnsemble& ensemble, const Grid& g);

}  // namespace ddft
