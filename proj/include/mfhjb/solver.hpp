#ifndef MFHJB_SOLVER_HPP
#define MFHJB_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfhjb/fourier.hpp"
#include "mfhjb/hamiltonian.hpp"
#include "mfhjb/torus.hpp"

namespace mfhjb {

/**
 * Backward-in-time solve parameters.  Zero values of dt, theta, and p_clip
 * request derivation: dt from the CFL bound, theta from probed Hamiltonian
 * slopes, p_clip as 1.2 times the declared gradient bound r_star.
 */
struct SolverConfig {
    GridSpec grid;
    double T = 0.1;
    double a0 = 0.0;
    double dt = 0.0;
    double cfl_safety = 0.9;
    double theta = 0.0;
    double p_clip = 0.0;
    double r_star = 0.0;
    StepKind diffusion = StepKind::Resolvent;
    std::vector<double> snapshot_times; // the terminal time is always recorded
    std::uint64_t budget_bytes = default_memory_budget;
    std::uint64_t seed = 0; // used only for theta probing

    void validate() const; // throws config_error naming the violated constraint
};

struct Snapshot {
    double t = 0.0;
    GridFn values;
    double lipschitz = 0.0; // max over blocks of N * sup |grad_block V|
};

struct StepDiag {
    double t = 0.0;         // time level reached by the step
    double max_update = 0.0;
};

struct SolutionTrajectory {
    SolverConfig config;
    double dt_eff = 0.0;
    int n_steps = 0;
    double theta_used = 0.0;
    double p_clip_used = 0.0;
    std::vector<Snapshot> snapshots; // time-descending, starting at T
    std::vector<StepDiag> diagnostics;

    const Snapshot& at_time(double t, double tol = 1e-9) const;
};

/** Terminal data on the grid: node -> G(empirical measure of the node state),
 *  with the measure translated by z on grids that carry a translation block. */
GridFn terminal_grid(const TerminalSpec& G, const GridSpec& spec);

/**
 * Backward IMEX solve of the N-particle equation: explicit monotone
 * (Lax-Friedrichs) Hamiltonian update, implicit spectral diffusion step.
 */
SolutionTrajectory solve_hjbn(const HamiltonianSpec& H, const TerminalSpec& G,
                              const SolverConfig& cfg);

/** Same scheme on a grid with a leading translation block: the Hamiltonian and
 *  terminal data see state and measure shifted by z, the diffusion couples the
 *  translation axes with intensity a0. */
SolutionTrajectory solve_hjbz(const HamiltonianSpec& H, const TerminalSpec& G,
                              const SolverConfig& cfg);

/** The dissipation coefficient the solve would use: the configured theta, or
 *  the probed slope bound.  Lets callers share one theta across solves. */
double probe_theta(const HamiltonianSpec& H, const SolverConfig& cfg);

/**
 * Pointwise equation residual at time t from the two snapshots bracketing t:
 * centered time difference, spectral generator, centered spatial gradients in
 * the Hamiltonian.
 */
GridFn residual(const SolutionTrajectory& traj, double t, const HamiltonianSpec& H);

struct DerivativeNorms {
    std::vector<double> block_max; // per order k = 1..k_max: max_n sup |D^k_{x^n} V|
    std::vector<double> scaled;    // N times the above
};

/** Frobenius sup norms of per-block derivative tensors via periodic stencils. */
DerivativeNorms derivative_sup_norms(const SolutionTrajectory& traj, double t, int k_max);

/** Feedback policy: optimal actions per particle from interpolated gradients. */
struct Policy {
    int action_dim = 1;
    int n_particles = 1;
    /** Writes n_particles * action_dim action values for the given state. */
    std::function<void(double t, std::span<const double> state, std::span<double> out)> actions;
};

Policy extract_policy(const SolutionTrajectory& traj, const HamiltonianSpec& H);

} // namespace mfhjb

#endif
