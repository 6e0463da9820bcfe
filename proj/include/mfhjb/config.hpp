#ifndef MFHJB_CONFIG_HPP
#define MFHJB_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mfhjb/registry.hpp"
#include "mfhjb/solver.hpp"

namespace mfhjb {

/**
 * Flat key=value configuration with [section] headers.  Grammar: lines are
 * `[section]`, `key=value`, blank, or `#` comments; values are scalars or
 * comma-separated lists.  Unknown sections or keys fail parsing (fail-fast).
 *
 * Sections and keys:
 *   [problem] name, N, M, T, a0, has_z, c_g, actions, game_actions, colehopf_amp
 *   [solver]  dt, cfl_safety, theta, p_clip, diffusion (resolvent|semigroup),
 *             snapshot_times (comma list)
 *   [metrics] sobolev_k, sobolev_xi, cneg_modes
 *   [lift]    method (exact|monte-carlo), samples, convergence_N (comma list),
 *             lip_pairs, lip_atoms
 *   [verify]  paths, dt_sim, t0, x0 (comma list, N*d entries)
 *   [output]  dir, write_grids
 *   [run]     seed, budget_bytes, threads
 */
struct ExperimentConfig {
    // [problem]
    std::string problem = "quadratic-control";
    ProblemParams params;
    int N = 2;
    int M = 32;
    double T = -1.0;  // negative: use the problem default
    double a0 = -1.0; // negative: use the problem default
    bool has_z = false;

    // [solver]
    double dt = 0.0;
    double cfl_safety = 0.9;
    double theta = 0.0;
    double p_clip = 0.0;
    std::string diffusion = "resolvent";
    std::vector<double> snapshot_times;

    // [metrics]
    int sobolev_k = 3;
    int sobolev_xi = 16;
    int cneg_modes = 8;

    // [lift]
    std::string lift_method = "exact";
    int lift_samples = 100000;
    std::vector<int> convergence_Ns = {1, 2, 3, 4};
    int lip_pairs = 24;
    int lip_atoms = 6;

    // [verify]
    int paths = 10000;
    double dt_sim = 1e-3;
    double t0 = 0.0;
    std::vector<double> x0;

    // [output]
    std::string out_dir = ".";
    bool write_grids = false;

    // [run] (command-line flags override)
    std::uint64_t seed = 0;
    std::uint64_t budget_bytes = default_memory_budget;
    int threads = 0;

    /** Throws config_error naming the violated constraint. */
    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);

/** Canonical serialized form: every key in a fixed order, used for echo and
 *  hashing so identical configurations hash identically. */
std::string config_echo(const ExperimentConfig& cfg);

/** Solver parameters assembled from the experiment config and the problem's
 *  declared constants (horizon, noise level, gradient bound). */
SolverConfig build_solver_config(const ExperimentConfig& cfg, const ProblemDef& problem);

} // namespace mfhjb

#endif
