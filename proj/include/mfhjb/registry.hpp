#ifndef MFHJB_REGISTRY_HPP
#define MFHJB_REGISTRY_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfhjb/hamiltonian.hpp"
#include "mfhjb/simulate.hpp"
#include "mfhjb/solver.hpp"

namespace mfhjb {

/** Tunable coefficients of the built-in problems. */
struct ProblemParams {
    double c_g = 0.25;        // terminal cosine amplitude (control / game problems)
    int actions = 201;        // action grid size for control problems
    int game_actions = 41;    // per-player action grid size for games
    double colehopf_amp = 0.2; // terminal amplitude of the log-transform problem
};

/**
 * A named model: Hamiltonian and terminal data with declared structure
 * constants, plus whatever extra structure the problem supports (simulation
 * callbacks for control problems, upper/lower Hamiltonians for games, a
 * closed-form solution grid when one exists).
 */
struct ProblemDef {
    std::string name;
    int d = 1;
    double default_T = 0.1;
    double default_a0 = 0.0;
    double c_h = 0.0;   // declared Hamiltonian structure constant
    double c_g_lip = 0.0; // declared d1-Lipschitz constant of the terminal cost

    HamiltonianSpec hamiltonian; // for games: the minus (lower) side
    TerminalSpec terminal;
    std::optional<IsaacsPair> game;

    bool has_control = false;
    HamiltonianSpec anti; // same actions, argmax picks the worst action (control only)
    SimDrift sim_drift;
    SimCost sim_cost;
    GameDrift game_drift;
    GameCost game_cost;

    /** Exact solution sampled on the config grid at time t; null when unknown. */
    std::function<GridFn(const SolverConfig&, double)> oracle;

    /** Gradient bound e^{2 c_h T} c_g_lip propagated from the declared constants. */
    double r_star(double horizon) const;
};

ProblemDef make_problem(const std::string& name, const ProblemParams& params = {});

std::vector<std::string> problem_names();

/** Solver configuration preloaded with the problem's horizon, noise level,
 *  and gradient bound. */
SolverConfig default_solver_config(const ProblemDef& problem, int N, int M);

} // namespace mfhjb

#endif
