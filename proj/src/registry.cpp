#include "mfhjb/registry.hpp"

#include <cmath>

#include "mfhjb/errors.hpp"
#include "mfhjb/numeric.hpp"

namespace mfhjb {

double ProblemDef::r_star(double horizon) const {
    return std::exp(2.0 * c_h * horizon) * c_g_lip;
}

namespace {

/** Terminal cost c * integral of cos(2 pi x_1) against the measure. */
TerminalSpec cosine_terminal(double c) {
    TerminalSpec G;
    G.lip_d1 = two_pi * std::abs(c);
    G.value = [c](const EmpiricalMeasure& m) {
        double s = 0.0;
        for (int i = 0; i < m.size(); ++i) s += m.w[static_cast<std::size_t>(i)] * std::cos(two_pi * m.atom(i)[0]);
        return c * s;
    };
    return G;
}

ProblemDef quadratic_control(const ProblemParams& p) {
    ProblemDef def;
    def.name = "quadratic-control";
    def.d = 1;
    def.default_T = 0.1;
    def.default_a0 = 1.0;
    def.c_h = 1.0;
    def.c_g_lip = two_pi * p.c_g;
    def.terminal = cosine_terminal(p.c_g);
    def.has_control = true;

    const auto drift = [](std::span<const double>, std::span<const double> a,
                          const EmpiricalMeasure&, std::span<double> out) { out[0] = a[0]; };
    const auto cost = [](std::span<const double>, std::span<const double> a,
                         const EmpiricalMeasure&) { return 0.5 * a[0] * a[0]; };
    const ActionGrid grid = ActionGrid::linspace(-1.0, 1.0, p.actions);
    def.hamiltonian = control_hamiltonian(1, drift, cost, grid, false, false, def.c_h);

    // same action grid, argmax picks the cost-maximizing action instead
    const auto anti_drift = [](std::span<const double>, std::span<const double> a,
                               const EmpiricalMeasure&, std::span<double> out) { out[0] = -a[0]; };
    const auto anti_cost = [](std::span<const double>, std::span<const double> a,
                              const EmpiricalMeasure&) { return -0.5 * a[0] * a[0]; };
    def.anti = control_hamiltonian(1, anti_drift, anti_cost, grid, false, false, def.c_h);

    def.sim_drift = drift;
    def.sim_cost = cost;
    return def;
}

ProblemDef heat_linear_g(const ProblemParams&) {
    ProblemDef def;
    def.name = "heat-linear-G";
    def.d = 1; // any d works; the terminal reads the first coordinate
    def.default_T = 0.1;
    def.default_a0 = 0.0;
    def.c_h = 0.0;
    def.c_g_lip = two_pi;
    def.terminal = cosine_terminal(1.0);

    def.hamiltonian.d = def.d;
    def.hamiltonian.evaluate = [](std::span<const double>, std::span<const double>,
                                  const EmpiricalMeasure&) { return 0.0; };
    def.hamiltonian.lip_structure = 0.0;

    def.sim_drift = [](std::span<const double>, std::span<const double>, const EmpiricalMeasure&,
                       std::span<double> out) {
        for (double& o : out) o = 0.0;
    };
    def.sim_cost = [](std::span<const double>, std::span<const double>,
                      const EmpiricalMeasure&) { return 0.0; };

    // each cosine block decays by the diffusion symbol 4 pi^2 (1 + a0)
    def.oracle = [](const SolverConfig& cfg, double t) {
        const GridSpec& spec = cfg.grid;
        GridFn out(spec);
        const double decay = std::exp(-pi_sq4 * (1.0 + cfg.a0) * (cfg.T - t));
        std::vector<double> pt(static_cast<std::size_t>(spec.axes()));
        for (std::size_t j = 0; j < out.v.size(); ++j) {
            node_coords(spec, j, pt);
            const double z = spec.has_z ? pt[0] : 0.0;
            double s = 0.0;
            const std::size_t off = static_cast<std::size_t>(spec.z_axis_offset());
            for (int i = 0; i < spec.N; ++i)
                s += std::cos(two_pi * (pt[off + static_cast<std::size_t>(i) * spec.d] + z));
            out.v[j] = decay * s / spec.N;
        }
        return out;
    };
    return def;
}

ProblemDef colehopf(const ProblemParams& p) {
    ProblemDef def;
    def.name = "colehopf";
    def.d = 1;
    def.default_T = 0.1;
    def.default_a0 = 0.0;
    def.c_h = 2.0;
    const double amp = p.colehopf_amp;
    def.c_g_lip = two_pi * amp;
    def.terminal = cosine_terminal(amp);

    def.hamiltonian.d = 1;
    def.hamiltonian.lip_structure = def.c_h;
    def.hamiltonian.evaluate = [](std::span<const double>, std::span<const double> pp,
                                  const EmpiricalMeasure&) { return pp[0] * pp[0]; };

    // log transform: W = exp(-V) satisfies the backward heat equation, so
    // V(t) = -log of the heat convolution of exp(-g) at variance 2(T-t)
    def.oracle = [amp](const SolverConfig& cfg, double t) {
        const GridSpec& spec = cfg.grid;
        if (spec.d != 1 || spec.N != 1 || spec.has_z || cfg.a0 != 0.0)
            throw unsupported_error("colehopf oracle: defined for d=1, N=1, a0=0");
        const int M = spec.M;
        const int mult = std::max(1, (256 + M - 1) / M);
        const int Mf = M * mult;
        const GridSpec fine{1, 1, Mf, false};
        GridFn w0(fine);
        for (int j = 0; j < Mf; ++j)
            w0.v[static_cast<std::size_t>(j)] =
                std::exp(-amp * std::cos(two_pi * static_cast<double>(j) / Mf));
        const GridFn w = heat_convolve(w0, 2.0 * (cfg.T - t));
        GridFn out(spec);
        for (int j = 0; j < M; ++j)
            out.v[static_cast<std::size_t>(j)] =
                -std::log(w.v[static_cast<std::size_t>(j) * mult]);
        return out;
    };
    return def;
}

ProblemDef separated_game(const ProblemParams& p) {
    ProblemDef def;
    def.name = "separated-game";
    def.d = 1;
    def.default_T = 0.1;
    def.default_a0 = 0.0;
    def.c_h = 2.0; // |combined drift| <= 2
    def.c_g_lip = two_pi * p.c_g;
    def.terminal = cosine_terminal(p.c_g);

    // separable objective: the minimizing player sees a^2 - a p, the
    // maximizing player -b^2/2 - b p, so both optimization orders agree
    const auto drift = [](std::span<const double>, std::span<const double> a,
                          std::span<const double> b, const EmpiricalMeasure&,
                          std::span<double> out) { out[0] = a[0] + b[0]; };
    const auto cost = [](std::span<const double>, std::span<const double> a,
                         std::span<const double> b, const EmpiricalMeasure&) {
        return -a[0] * a[0] + 0.5 * b[0] * b[0];
    };
    const ActionGrid A = ActionGrid::linspace(-1.0, 1.0, p.game_actions);
    def.game = isaacs_pair(1, drift, cost, A, A, false, false, def.c_h);
    def.hamiltonian = def.game->minus;
    def.game_drift = drift;
    def.game_cost = cost;
    return def;
}

ProblemDef nonisaacs_game(const ProblemParams& p) {
    ProblemDef def;
    def.name = "nonisaacs-game";
    def.d = 1;
    def.default_T = 0.1;
    def.default_a0 = 0.0;
    def.c_h = 1.0; // |combined drift| <= 1
    def.c_g_lip = two_pi * p.c_g;
    def.terminal = cosine_terminal(p.c_g);

    // bilinear payoff on {-1,1}^2 has no pure saddle: the optimization
    // orders differ wherever |p| < 2
    const auto drift = [](std::span<const double>, std::span<const double> a,
                          std::span<const double> b, const EmpiricalMeasure&,
                          std::span<double> out) { out[0] = 0.5 * (a[0] + b[0]); };
    const auto cost = [](std::span<const double>, std::span<const double> a,
                         std::span<const double> b, const EmpiricalMeasure&) {
        return a[0] * b[0];
    };
    ActionGrid two;
    two.dim = 1;
    two.points = {-1.0, 1.0};
    def.game = isaacs_pair(1, drift, cost, two, two, false, false, def.c_h);
    def.hamiltonian = def.game->minus;
    def.game_drift = drift;
    def.game_cost = cost;
    return def;
}

} // namespace

ProblemDef make_problem(const std::string& name, const ProblemParams& params) {
    if (name == "quadratic-control") return quadratic_control(params);
    if (name == "heat-linear-G") return heat_linear_g(params);
    if (name == "colehopf") return colehopf(params);
    if (name == "separated-game") return separated_game(params);
    if (name == "nonisaacs-game") return nonisaacs_game(params);
    throw config_error("unknown problem: " + name +
                       " (known: quadratic-control, heat-linear-G, colehopf, separated-game, "
                       "nonisaacs-game)");
}

std::vector<std::string> problem_names() {
    return {"quadratic-control", "heat-linear-G", "colehopf", "separated-game", "nonisaacs-game"};
}

SolverConfig default_solver_config(const ProblemDef& problem, int N, int M) {
    SolverConfig cfg;
    cfg.grid = GridSpec{problem.d, N, M, false};
    cfg.T = problem.default_T;
    cfg.a0 = problem.default_a0;
    cfg.r_star = problem.r_star(cfg.T);
    return cfg;
}

} // namespace mfhjb
