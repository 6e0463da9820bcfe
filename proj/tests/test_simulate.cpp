#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "mfhjb/errors.hpp"
#include "mfhjb/registry.hpp"
#include "mfhjb/simulate.hpp"
#include "mfhjb/solver.hpp"

using namespace mfhjb;

namespace {

constexpr double pi = std::numbers::pi;

void zero_drift(std::span<const double>, std::span<const double>,
                const EmpiricalMeasure&, std::span<double> out) {
    for (double& o : out) o = 0.0;
}

double zero_cost(std::span<const double>, std::span<const double>,
                 const EmpiricalMeasure&) {
    return 0.0;
}

TerminalSpec cos_terminal() {
    return TerminalSpec{[](const EmpiricalMeasure& m) {
                            double s = 0.0;
                            for (int i = 0; i < m.size(); ++i)
                                s += m.w[std::size_t(i)] * std::cos(2.0 * pi * m.atom(i)[0]);
                            return s;
                        },
                        2.0 * pi};
}

SimConfig base_sim(int N, int paths) {
    SimConfig sim;
    sim.N = N;
    sim.d = 1;
    sim.T = 0.1;
    sim.dt_sim = 1e-3;
    sim.paths = paths;
    sim.seed = 19;
    sim.x0.assign(std::size_t(N), 0.0);
    return sim;
}

} // namespace

TEST_CASE("unit running cost integrates to the horizon exactly") {
    SimConfig sim = base_sim(2, 50);
    sim.t0 = 0.025;
    auto unit_cost = [](std::span<const double>, std::span<const double>,
                        const EmpiricalMeasure&) { return 1.0; };
    TerminalSpec zero_g{[](const EmpiricalMeasure&) { return 0.0; }, 0.0};
    CostEstimate est = simulate_cost(zero_drift, unit_cost, zero_g,
                                     constant_policy(2, {0.0}), sim);
    // Left-endpoint quadrature of 1 over [t0, T] is exact: n_steps * dt.
    CHECK(est.mean == doctest::Approx(0.075).epsilon(1e-13));
    CHECK(est.stderr_ <= 1e-15);
    CHECK(est.paths == 50);
}

TEST_CASE("pure diffusion matches the heat kernel expectation") {
    // X_T = sqrt(2) W_T (+ sqrt(2 a0) B_T): E cos(2 pi X_T) = e^{-4 pi^2 (1+a0) T}.
    for (double a0 : {0.0, 1.0}) {
        SimConfig sim = base_sim(2, 4000);
        sim.a0 = a0;
        CostEstimate est = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                         constant_policy(2, {0.0}), sim);
        const double expect = std::exp(-4.0 * pi * pi * (1.0 + a0) * sim.T);
        // Gaussian increments make Euler exact in law here; only MC error left.
        CHECK(std::fabs(est.mean - expect) <= 4.0 * est.stderr_ + 1e-4);
    }
}

TEST_CASE("simulation is deterministic in the seed") {
    SimConfig sim = base_sim(3, 200);
    sim.a0 = 0.5;
    auto drift = [](std::span<const double> x, std::span<const double> a,
                    const EmpiricalMeasure&, std::span<double> out) {
        out[0] = a[0] - 0.25 * std::sin(2.0 * pi * x[0]);
    };
    auto cost = [](std::span<const double> x, std::span<const double> a,
                   const EmpiricalMeasure&) {
        return 0.5 * a[0] * a[0] + 0.1 * std::cos(2.0 * pi * x[0]);
    };
    CostEstimate a = simulate_cost(drift, cost, cos_terminal(),
                                   constant_policy(3, {0.2}), sim);
    CostEstimate b = simulate_cost(drift, cost, cos_terminal(),
                                   constant_policy(3, {0.2}), sim);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);

    sim.seed = 20;
    CostEstimate c = simulate_cost(drift, cost, cos_terminal(),
                                   constant_policy(3, {0.2}), sim);
    CHECK(a.mean != c.mean);
}

TEST_CASE("integer shifts of the start state do not change the cost") {
    SimConfig sim = base_sim(2, 300);
    sim.x0 = {0.25, 0.75};
    CostEstimate a = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                   constant_policy(2, {0.0}), sim);
    sim.x0 = {1.25, -0.25}; // same torus points, dyadic so wrapping is exact
    CostEstimate b = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                   constant_policy(2, {0.0}), sim);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("common noise correlates particles") {
    // The block average (1/N) sum_i cos(2 pi X^i_T) averages idiosyncratic
    // noise away but not the shared Brownian motion, so its path-to-path
    // spread is far larger under common noise.
    const int N = 8, P = 3000;
    auto statistic = [&](double a0) {
        SimConfig sim = base_sim(N, P);
        sim.a0 = a0;
        sim.seed = 23;
        sim.T = 0.01;
        sim.dt_sim = 2e-4;
        return simulate_cost(zero_drift, zero_cost, cos_terminal(),
                             constant_policy(N, {0.0}), sim);
    };
    CostEstimate shared = statistic(1.0);
    CostEstimate indep = statistic(0.0);
    // Means follow the per-particle marginals exactly (Gaussian increments).
    CHECK(std::fabs(shared.mean - std::exp(-8.0 * pi * pi * 0.01)) <=
          4.0 * shared.stderr_ + 1e-4);
    CHECK(std::fabs(indep.mean - std::exp(-4.0 * pi * pi * 0.01)) <=
          4.0 * indep.stderr_ + 1e-4);
    // Standard errors expose the correlation (theory ratio ~ 2.3 here).
    CHECK(shared.stderr_ > 1.8 * indep.stderr_);
}

TEST_CASE("halving the step leaves drift-free statistics within noise") {
    SimConfig coarse = base_sim(1, 3000);
    SimConfig fine = coarse;
    fine.dt_sim = 5e-4;
    CostEstimate a = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                   constant_policy(1, {0.0}), coarse);
    CostEstimate b = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                   constant_policy(1, {0.0}), fine);
    CHECK(std::fabs(a.mean - b.mean) <= 4.0 * (a.stderr_ + b.stderr_));
}

TEST_CASE("initial law sampling draws fresh particles per path") {
    SimConfig sim = base_sim(2, 2000);
    sim.x0.clear();
    sim.m0 = MeasureAny(EmpiricalMeasure::make(1, {0.0, 0.5}, {0.5, 0.5}));
    sim.T = 0.01;
    CostEstimate est = simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                     constant_policy(2, {0.0}), sim);
    // Half the particles start at cos = 1, half at cos = -1: mean ~ 0.
    CHECK(std::fabs(est.mean) <= 4.0 * est.stderr_ + 1e-3);
    CHECK(est.stderr_ > 1e-3); // genuine cross-path randomness present
}

TEST_CASE("config and policy mismatches are rejected") {
    SimConfig sim = base_sim(2, 10);
    CHECK_THROWS_AS(simulate_cost(zero_drift, zero_cost, cos_terminal(),
                                  constant_policy(3, {0.0}), sim),
                    invalid_input_error);

    SimConfig bad = sim;
    bad.x0 = {0.1};
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = sim;
    bad.dt_sim = 0.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = sim;
    bad.paths = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = sim;
    bad.T = sim.t0 - 0.1;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = sim;
    bad.x0.clear(); // no start state and no initial law
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("exploding drift raises divergence_error") {
    SimConfig sim = base_sim(1, 5);
    auto bad_drift = [](std::span<const double>, std::span<const double>,
                        const EmpiricalMeasure&, std::span<double> out) {
        out[0] = std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(simulate_cost(bad_drift, zero_cost, cos_terminal(),
                                  constant_policy(1, {0.0}), sim),
                    divergence_error);
}

TEST_CASE("suboptimality_probe flags only true violations") {
    // Reference deliberately higher than the attainable cost: margins of real
    // policies then sit below -(4 sigma + tol) and must be flagged.
    SimConfig sim = base_sim(1, 400);
    TerminalSpec zero_g{[](const EmpiricalMeasure&) { return 0.0; }, 0.0};
    auto cost = [](std::span<const double>, std::span<const double> a,
                   const EmpiricalMeasure&) { return 0.5 * a[0] * a[0]; };

    std::vector<NamedPolicy> alts;
    alts.push_back({"rest", constant_policy(1, {0.0})});
    alts.push_back({"push", constant_policy(1, {1.0})});

    ProbeReport ok = suboptimality_probe(zero_drift, cost, zero_g, 0.0, alts, sim, 2e-2);
    REQUIRE(ok.rows.size() == 2);
    CHECK(ok.rows[0].name == "rest");
    CHECK(ok.rows[0].mean == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(!ok.rows[0].violation);
    CHECK(ok.rows[1].mean == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(ok.rows[1].margin == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(!ok.rows[1].violation);

    // Reference above the attainable cost: the rest policy's margin -0.06
    // breaches -(4 sigma + 0.02) while the push policy's -0.01 does not.
    ProbeReport bad = suboptimality_probe(zero_drift, cost, zero_g, 0.06, alts, sim, 2e-2);
    CHECK(bad.rows[0].violation);
    CHECK(!bad.rows[1].violation);
}

TEST_CASE("probe CSV is written with the documented columns") {
    SimConfig sim = base_sim(1, 50);
    TerminalSpec zero_g{[](const EmpiricalMeasure&) { return 0.0; }, 0.0};
    std::vector<NamedPolicy> alts;
    alts.push_back({"rest", constant_policy(1, {0.0})});
    ProbeReport rep = suboptimality_probe(zero_drift, zero_cost, zero_g, 0.0, alts, sim);

    const auto path = std::filesystem::temp_directory_path() / "mfhjb_test_probe.csv";
    write_probe_csv(path.string(), rep);
    std::ifstream f(path);
    std::string header, row;
    REQUIRE(std::getline(f, header));
    CHECK(header == "policy_id,mean,stderr,margin,violation");
    REQUIRE(std::getline(f, row));
    CHECK(row.substr(0, 5) == "rest,");
    f.close();
    std::filesystem::remove(path);
}

TEST_CASE("extracted feedback beats constant policies on quadratic control") {
    ProblemDef prob = make_problem("quadratic-control");
    SolverConfig cfg = default_solver_config(prob, 2, 16);
    cfg.snapshot_times = {0.0};
    SolutionTrajectory traj = solve_hjbn(prob.hamiltonian, prob.terminal, cfg);
    Policy optimal = extract_policy(traj, prob.hamiltonian);

    SimConfig sim = base_sim(2, 3000);
    sim.a0 = cfg.a0;
    sim.T = cfg.T;
    sim.x0 = {0.25, 0.75};
    CostEstimate best = simulate_cost(prob.sim_drift, prob.sim_cost, prob.terminal,
                                      optimal, sim);
    CostEstimate fixed = simulate_cost(prob.sim_drift, prob.sim_cost, prob.terminal,
                                       constant_policy(2, {1.0}), sim);
    CHECK(fixed.mean - best.mean > 3.0 * (fixed.stderr_ + best.stderr_));

    // The simulated optimal cost matches the solved value at the start state.
    const Snapshot& s0 = traj.at_time(0.0);
    const double reference = interpolate(s0.values, std::vector<double>{0.25, 0.75});
    CHECK(std::fabs(best.mean - reference) <= 4.0 * best.stderr_ + 2e-2);
}
