#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mfhjb/config.hpp"
#include "mfhjb/numeric.hpp"
#include "mfhjb/errors.hpp"
#include "mfhjb/grid_io.hpp"
#include "mfhjb/lift.hpp"
#include "mfhjb/measures.hpp"
#include "mfhjb/registry.hpp"
#include "mfhjb/report.hpp"
#include "mfhjb/simulate.hpp"
#include "mfhjb/solver.hpp"

namespace {

using namespace mfhjb;

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

struct CheckSink {
    RunReport& report;
    bool enforce = false; // --check
    bool failed = false;

    void add(const std::string& name, bool pass, double measured, double threshold,
             const std::string& note = "") {
        report.add_check(name, pass, measured, threshold, note);
        if (!pass) {
            failed = true;
            std::fprintf(stderr, "check failed: %s (measured %.6g, threshold %.6g)\n",
                         name.c_str(), measured, threshold);
        }
    }
    int exit_code() const { return enforce && failed ? 4 : 0; }
};

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

SolutionTrajectory run_solve(const ProblemDef& problem, const SolverConfig& sc) {
    return sc.grid.has_z ? solve_hjbz(problem.hamiltonian, problem.terminal, sc)
                         : solve_hjbn(problem.hamiltonian, problem.terminal, sc);
}

void dump_snapshot(const ExperimentConfig& cfg, const SolutionTrajectory& traj,
                   const Snapshot& snap, const std::string& stem) {
    write_grid_dump(out_path(cfg, stem + ".bin"), snap.values);
    std::ostringstream t, dt, th, pc;
    t.precision(17), dt.precision(17), th.precision(17), pc.precision(17);
    t << snap.t;
    dt << traj.dt_eff;
    th << traj.theta_used;
    pc << traj.p_clip_used;
    write_sidecar(out_path(cfg, stem + ".meta"),
                  {{"problem", cfg.problem},
                   {"t", t.str()},
                   {"dt_eff", dt.str()},
                   {"n_steps", std::to_string(traj.n_steps)},
                   {"theta", th.str()},
                   {"p_clip", pc.str()},
                   {"seed", std::to_string(cfg.seed)}});
}

int cmd_solve(const ExperimentConfig& cfg, bool check) {
    const ProblemDef problem = make_problem(cfg.problem, cfg.params);
    const SolverConfig sc = build_solver_config(cfg, problem);
    RunReport report("solve", cfg);
    CheckSink checks{report, check};
    Timer timer;

    const SolutionTrajectory traj = run_solve(problem, sc);
    report.add_timing("solve", timer.seconds());
    report.add_value("dt_eff", traj.dt_eff);
    report.add_value("n_steps", traj.n_steps);
    report.add_value("theta", traj.theta_used);
    report.add_value("p_clip", traj.p_clip_used);

    const Snapshot& s0 = traj.at_time(0.0);
    const auto [lo, hi] = std::minmax_element(s0.values.v.begin(), s0.values.v.end());
    report.add_value("value_min_t0", *lo);
    report.add_value("value_max_t0", *hi);
    double max_lip = 0.0;
    for (const Snapshot& s : traj.snapshots) max_lip = std::max(max_lip, s.lipschitz);
    report.add_value("max_scaled_lipschitz", max_lip);
    std::printf("solve: value range at t=0 [%.6g, %.6g], scaled Lipschitz %.6g\n", *lo, *hi,
                max_lip);

    dump_snapshot(cfg, traj, s0, "value_t0");
    if (cfg.write_grids)
        for (std::size_t i = 0; i < traj.snapshots.size(); ++i)
            dump_snapshot(cfg, traj, traj.snapshots[i], "value_snap" + std::to_string(i));

    bool finite = true;
    for (const Snapshot& s : traj.snapshots)
        finite = finite && all_finite(s.values.v);
    checks.add("finite-values", finite, finite ? 1.0 : 0.0, 1.0);
    if (sc.r_star > 0.0)
        checks.add("scaled-gradient-bound", max_lip <= 1.2 * sc.r_star * (1.0 + 1e-9), max_lip,
                   1.2 * sc.r_star, "snapshot Lipschitz vs clip radius");
    if (problem.oracle) {
        const GridFn exact = problem.oracle(sc, 0.0);
        double sup = 0.0;
        for (std::size_t j = 0; j < exact.v.size(); ++j)
            sup = std::max(sup, std::abs(exact.v[j] - s0.values.v[j]));
        report.add_value("oracle_sup_error_t0", sup);
        checks.add("oracle-sup", sup <= 5e-3, sup, 5e-3, "t=0 slice vs closed form");
    }
    report.write(out_path(cfg, "report_solve.json"));
    return checks.exit_code();
}

int cmd_convergence(const ExperimentConfig& cfg, bool check) {
    const ProblemDef problem = make_problem(cfg.problem, cfg.params);
    RunReport report("convergence", cfg);
    CheckSink checks{report, check};
    Timer timer;

    // keep the N prefix that fits the memory budget; report what was skipped
    std::vector<int> usable;
    std::string skipped;
    for (int N : cfg.convergence_Ns) {
        try {
            const GridSpec spec{problem.d, N, cfg.M, false};
            spec.validate();
            check_memory_budget(spec, cfg.budget_bytes);
            usable.push_back(N);
        } catch (const resource_error& e) {
            skipped += (skipped.empty() ? "" : "; ") + std::string(e.what());
            break;
        }
    }
    if (!skipped.empty()) report.add_value("skipped", skipped);
    if (usable.empty()) throw resource_error("convergence: no N fits the memory budget");

    ConvergenceInputs in;
    in.Ns = usable;
    const double T = cfg.T >= 0.0 ? cfg.T : problem.default_T;
    in.times = {0.0, 0.5 * T};
    in.measures = default_measure_set(problem.d, cfg.M, cfg.seed);
    in.method = cfg.lift_method == "monte-carlo" ? LiftMethod::MonteCarlo : LiftMethod::ExactTensor;
    in.mc_samples = cfg.lift_samples;
    in.seed = cfg.seed;
    in.sobolev = SobolevParams{cfg.sobolev_k, cfg.sobolev_xi};
    in.lip_pairs = cfg.lip_pairs;
    in.lip_atoms = cfg.lip_atoms;
    in.solve_for = [&](int N) {
        ExperimentConfig per = cfg;
        per.N = N;
        SolverConfig sc = build_solver_config(per, problem);
        sc.snapshot_times = {0.0, 0.5 * sc.T, sc.T};
        return run_solve(problem, sc);
    };

    const ConvergenceTable table = convergence_table(in);
    report.add_timing("table", timer.seconds());
    write_convergence_csv(out_path(cfg, "convergence.csv"), table);
    report.add_value("gaps", table.gaps);
    report.add_value("holder_ratio", table.holder_ratio);
    report.add_value("extrapolation_order", table.extrapolation_order);
    std::printf("convergence: %zu N values, %zu rows\n", table.Ns.size(), table.rows.size());
    for (std::size_t i = 0; i + 1 < table.Ns.size(); ++i)
        std::printf("  gap N=%d -> N=%d: %.6g\n", table.Ns[i], table.Ns[i + 1], table.gaps[i]);

    bool finite = true;
    for (const ConvergenceRow& r : table.rows) finite = finite && std::isfinite(r.value);
    checks.add("values-finite", finite, finite ? 1.0 : 0.0, 1.0);
    if (table.gaps.size() >= 3)
        checks.add("gap-trend", table.gaps.back() <= table.gaps.front() + 1e-12,
                   table.gaps.back(), table.gaps.front(), "last consecutive gap vs first");
    const double r_star = problem.r_star(T);
    if (r_star > 0.0) {
        double max_lip = 0.0;
        for (const ConvergenceRow& r : table.rows) max_lip = std::max(max_lip, r.d1_lip);
        checks.add("d1-lipschitz-bounded", max_lip <= 1.2 * r_star, max_lip, 1.2 * r_star);
    }
    report.write(out_path(cfg, "report_convergence.json"));
    return checks.exit_code();
}

std::vector<double> default_start_state(int N, int d) {
    std::vector<double> x0(static_cast<std::size_t>(N) * d);
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < d; ++c)
            x0[static_cast<std::size_t>(i) * d + c] = wrap1((i + 0.5) / N);
    return x0;
}

int cmd_mfc_verify(const ExperimentConfig& cfg, bool check) {
    const ProblemDef problem = make_problem(cfg.problem, cfg.params);
    if (!problem.has_control)
        throw config_error("mfc-verify: problem '" + problem.name +
                           "' exposes no control structure");
    RunReport report("mfc-verify", cfg);
    CheckSink checks{report, check};

    SolverConfig sc = build_solver_config(cfg, problem);
    if (std::find_if(sc.snapshot_times.begin(), sc.snapshot_times.end(), [&](double t) {
            return std::abs(t - cfg.t0) < 1e-12;
        }) == sc.snapshot_times.end())
        sc.snapshot_times.push_back(cfg.t0);
    Timer timer;
    const SolutionTrajectory traj = run_solve(problem, sc);
    report.add_timing("solve", timer.seconds());

    std::vector<double> x0 = cfg.x0;
    if (x0.empty()) x0 = default_start_state(cfg.N, problem.d);
    if (x0.size() != static_cast<std::size_t>(cfg.N) * problem.d)
        throw config_error("mfc-verify: x0 must hold N*d coordinates");
    const double reference = interpolate(traj.at_time(cfg.t0).values, x0);
    report.add_value("reference_value", reference);

    SimConfig sim;
    sim.N = cfg.N;
    sim.d = problem.d;
    sim.a0 = sc.a0;
    sim.t0 = cfg.t0;
    sim.T = sc.T;
    sim.x0 = x0;
    sim.dt_sim = cfg.dt_sim;
    sim.paths = cfg.paths;
    sim.seed = cfg.seed;

    Timer sim_timer;
    const Policy optimal = extract_policy(traj, problem.hamiltonian);
    const CostEstimate opt = simulate_cost(problem.sim_drift, problem.sim_cost, problem.terminal,
                                           optimal, sim);
    report.add_value("optimal_mean", opt.mean);
    report.add_value("optimal_stderr", opt.stderr_);
    const double tol = 2e-2;
    checks.add("optimal-cost-matches-value",
               std::abs(opt.mean - reference) <= 4.0 * opt.stderr_ + tol,
               std::abs(opt.mean - reference), 4.0 * opt.stderr_ + tol,
               "|simulated cost - solved value|");

    std::vector<NamedPolicy> alternatives;
    const ActionGrid& grid = problem.hamiltonian.actions;
    const int ad = grid.dim;
    if (!grid.empty()) {
        const auto first = grid.action(0);
        const auto last = grid.action(grid.count() - 1);
        alternatives.push_back({"const-lo", constant_policy(cfg.N, {first.begin(), first.end()})});
        alternatives.push_back({"const-zero", constant_policy(cfg.N, std::vector<double>(ad, 0.0))});
        alternatives.push_back({"const-hi", constant_policy(cfg.N, {last.begin(), last.end()})});
    }
    if (problem.anti.has_actions())
        alternatives.push_back({"worst-feedback", extract_policy(traj, problem.anti)});

    const ProbeReport probes = suboptimality_probe(problem.sim_drift, problem.sim_cost,
                                                   problem.terminal, reference, alternatives, sim,
                                                   tol);
    report.add_timing("simulate", sim_timer.seconds());
    write_probe_csv(out_path(cfg, "probes.csv"), probes);
    for (const ProbeRow& r : probes.rows) {
        std::printf("probe %-16s mean %.6g  stderr %.3g  margin %+.6g\n", r.name.c_str(), r.mean,
                    r.stderr_, r.margin);
        checks.add("margin-" + r.name, !r.violation, r.margin,
                   -(4.0 * r.stderr_ + tol), "cost margin over the solved value");
        if (r.name == "worst-feedback")
            checks.add("worst-strictly-suboptimal", r.margin > 4.0 * r.stderr_, r.margin,
                       4.0 * r.stderr_);
    }
    report.write(out_path(cfg, "report_mfc_verify.json"));
    return checks.exit_code();
}

int cmd_isaacs(const ExperimentConfig& cfg, bool check) {
    const ProblemDef problem = make_problem(cfg.problem, cfg.params);
    if (!problem.game)
        throw config_error("isaacs: problem '" + problem.name + "' exposes no game structure");
    RunReport report("isaacs", cfg);
    CheckSink checks{report, check};
    const IsaacsPair& game = *problem.game;

    SolverConfig sc = build_solver_config(cfg, problem);
    // one dissipation coefficient for both solves keeps them order-comparable
    sc.theta = std::max(probe_theta(game.minus, sc), probe_theta(game.plus, sc));
    report.add_value("theta_shared", sc.theta);

    // Hamiltonian ordering on random probes (the gap is a minimax inequality)
    Rng rng = Rng::stream(cfg.seed, {0x67617070ULL});
    const double radius = std::max(2.0, 1.2 * sc.r_star);
    double max_gap = 0.0, min_gap = 0.0;
    std::vector<double> x(static_cast<std::size_t>(problem.d));
    std::vector<double> p(static_cast<std::size_t>(problem.d));
    for (int probe = 0; probe < 200; ++probe) {
        for (double& c : x) c = rng.uniform01();
        for (double& c : p) c = rng.uniform(-radius, radius);
        std::vector<double> atoms(static_cast<std::size_t>(3) * problem.d);
        for (double& c : atoms) c = rng.uniform01();
        const EmpiricalMeasure m = EmpiricalMeasure::uniform(problem.d, std::move(atoms));
        const double g = game.gap(x, p, m);
        max_gap = std::max(max_gap, g);
        min_gap = std::min(min_gap, g);
    }
    report.add_value("hamiltonian_gap_max", max_gap);
    report.add_value("hamiltonian_gap_min", min_gap);

    Timer timer;
    const SolutionTrajectory lower = sc.grid.has_z ? solve_hjbz(game.minus, problem.terminal, sc)
                                                   : solve_hjbn(game.minus, problem.terminal, sc);
    const SolutionTrajectory upper = sc.grid.has_z ? solve_hjbz(game.plus, problem.terminal, sc)
                                                   : solve_hjbn(game.plus, problem.terminal, sc);
    report.add_timing("solves", timer.seconds());

    const GridFn& vm = lower.at_time(0.0).values;
    const GridFn& vp = upper.at_time(0.0).values;
    double sup_diff = 0.0, order_violation = -1e300;
    for (std::size_t j = 0; j < vm.v.size(); ++j) {
        sup_diff = std::max(sup_diff, std::abs(vm.v[j] - vp.v[j]));
        order_violation = std::max(order_violation, vm.v[j] - vp.v[j]);
    }
    report.add_value("value_sup_diff_t0", sup_diff);
    report.add_value("value_order_violation_t0", order_violation);
    std::printf("isaacs: sup |V- - V+| = %.6g, max (V- - V+) = %.6g, H gap in [%.6g, %.6g]\n",
                sup_diff, order_violation, min_gap, max_gap);

    if (cfg.write_grids) {
        write_grid_dump(out_path(cfg, "value_minus_t0.bin"), vm);
        write_grid_dump(out_path(cfg, "value_plus_t0.bin"), vp);
    }

    checks.add("value-ordering", order_violation <= 1e-12, order_violation, 1e-12,
               "lower value below upper value");
    checks.add("gap-nonnegative", min_gap >= 0.0, min_gap, 0.0, "minimax inequality on probes");
    if (max_gap <= 1e-10)
        checks.add("isaacs-values-agree", sup_diff <= 2e-2, sup_diff, 2e-2,
                   "upper and lower solves coincide when the Hamiltonians do");
    else
        checks.add("gap-positive", max_gap > 0.0, max_gap, 0.0,
                   "ordering is strict somewhere without the saddle condition");
    report.write(out_path(cfg, "report_isaacs.json"));
    return checks.exit_code();
}

int cmd_metrics(const std::string& file_a, const std::string& file_b, int k, int xi, int modes) {
    const EmpiricalMeasure a = read_empirical_csv(file_a);
    const EmpiricalMeasure b = read_empirical_csv(file_b);
    if (a.d != b.d) throw invalid_input_error("metrics: measures have different dimensions");
    const SobolevParams sp{k, xi};
    sp.validate(a.d);

    const double d1 = d1_auto(a, b);
    const NegSobolevNorm hk = h_neg_k_norm(coeffs_difference(a, b, xi), sp);
    const double ck = c_neg_k_gap(MeasureAny{a}, MeasureAny{b}, k, modes);

    std::printf("d1 = %.12g\n", d1);
    std::printf("h_neg_k = %.12g (truncation tail bound %.3g)\n", hk.value, hk.tail_bound);
    std::printf("c_neg_k_surrogate = %.12g\n", ck);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-particle value functions on the torus: solve, lift, verify"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::uint64_t seed = 0, budget = 0;
    int threads = -1;
    bool check = false;
    const auto opt_config = app.add_option("--config", config_path, "configuration file");
    const auto opt_out = app.add_option("--out", out_dir, "output directory");
    const auto opt_seed = app.add_option("--seed", seed, "master seed");
    const auto opt_budget = app.add_option("--budget-bytes", budget, "memory budget in bytes");
    const auto opt_threads = app.add_option("--threads", threads, "worker threads (0 = auto)");
    app.add_flag("--check", check, "enforce acceptance checks (exit 4 on failure)");

    CLI::App* c_solve = app.add_subcommand("solve", "solve the N-particle equation");
    CLI::App* c_conv = app.add_subcommand("convergence", "cross-N convergence table");
    CLI::App* c_mfc = app.add_subcommand("mfc-verify", "simulate the control problem");
    CLI::App* c_isaacs = app.add_subcommand("isaacs", "upper/lower game values");
    CLI::App* c_metrics = app.add_subcommand("metrics", "distances between measure files");
    std::string file_a, file_b;
    int k = 3, xi = 16, modes = 8;
    c_metrics->add_option("fileA", file_a, "first empirical measure (csv)")->required();
    c_metrics->add_option("fileB", file_b, "second empirical measure (csv)")->required();
    c_metrics->add_option("--k", k, "Sobolev order");
    c_metrics->add_option("--xi", xi, "frequency cut");
    c_metrics->add_option("--modes", modes, "surrogate dictionary size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg;
        if (*opt_config) cfg = parse_config_file(config_path);
        if (*opt_out) cfg.out_dir = out_dir;
        if (*opt_seed) cfg.seed = seed;
        if (*opt_budget) cfg.budget_bytes = budget;
        if (*opt_threads) cfg.threads = threads;
        cfg.validate();

        if (c_solve->parsed()) return cmd_solve(cfg, check);
        if (c_conv->parsed()) return cmd_convergence(cfg, check);
        if (c_mfc->parsed()) return cmd_mfc_verify(cfg, check);
        if (c_isaacs->parsed()) return cmd_isaacs(cfg, check);
        if (c_metrics->parsed()) return cmd_metrics(file_a, file_b, k, xi, modes);
        return 2;
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const resource_error& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return 3;
    } catch (const invalid_input_error& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
