#include "mfhjb/simulate.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "mfhjb/errors.hpp"
#include "mfhjb/numeric.hpp"
#include "mfhjb/rng.hpp"

namespace mfhjb {

void SimConfig::validate() const {
    if (N < 1) throw config_error("simulate: N must be at least 1");
    if (d < 1) throw config_error("simulate: d must be at least 1");
    if (a0 < 0.0) throw config_error("simulate: a0 must be nonnegative");
    if (dt_sim <= 0.0) throw config_error("simulate: dt_sim must be positive");
    if (paths < 1) throw config_error("simulate: path count must be at least 1");
    if (!(T > t0)) throw config_error("simulate: need T > t0");
    if (x0.empty() && !m0)
        throw config_error("simulate: provide a start state x0 or an initial law m0");
    if (!x0.empty() && x0.size() != static_cast<std::size_t>(N) * d)
        throw config_error("simulate: x0 must hold N*d coordinates");
}

namespace {

constexpr std::uint64_t sim_tag = 0x73696d75ULL;

struct StepGrid {
    int n_steps = 0;
    double dt = 0.0;
};

StepGrid step_grid(const SimConfig& sim) {
    StepGrid g;
    g.n_steps = static_cast<int>(std::ceil((sim.T - sim.t0) / sim.dt_sim - 1e-12));
    if (g.n_steps < 1) g.n_steps = 1;
    g.dt = (sim.T - sim.t0) / g.n_steps;
    return g;
}

/** One path of the N-particle system; actions filled by the caller through
 *  `act`, states advanced with shared common noise.  Returns the path cost. */
template <typename ActFn, typename MoveCostFn>
double run_path(const SimConfig& sim, const StepGrid& grid, const TerminalSpec& G, Rng& rng,
                const ActFn& act, const MoveCostFn& move_cost) {
    const int N = sim.N, d = sim.d;
    std::vector<double> state;
    if (!sim.x0.empty()) {
        state = sim.x0;
        wrap(state);
    } else {
        state = sample_tensor(*sim.m0, N, rng);
    }
    EmpiricalMeasure m = EmpiricalMeasure::uniform(d, state);
    std::vector<double> drift(static_cast<std::size_t>(N) * d);
    std::vector<double> common(static_cast<std::size_t>(d));
    const double sqrt_idio = std::sqrt(2.0 * grid.dt);
    const double sqrt_comm = std::sqrt(2.0 * sim.a0 * grid.dt);
    double cost = 0.0;
    for (int s = 0; s < grid.n_steps; ++s) {
        const double t = sim.t0 + s * grid.dt;
        m.xs = state; // left-endpoint measure
        act(t, state);
        cost += grid.dt * move_cost(state, m, drift);
        // the common increment is drawn first each step, then per-particle ones
        for (double& c : common) c = rng.normal();
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < d; ++c) {
                double& x = state[static_cast<std::size_t>(i) * d + c];
                x += drift[static_cast<std::size_t>(i) * d + c] * grid.dt +
                     sqrt_idio * rng.normal() + sqrt_comm * common[static_cast<std::size_t>(c)];
                x = wrap1(x);
            }
    }
    m.xs = state;
    cost += G.value(m);
    if (!std::isfinite(cost))
        throw divergence_error("simulate: non-finite path cost (check drift and policy)");
    return cost;
}

CostEstimate reduce_paths(std::vector<double>& totals) {
    const MeanStderr ms = mean_stderr(totals);
    CostEstimate est;
    est.mean = ms.mean;
    est.stderr_ = ms.stderr_;
    est.paths = static_cast<int>(totals.size());
    return est;
}

} // namespace

CostEstimate simulate_cost(const SimDrift& b, const SimCost& L, const TerminalSpec& G,
                           const Policy& policy, const SimConfig& sim) {
    sim.validate();
    if (!policy.actions) throw invalid_input_error("simulate: policy has no action map");
    if (policy.n_particles != sim.N)
        throw invalid_input_error("simulate: policy particle count does not match N");
    const StepGrid grid = step_grid(sim);
    const int N = sim.N, d = sim.d, ad = policy.action_dim;
    std::vector<double> totals(static_cast<std::size_t>(sim.paths));
    std::vector<double> actions(static_cast<std::size_t>(N) * ad);
    for (int p = 0; p < sim.paths; ++p) {
        Rng rng = Rng::stream(sim.seed, {sim_tag, static_cast<std::uint64_t>(p)});
        const auto act = [&](double t, std::span<const double> state) {
            policy.actions(t, state, actions);
        };
        const auto move_cost = [&](std::span<const double> state, const EmpiricalMeasure& m,
                                   std::vector<double>& drift) {
            double run = 0.0;
            for (int i = 0; i < N; ++i) {
                const std::span<const double> xi{state.data() + static_cast<std::size_t>(i) * d,
                                                static_cast<std::size_t>(d)};
                const std::span<const double> ai{actions.data() + static_cast<std::size_t>(i) * ad,
                                                 static_cast<std::size_t>(ad)};
                run += L(xi, ai, m);
                b(xi, ai, m,
                  std::span<double>{drift.data() + static_cast<std::size_t>(i) * d,
                                    static_cast<std::size_t>(d)});
            }
            return run / N;
        };
        totals[static_cast<std::size_t>(p)] = run_path(sim, grid, G, rng, act, move_cost);
    }
    return reduce_paths(totals);
}

CostEstimate simulate_game(const GameDrift& b, const GameCost& L, const TerminalSpec& G,
                           const Policy& policy_a, const Policy& policy_b,
                           const SimConfig& sim) {
    sim.validate();
    if (!policy_a.actions || !policy_b.actions)
        throw invalid_input_error("simulate: game policy has no action map");
    if (policy_a.n_particles != sim.N || policy_b.n_particles != sim.N)
        throw invalid_input_error("simulate: policy particle count does not match N");
    const StepGrid grid = step_grid(sim);
    const int N = sim.N, d = sim.d;
    const int pa = policy_a.action_dim, pb = policy_b.action_dim;
    std::vector<double> totals(static_cast<std::size_t>(sim.paths));
    std::vector<double> act_a(static_cast<std::size_t>(N) * pa);
    std::vector<double> act_b(static_cast<std::size_t>(N) * pb);
    for (int p = 0; p < sim.paths; ++p) {
        Rng rng = Rng::stream(sim.seed, {sim_tag, static_cast<std::uint64_t>(p)});
        const auto act = [&](double t, std::span<const double> state) {
            policy_a.actions(t, state, act_a);
            policy_b.actions(t, state, act_b);
        };
        const auto move_cost = [&](std::span<const double> state, const EmpiricalMeasure& m,
                                   std::vector<double>& drift) {
            double run = 0.0;
            for (int i = 0; i < N; ++i) {
                const std::span<const double> xi{state.data() + static_cast<std::size_t>(i) * d,
                                                static_cast<std::size_t>(d)};
                const std::span<const double> ai{act_a.data() + static_cast<std::size_t>(i) * pa,
                                                 static_cast<std::size_t>(pa)};
                const std::span<const double> bi{act_b.data() + static_cast<std::size_t>(i) * pb,
                                                 static_cast<std::size_t>(pb)};
                run += L(xi, ai, bi, m);
                b(xi, ai, bi, m,
                  std::span<double>{drift.data() + static_cast<std::size_t>(i) * d,
                                    static_cast<std::size_t>(d)});
            }
            return run / N;
        };
        totals[static_cast<std::size_t>(p)] = run_path(sim, grid, G, rng, act, move_cost);
    }
    return reduce_paths(totals);
}

ProbeReport suboptimality_probe(const SimDrift& b, const SimCost& L, const TerminalSpec& G,
                                double reference, const std::vector<NamedPolicy>& alternatives,
                                const SimConfig& sim, double tolerance) {
    ProbeReport report;
    report.reference = reference;
    report.tolerance = tolerance;
    for (const NamedPolicy& np : alternatives) {
        const CostEstimate est = simulate_cost(b, L, G, np.policy, sim);
        ProbeRow row;
        row.name = np.name;
        row.mean = est.mean;
        row.stderr_ = est.stderr_;
        row.margin = est.mean - reference;
        row.violation = row.margin < -(4.0 * est.stderr_ + tolerance);
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_probe_csv(const std::string& path, const ProbeReport& report) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    out << "policy_id,mean,stderr,margin,violation\n" << std::setprecision(17);
    for (const ProbeRow& r : report.rows)
        out << r.name << ',' << r.mean << ',' << r.stderr_ << ',' << r.margin << ','
            << (r.violation ? 1 : 0) << '\n';
    if (!out) throw invalid_input_error("write failed: " + path);
}

Policy constant_policy(int n_particles, std::vector<double> action) {
    Policy p;
    p.n_particles = n_particles;
    p.action_dim = static_cast<int>(action.size());
    p.actions = [n_particles, action = std::move(action)](double, std::span<const double>,
                                                          std::span<double> out) {
        const std::size_t ad = action.size();
        for (int i = 0; i < n_particles; ++i)
            std::copy(action.begin(), action.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * ad);
    };
    return p;
}

} // namespace mfhjb
