#include "mfhjb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

#include "mfhjb/numeric.hpp"

namespace mfhjb {

void SolverConfig::validate() const {
    try {
        grid.validate();
    } catch (const invalid_input_error& e) {
        throw config_error(e.what());
    }
    if (!(T > 0.0) || !std::isfinite(T)) throw config_error("solver: T must be positive");
    if (!(a0 >= 0.0) || !std::isfinite(a0)) throw config_error("solver: a0 must be >= 0");
    if (dt < 0.0) throw config_error("solver: dt must be >= 0");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw config_error("solver: cfl_safety must lie in (0, 1]");
    if (theta < 0.0) throw config_error("solver: theta must be >= 0");
    if (p_clip < 0.0) throw config_error("solver: p_clip must be >= 0");
    if (p_clip == 0.0 && r_star <= 0.0)
        throw config_error("solver: either p_clip or r_star must be positive");
    if (budget_bytes == 0) throw config_error("solver: zero memory budget");
    for (double t : snapshot_times)
        if (t < -1e-12 || t > T + 1e-12)
            throw config_error("solver: snapshot time outside [0, T]");
}

GridFn terminal_grid(const TerminalSpec& G, const GridSpec& spec) {
    GridFn out(spec);
    const std::size_t n = out.size();
    const int d = spec.d, N = spec.N;
    const int A = spec.axes();
    std::vector<double> coords(A);
    EmpiricalMeasure m;
    m.d = d;
    m.xs.assign(static_cast<std::size_t>(N) * d, 0.0);
    m.w.assign(N, 1.0 / N);
    for (std::size_t flat = 0; flat < n; ++flat) {
        node_coords(spec, flat, coords);
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < d; ++c) {
                double v = coords[spec.particle_axis(i, c)];
                if (spec.has_z) v = wrap1(v + coords[c]);
                m.xs[static_cast<std::size_t>(i) * d + c] = v;
            }
        out.v[flat] = G.value(m);
    }
    return out;
}

namespace {

/** 1.1 times the largest probed slope |dH/dp_c| over momenta up to p_clip. */
double auto_theta(const HamiltonianSpec& H, int N, double p_clip, std::uint64_t seed) {
    const int d = H.d;
    Rng rng = Rng::stream(seed, {0x74686574ULL});
    const double h = 1e-4 * std::max(1.0, p_clip);
    double worst = 0.0;
    std::vector<double> x(d), p(d), pp(d), pm(d);
    for (int probe = 0; probe < 256; ++probe) {
        for (double& c : x) c = rng.uniform01();
        double nrm = 0.0;
        for (double& c : p) { c = rng.uniform(-1.0, 1.0); nrm += c * c; }
        nrm = std::sqrt(nrm);
        const double r = p_clip * std::pow(rng.uniform01(), 1.0 / d);
        if (nrm > 0.0)
            for (double& c : p) c *= r / nrm;
        std::vector<double> coords(static_cast<std::size_t>(N) * d);
        for (double& c : coords) c = rng.uniform01();
        const EmpiricalMeasure m = EmpiricalMeasure::uniform(d, std::move(coords));
        for (int c = 0; c < d; ++c) {
            pp.assign(p.begin(), p.end());
            pm.assign(p.begin(), p.end());
            pp[c] += h;
            pm[c] -= h;
            const double slope = (H.evaluate(x, pp, m) - H.evaluate(x, pm, m)) / (2.0 * h);
            worst = std::max(worst, std::fabs(slope));
        }
    }
    return 1.1 * worst;
}

struct StepPlan {
    double dt = 0.0;
    int n_steps = 0;
    double theta = 0.0;
    double p_clip = 0.0;
};

StepPlan plan_steps(const HamiltonianSpec& H, const SolverConfig& cfg) {
    StepPlan plan;
    plan.p_clip = cfg.p_clip > 0.0 ? cfg.p_clip : 1.2 * cfg.r_star;
    if (cfg.r_star > 0.0 && plan.p_clip < cfg.r_star)
        std::fprintf(stderr, "warning: p_clip %.6g below declared gradient bound %.6g\n",
                     plan.p_clip, cfg.r_star);
    plan.theta = cfg.theta > 0.0 ? cfg.theta
                                 : auto_theta(H, cfg.grid.N, plan.p_clip, cfg.seed);

    // Monotonicity of the explicit update requires the dissipation of every
    // particle axis to fit in one step: dt * theta * (d N) / dx <= 1/2.
    const double axes_explicit = static_cast<double>(cfg.grid.d) * cfg.grid.N;
    const double dx = cfg.grid.dx();
    double dt = cfg.dt;
    if (dt == 0.0) {
        if (plan.theta * axes_explicit > 1e-14)
            dt = 0.5 * cfg.cfl_safety * dx / (plan.theta * axes_explicit);
        else
            dt = cfg.T / 16.0;
    }
    plan.n_steps = std::max(1, static_cast<int>(std::ceil(cfg.T / dt - 1e-12)));
    plan.dt = cfg.T / plan.n_steps;
    if (plan.dt * plan.theta * axes_explicit / dx > 0.5 * (1.0 + 1e-9))
        throw config_error("solver: CFL violated: dt*theta*d*N/dx must be <= 1/2");
    return plan;
}

/** Euclidean clip onto the ball of radius r. */
inline void clip_ball(std::span<double> p, double r) {
    double sq = 0.0;
    for (double c : p) sq += c * c;
    if (sq > r * r) {
        const double s = r / std::sqrt(sq);
        for (double& c : p) c *= s;
    }
}

class ExplicitUpdater {
public:
    ExplicitUpdater(const HamiltonianSpec& H, const GridSpec& spec, double theta,
                    double p_clip)
        : H_(H), spec_(spec), theta_(theta), p_clip_(p_clip),
          strides_(axis_strides(spec)) {
        d_ = spec.d;
        N_ = spec.N;
        scratch_.d = d_;
        scratch_.xs.assign(static_cast<std::size_t>(N_) * d_, 0.0);
        scratch_.w.assign(N_, 1.0 / N_);
    }

    /** out = V - dt * (mean_i H_i - (theta/2) sum_axes (p+ - p-)); returns max |out-V|. */
    double apply(const GridFn& V, double dt, GridFn& out) {
        const std::size_t n = V.size();
        const int A = spec_.axes();
        const int M = spec_.M;
        const double dx = spec_.dx();
        const double inv_dx = 1.0 / dx;
        std::vector<int> idx(A, 0);
        std::vector<double> coords(A, 0.0);
        std::vector<double> pv(d_);
        const bool has_z = spec_.has_z;
        const double invN = 1.0 / static_cast<double>(N_);
        const double scaleN = static_cast<double>(N_);
        double max_update = 0.0;

        for (std::size_t flat = 0; flat < n; ++flat) {
            const double v0 = V.v[flat];
            double hsum = 0.0, lf = 0.0;
            for (int i = 0; i < N_; ++i) {
                for (int c = 0; c < d_; ++c) {
                    const int axis = spec_.particle_axis(i, c);
                    const std::size_t s = strides_[axis];
                    const int ia = idx[axis];
                    const std::size_t up = ia + 1 < M ? flat + s : flat - s * (M - 1);
                    const std::size_t dn = ia > 0 ? flat - s : flat + s * (M - 1);
                    const double pp = (V.v[up] - v0) * inv_dx;
                    const double pm = (v0 - V.v[dn]) * inv_dx;
                    lf += pp - pm;
                    pv[c] = scaleN * 0.5 * (pp + pm);
                }
                clip_ball(pv, p_clip_);
                double xi[8];
                for (int c = 0; c < d_; ++c) {
                    double x = coords[spec_.particle_axis(i, c)];
                    if (has_z) x = wrap1(x + coords[c]);
                    xi[c] = x;
                }
                const EmpiricalMeasure& m =
                    H_.depends_on_m ? fill_measure(coords) : detail::dummy_measure(d_);
                hsum += H_.evaluate(std::span<const double>(xi, d_), pv, m);
            }
            const double upd = dt * (hsum * invN - 0.5 * theta_ * lf);
            out.v[flat] = v0 - upd;
            max_update = std::max(max_update, std::fabs(upd));

            // odometer increment of idx/coords
            for (int a = A - 1; a >= 0; --a) {
                if (++idx[a] < M) {
                    coords[a] = idx[a] * dx;
                    break;
                }
                idx[a] = 0;
                coords[a] = 0.0;
            }
        }
        return max_update;
    }

private:
    const EmpiricalMeasure& fill_measure(std::span<const double> coords) {
        for (int i = 0; i < N_; ++i)
            for (int c = 0; c < d_; ++c) {
                double v = coords[spec_.particle_axis(i, c)];
                if (spec_.has_z) v = wrap1(v + coords[c]);
                scratch_.xs[static_cast<std::size_t>(i) * d_ + c] = v;
            }
        return scratch_;
    }

    const HamiltonianSpec& H_;
    GridSpec spec_;
    double theta_, p_clip_;
    std::vector<std::size_t> strides_;
    int d_ = 1, N_ = 1;
    EmpiricalMeasure scratch_;
};

/** Max over blocks of N * sup of the Euclidean centered-difference gradient. */
double lipschitz_estimate(const GridFn& V) {
    const GridSpec& spec = V.spec;
    std::vector<GridFn> grads;
    double worst = 0.0;
    for (int i = 0; i < spec.N; ++i) {
        grads.clear();
        for (int c = 0; c < spec.d; ++c)
            grads.push_back(periodic_diff(V, spec.particle_axis(i, c), DiffMode::Centered));
        for (std::size_t f = 0; f < V.size(); ++f) {
            double sq = 0.0;
            for (const GridFn& g : grads) sq += g.v[f] * g.v[f];
            worst = std::max(worst, sq);
        }
    }
    return spec.N * std::sqrt(worst);
}

std::vector<double> snapshot_or_default(const SolverConfig& cfg) {
    if (!cfg.snapshot_times.empty()) return cfg.snapshot_times;
    return {0.0, cfg.T};
}

SolutionTrajectory solve_impl(const HamiltonianSpec& H, const TerminalSpec& G,
                              const SolverConfig& cfg) {
    cfg.validate();
    if (H.d != cfg.grid.d)
        throw config_error("solver: Hamiltonian dimension differs from grid");
    check_memory_budget(cfg.grid, cfg.budget_bytes);
    const StepPlan plan = plan_steps(H, cfg);

    SolutionTrajectory traj;
    traj.config = cfg;
    traj.dt_eff = plan.dt;
    traj.n_steps = plan.n_steps;
    traj.theta_used = plan.theta;
    traj.p_clip_used = plan.p_clip;

    // Requested snapshot times snap to the nearest step index; T is always kept.
    std::map<int, double> snap_steps;
    snap_steps[0] = cfg.T;
    for (double t : snapshot_or_default(cfg)) {
        int j = static_cast<int>(std::llround((cfg.T - t) / plan.dt));
        j = std::clamp(j, 0, plan.n_steps);
        snap_steps.emplace(j, cfg.T - j * plan.dt);
    }

    GridFn V = terminal_grid(G, cfg.grid);
    if (!all_finite(V.v)) throw invalid_input_error("solver: terminal data not finite");
    GridFn U(cfg.grid);

    SpectralWorkspace ws(cfg.grid);
    std::vector<double> mult;
    ws.build_multiplier(mult, [&](std::span<const int> freqs) {
        const double s = diffusion_symbol(cfg.grid, freqs, cfg.a0);
        return cfg.diffusion == StepKind::Resolvent ? 1.0 / (1.0 + plan.dt * s)
                                                    : std::exp(-plan.dt * s);
    });

    ExplicitUpdater updater(H, cfg.grid, plan.theta, plan.p_clip);

    auto record = [&](int step, double t) {
        Snapshot s;
        s.t = t;
        s.values = V;
        s.lipschitz = lipschitz_estimate(V);
        traj.snapshots.push_back(std::move(s));
        (void)step;
    };
    if (snap_steps.count(0)) record(0, cfg.T);

    for (int j = 1; j <= plan.n_steps; ++j) {
        const double max_upd = updater.apply(V, plan.dt, U);
        ws.apply(U, mult);
        V.v.swap(U.v);
        const double t = cfg.T - j * plan.dt;
        traj.diagnostics.push_back({t, max_upd});
        if (!all_finite(V.v))
            throw divergence_error("solver: non-finite values at step " + std::to_string(j));
        auto it = snap_steps.find(j);
        if (it != snap_steps.end()) record(j, it->second);
    }
    return traj;
}

} // namespace

SolutionTrajectory solve_hjbn(const HamiltonianSpec& H, const TerminalSpec& G,
                              const SolverConfig& cfg) {
    if (cfg.grid.has_z)
        throw config_error("solve_hjbn: grid carries a translation block; use solve_hjbz");
    return solve_impl(H, G, cfg);
}

double probe_theta(const HamiltonianSpec& H, const SolverConfig& cfg) {
    if (cfg.theta > 0.0) return cfg.theta;
    const double p_clip = cfg.p_clip > 0.0 ? cfg.p_clip : 1.2 * cfg.r_star;
    return auto_theta(H, cfg.grid.N, p_clip, cfg.seed);
}

SolutionTrajectory solve_hjbz(const HamiltonianSpec& H, const TerminalSpec& G,
                              const SolverConfig& cfg) {
    if (!cfg.grid.has_z)
        throw config_error("solve_hjbz: grid lacks the translation block");
    return solve_impl(H, G, cfg);
}

const Snapshot& SolutionTrajectory::at_time(double t, double tol) const {
    for (const Snapshot& s : snapshots)
        if (std::fabs(s.t - t) <= tol) return s;
    throw invalid_input_error("trajectory: no snapshot at t = " + std::to_string(t));
}

GridFn residual(const SolutionTrajectory& traj, double t, const HamiltonianSpec& H) {
    const Snapshot* lo = nullptr;
    const Snapshot* hi = nullptr;
    for (const Snapshot& s : traj.snapshots) {
        if (s.t > t + 1e-12 && (!hi || s.t < hi->t)) hi = &s;
        if (s.t < t - 1e-12 && (!lo || s.t > lo->t)) lo = &s;
    }
    if (!lo || !hi)
        throw invalid_input_error("residual: need snapshots on both sides of t");

    const GridSpec& spec = traj.config.grid;
    GridFn mid(spec);
    for (std::size_t i = 0; i < mid.size(); ++i)
        mid.v[i] = 0.5 * (lo->values.v[i] + hi->values.v[i]);
    const double inv_dt = 1.0 / (hi->t - lo->t);

    GridFn out = apply_generator(mid, traj.config.a0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double time_deriv = (hi->values.v[i] - lo->values.v[i]) * inv_dt;
        out.v[i] = -time_deriv - out.v[i];
    }

    // + (1/N) sum_i H(x^i, N grad_i V, m), centered differences, no clipping.
    const int d = spec.d, N = spec.N;
    std::vector<GridFn> grads;
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < d; ++c)
            grads.push_back(periodic_diff(mid, spec.particle_axis(i, c), DiffMode::Centered));

    const int A = spec.axes();
    std::vector<double> coords(A);
    std::vector<double> pv(d);
    EmpiricalMeasure scratch;
    scratch.d = d;
    scratch.xs.assign(static_cast<std::size_t>(N) * d, 0.0);
    scratch.w.assign(N, 1.0 / N);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        node_coords(spec, flat, coords);
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < d; ++c) {
                double v = coords[spec.particle_axis(i, c)];
                if (spec.has_z) v = wrap1(v + coords[c]);
                scratch.xs[static_cast<std::size_t>(i) * d + c] = v;
            }
        double hsum = 0.0;
        for (int i = 0; i < N; ++i) {
            double xi[8];
            for (int c = 0; c < d; ++c) {
                pv[c] = N * grads[static_cast<std::size_t>(i) * d + c].v[flat];
                xi[c] = scratch.xs[static_cast<std::size_t>(i) * d + c];
            }
            hsum += H.evaluate(std::span<const double>(xi, d), pv, scratch);
        }
        out.v[flat] += hsum / N;
    }
    return out;
}

namespace {

/** Apply the 1-D stencil of the given derivative order along one axis. */
GridFn axis_derivative(const GridFn& f, int axis, int order) {
    GridFn g = f;
    int second = order / 2, first = order % 2;
    for (int q = 0; q < second; ++q) g = periodic_diff(g, axis, DiffMode::Second);
    if (first) g = periodic_diff(g, axis, DiffMode::Centered);
    return g;
}

void enumerate_multi(int d, int k, std::vector<int>& cur, int pos,
                     const std::function<void(const std::vector<int>&)>& emit) {
    if (pos == d - 1) {
        cur[pos] = k;
        emit(cur);
        return;
    }
    for (int j = k; j >= 0; --j) {
        cur[pos] = j;
        enumerate_multi(d, k - j, cur, pos + 1, emit);
    }
}

double multinomial(int k, const std::vector<int>& j) {
    double v = 1.0;
    int left = k;
    for (int jc : j) {
        for (int step = 1; step <= jc; ++step) {
            v *= static_cast<double>(left);
            left -= 1;
            v /= static_cast<double>(step);
        }
    }
    return v;
}

} // namespace

DerivativeNorms derivative_sup_norms(const SolutionTrajectory& traj, double t, int k_max) {
    if (k_max < 1) throw invalid_input_error("derivative norms: k_max must be >= 1");
    const Snapshot& snap = traj.at_time(t);
    const GridSpec& spec = traj.config.grid;
    const int radius_needed = (k_max + 1) / 2 + 1;
    if (radius_needed > spec.M / 2)
        throw invalid_input_error("derivative norms: stencil wider than half the grid");

    DerivativeNorms out;
    out.block_max.assign(k_max, 0.0);
    out.scaled.assign(k_max, 0.0);
    std::vector<double> sq(snap.values.size());
    for (int k = 1; k <= k_max; ++k) {
        double worst = 0.0;
        for (int i = 0; i < spec.N; ++i) {
            std::fill(sq.begin(), sq.end(), 0.0);
            std::vector<int> cur(spec.d, 0);
            enumerate_multi(spec.d, k, cur, 0, [&](const std::vector<int>& j) {
                GridFn g = snap.values;
                for (int c = 0; c < spec.d; ++c)
                    if (j[c] > 0) g = axis_derivative(g, spec.particle_axis(i, c), j[c]);
                const double coef = multinomial(k, j);
                for (std::size_t f = 0; f < sq.size(); ++f) sq[f] += coef * g.v[f] * g.v[f];
            });
            for (double s : sq) worst = std::max(worst, s);
        }
        out.block_max[k - 1] = std::sqrt(worst);
        out.scaled[k - 1] = spec.N * out.block_max[k - 1];
    }
    return out;
}

Policy extract_policy(const SolutionTrajectory& traj, const HamiltonianSpec& H) {
    if (!H.has_actions())
        throw unsupported_error("extract_policy: Hamiltonian carries no action structure");
    if (traj.config.grid.has_z)
        throw unsupported_error("extract_policy: translation-block trajectories unsupported");
    const GridSpec spec = traj.config.grid;
    const int d = spec.d, N = spec.N;
    const double p_clip = traj.p_clip_used;

    // Gradient grids per snapshot, built lazily and cached.
    struct Cache {
        std::vector<std::vector<GridFn>> grads; // per snapshot: N*d centered diffs
        std::vector<char> ready;
    };
    auto cache = std::make_shared<Cache>();
    cache->grads.resize(traj.snapshots.size());
    cache->ready.assign(traj.snapshots.size(), 0);
    auto traj_copy = std::make_shared<SolutionTrajectory>(traj);
    auto H_copy = std::make_shared<HamiltonianSpec>(H);

    Policy pol;
    pol.action_dim = H.actions.dim;
    pol.n_particles = N;
    pol.actions = [cache, traj_copy, H_copy, spec, d, N, p_clip](
                      double t, std::span<const double> state, std::span<double> out) {
        const auto& snaps = traj_copy->snapshots;
        std::size_t pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            const double gap = std::fabs(snaps[s].t - t);
            if (gap < best) { best = gap; pick = s; }
        }
        if (!cache->ready[pick]) {
            auto& gv = cache->grads[pick];
            for (int i = 0; i < N; ++i)
                for (int c = 0; c < d; ++c)
                    gv.push_back(periodic_diff(snaps[pick].values, spec.particle_axis(i, c),
                                               DiffMode::Centered));
            cache->ready[pick] = 1;
        }
        const auto& gv = cache->grads[pick];

        std::vector<double> atoms(state.begin(), state.end());
        wrap(atoms);
        EmpiricalMeasure m = EmpiricalMeasure::uniform(d, atoms);
        std::vector<double> pv(d);
        const int adim = H_copy->actions.dim;
        for (int i = 0; i < N; ++i) {
            for (int c = 0; c < d; ++c)
                pv[c] = N * interpolate(gv[static_cast<std::size_t>(i) * d + c], atoms);
            clip_ball(pv, p_clip);
            const int j = H_copy->argmax_action(m.atom(i), pv, m);
            const auto a = H_copy->actions.action(j);
            for (int c = 0; c < adim; ++c) out[static_cast<std::size_t>(i) * adim + c] = a[c];
        }
    };
    return pol;
}

} // namespace mfhjb
