#include "mfhjb/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace mfhjb {

ActionGrid ActionGrid::linspace(double lo, double hi, int count) {
    if (count < 1) throw invalid_input_error("action grid: count must be >= 1");
    ActionGrid g;
    g.dim = 1;
    g.points.resize(count);
    if (count == 1) {
        g.points[0] = lo;
        return g;
    }
    for (int j = 0; j < count; ++j)
        g.points[j] = lo + (hi - lo) * static_cast<double>(j) / (count - 1);
    return g;
}

// ---------------------------------------------------------------------------
// mollification

namespace {

/** Frozen randomness shared by every evaluation of the mollified data. */
struct MollifyTables {
    int d = 0, n = 0, S = 0;
    double eps = 0.0;
    std::vector<double> x_noise;    // S*d
    std::vector<double> p_noise;    // S*d
    std::vector<double> atom_noise; // S*n*d
    std::vector<double> atom_pick;  // S*n uniforms for categorical inversion
};

std::shared_ptr<MollifyTables> build_tables(int d, int n, int S, std::uint64_t seed) {
    auto t = std::make_shared<MollifyTables>();
    t->d = d;
    t->n = n;
    t->S = S;
    t->eps = 1.0 / static_cast<double>(n);
    Rng rng = Rng::stream(seed, {0x6d6f6c6cULL});
    t->x_noise.resize(static_cast<std::size_t>(S) * d);
    t->p_noise.resize(static_cast<std::size_t>(S) * d);
    t->atom_noise.resize(static_cast<std::size_t>(S) * n * d);
    t->atom_pick.resize(static_cast<std::size_t>(S) * n);
    for (double& v : t->x_noise) v = t->eps * rng.truncated_normal(1.0);
    for (double& v : t->p_noise) v = t->eps * rng.truncated_normal(1.0);
    for (double& v : t->atom_noise) v = t->eps * rng.truncated_normal(1.0);
    for (double& v : t->atom_pick) v = rng.uniform01();
    return t;
}

/** Draw the s-th frozen n-atom cloud from m and perturb it. */
EmpiricalMeasure frozen_cloud(const MollifyTables& t, const EmpiricalMeasure& m, int s) {
    const int d = t.d, n = t.n;
    std::vector<double> cdf(m.size());
    double run = 0.0;
    for (int i = 0; i < m.size(); ++i) { run += m.w[i]; cdf[i] = run; }
    std::vector<double> coords(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        const double u = t.atom_pick[static_cast<std::size_t>(s) * n + i] * run;
        int pick = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        pick = std::min(pick, m.size() - 1);
        const auto a = m.atom(pick);
        for (int c = 0; c < d; ++c)
            coords[static_cast<std::size_t>(i) * d + c] =
                wrap1(a[c] + t.atom_noise[(static_cast<std::size_t>(s) * n + i) * d + c]);
    }
    return EmpiricalMeasure::uniform(d, std::move(coords));
}

} // namespace

MollifiedData mollify_data(const HamiltonianSpec& H, const TerminalSpec& G, int n, int S,
                           std::uint64_t seed) {
    if (n < 1) throw invalid_input_error("mollify_data: n must be >= 1");
    if (S < 1) throw invalid_input_error("mollify_data: sample count must be >= 1");
    auto tables = build_tables(H.d, n, S, seed);

    auto ham_terms = [tables, H](std::span<const double> x, std::span<const double> p,
                                 const EmpiricalMeasure& m, std::vector<double>& terms) {
        const int d = tables->d, S2 = tables->S;
        terms.resize(S2);
        std::vector<double> xp(d), pp(d);
        for (int s = 0; s < S2; ++s) {
            for (int c = 0; c < d; ++c) {
                xp[c] = wrap1(x[c] + tables->x_noise[static_cast<std::size_t>(s) * d + c]);
                pp[c] = p[c] + tables->p_noise[static_cast<std::size_t>(s) * d + c];
            }
            const EmpiricalMeasure cloud = frozen_cloud(*tables, m, s);
            terms[s] = H.evaluate(xp, pp, cloud);
        }
    };

    MollifiedData out;
    out.n = n;
    out.samples = S;
    out.hamiltonian = H;
    out.hamiltonian.actions = {};
    out.hamiltonian.argmax_action = nullptr;
    out.hamiltonian.depends_on_x = true;
    out.hamiltonian.depends_on_m = true;
    out.hamiltonian.evaluate = [ham_terms](std::span<const double> x, std::span<const double> p,
                                           const EmpiricalMeasure& m) mutable {
        std::vector<double> terms;
        ham_terms(x, p, m, terms);
        return pairwise_mean(terms);
    };
    out.hamiltonian_stats = [ham_terms](std::span<const double> x, std::span<const double> p,
                                        const EmpiricalMeasure& m) mutable {
        std::vector<double> terms;
        ham_terms(x, p, m, terms);
        return mean_stderr(terms);
    };

    out.terminal.lip_d1 = G.lip_d1;
    out.terminal.value = [tables, G](const EmpiricalMeasure& m) {
        std::vector<double> terms(tables->S);
        for (int s = 0; s < tables->S; ++s)
            terms[s] = G.value(frozen_cloud(*tables, m, s));
        return pairwise_mean(terms);
    };
    return out;
}

// ---------------------------------------------------------------------------
// empirical structure constants

namespace {

EmpiricalMeasure random_uniform_empirical(int d, int n, Rng& rng) {
    std::vector<double> coords(static_cast<std::size_t>(n) * d);
    for (double& c : coords) c = rng.uniform01();
    return EmpiricalMeasure::uniform(d, std::move(coords));
}

EmpiricalMeasure jittered(const EmpiricalMeasure& m, double scale, Rng& rng) {
    EmpiricalMeasure out = m;
    for (double& c : out.xs) c = wrap1(c + scale * (rng.uniform01() - 0.5));
    return out;
}

} // namespace

ConstantsEstimate estimate_constants(const HamiltonianSpec& H, const TerminalSpec& G,
                                     double horizon, int P, std::uint64_t seed) {
    if (P < 1) throw invalid_input_error("estimate_constants: P must be >= 1");
    if (horizon < 0.0) throw invalid_input_error("estimate_constants: negative horizon");
    const int d = H.d;
    Rng rng = Rng::stream(seed, {0x636f6e73ULL});
    const double p_radius = 3.0;
    static const double jitter_scales[3] = {1e-1, 1e-2, 1e-3};

    ConstantsEstimate est;
    int used = 0;
    for (int probe = 0; probe < P; ++probe) {
        std::vector<double> x(d), x2(d), p(d), p2(d);
        for (double& c : x) c = rng.uniform01();
        for (double& c : p) c = rng.uniform(-p_radius, p_radius);
        const int n_atoms = 1 + static_cast<int>(rng.integer(4));
        EmpiricalMeasure m = random_uniform_empirical(d, n_atoms, rng);
        EmpiricalMeasure m2;

        const int kind = probe % 10;
        if (kind < 4) {
            // independent pair
            for (double& c : x2) c = rng.uniform01();
            for (double& c : p2) c = rng.uniform(-p_radius, p_radius);
            m2 = random_uniform_empirical(d, n_atoms, rng);
        } else if (kind < 7) {
            // jittered pair across all arguments
            const double s = jitter_scales[probe % 3];
            for (int c = 0; c < d; ++c) x2[c] = wrap1(x[c] + s * (rng.uniform01() - 0.5));
            for (int c = 0; c < d; ++c) p2[c] = p[c] + s * (rng.uniform01() - 0.5);
            m2 = jittered(m, s, rng);
        } else if (kind < 9) {
            // momentum-only displacement (local slope in p)
            x2 = x;
            const double s = jitter_scales[probe % 3];
            for (int c = 0; c < d; ++c) p2[c] = p[c] + s * (rng.uniform01() - 0.5);
            m2 = m;
        } else {
            // near-Dirac pair moving a single atom
            x2 = x;
            p2 = p;
            std::vector<double> a0(d), a1(d);
            for (double& c : a0) c = rng.uniform01();
            const double h = jitter_scales[probe % 3];
            for (int c = 0; c < d; ++c) a1[c] = wrap1(a0[c] + (c == 0 ? h : 0.0));
            m = EmpiricalMeasure::uniform(d, a0);
            m2 = EmpiricalMeasure::uniform(d, a1);
        }

        double dist_m;
        try {
            dist_m = d1_auto(m, m2);
        } catch (const invalid_input_error&) {
            continue;
        }
        const double dist_x = torus_distance(x, x2);
        double dp = 0.0, np = 0.0, np2 = 0.0;
        for (int c = 0; c < d; ++c) {
            dp += (p[c] - p2[c]) * (p[c] - p2[c]);
            np += p[c] * p[c];
            np2 += p2[c] * p2[c];
        }
        dp = std::sqrt(dp);
        np = std::sqrt(np);
        np2 = std::sqrt(np2);

        const double denom_h = (1.0 + np + np2) * (dist_x + dp + dist_m);
        if (denom_h > 1e-12) {
            const double dh = std::fabs(H.evaluate(x, p, m) - H.evaluate(x2, p2, m2));
            est.C_H = std::max(est.C_H, dh / denom_h);
            ++used;
        }
        if (dist_m > 1e-12) {
            const double dg = std::fabs(G.value(m) - G.value(m2));
            est.C_G = std::max(est.C_G, dg / dist_m);
        }
    }
    if (used == 0) throw diagnostic_error("estimate_constants: all probe pairs degenerate");
    est.probes_used = used;
    est.R_star = std::exp(2.0 * est.C_H * horizon) * est.C_G;
    return est;
}

} // namespace mfhjb
