#ifndef MFHJB_HAMILTONIAN_HPP
#define MFHJB_HAMILTONIAN_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mfhjb/measures.hpp"
#include "mfhjb/numeric.hpp"

namespace mfhjb {

/** Finite action set; rows of `points` are dim-dimensional action values. */
struct ActionGrid {
    int dim = 1;
    std::vector<double> points;

    int count() const { return dim == 0 ? 0 : static_cast<int>(points.size()) / dim; }
    std::span<const double> action(int j) const {
        return {points.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)};
    }
    static ActionGrid linspace(double lo, double hi, int count);
    bool empty() const { return points.empty(); }
};

/**
 * Hamiltonian H(x, p, m) on T^d x R^d x P(T^d).  `evaluate` must be defined
 * for all inputs; the dependence flags let callers skip building unused
 * arguments.  Control Hamiltonians additionally carry their action grid and
 * an argmax selector for policy extraction.
 */
struct HamiltonianSpec {
    int d = 1;
    std::function<double(std::span<const double>, std::span<const double>,
                         const EmpiricalMeasure&)> evaluate;
    bool depends_on_x = false;
    bool depends_on_m = false;
    double lip_structure = 1.0; // constant C in the growth-weighted Lipschitz bound

    ActionGrid actions;
    std::function<int(std::span<const double>, std::span<const double>,
                      const EmpiricalMeasure&)> argmax_action;
    bool has_actions() const { return !actions.empty() && static_cast<bool>(argmax_action); }
};

/** Terminal cost G(m) with its declared Lipschitz constant in d1. */
struct TerminalSpec {
    std::function<double(const EmpiricalMeasure&)> value;
    double lip_d1 = 1.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline const EmpiricalMeasure& dummy_measure(int d) {
    static thread_local EmpiricalMeasure cache;
    if (cache.d != d || cache.size() != 1) {
        cache = EmpiricalMeasure::uniform(d, std::vector<double>(d, 0.0));
    }
    return cache;
}

} // namespace detail

/**
 * H(x, p, m) = max over the action grid of -L(x, a, m) - b(x, a, m).p, the
 * Hamiltonian of the cost-minimization problem with drift b and running cost
 * L.  Ties resolve to the lowest action index.  When the data depend on
 * neither x nor m, per-action drift and cost are cached at construction.
 *
 * Drift signature: b(x, a, m, out_d); cost: L(x, a, m) -> double.
 */
template <class Drift, class RunCost>
HamiltonianSpec control_hamiltonian(int d, Drift b, RunCost L, ActionGrid grid,
                                    bool depends_on_x, bool depends_on_m,
                                    double lip_structure = 1.0) {
    if (grid.empty()) throw invalid_input_error("control_hamiltonian: empty action grid");
    if (d > 8) throw unsupported_error("control_hamiltonian: d > 8");
    HamiltonianSpec H;
    H.d = d;
    H.depends_on_x = depends_on_x;
    H.depends_on_m = depends_on_m;
    H.lip_structure = lip_structure;
    H.actions = grid;

    const int na = grid.count();
    if (!depends_on_x && !depends_on_m) {
        auto cache = std::make_shared<std::vector<double>>();
        cache->resize(static_cast<std::size_t>(na) * (d + 1));
        std::vector<double> x0(d, 0.0), bv(d);
        const EmpiricalMeasure& m0 = detail::dummy_measure(d);
        for (int j = 0; j < na; ++j) {
            b(std::span<const double>(x0), grid.action(j), m0, std::span<double>(bv));
            (*cache)[static_cast<std::size_t>(j) * (d + 1)] = -L(std::span<const double>(x0), grid.action(j), m0);
            for (int c = 0; c < d; ++c)
                (*cache)[static_cast<std::size_t>(j) * (d + 1) + 1 + c] = bv[c];
        }
        H.evaluate = [cache, na, d](std::span<const double>, std::span<const double> p,
                                    const EmpiricalMeasure&) {
            double best = -std::numeric_limits<double>::infinity();
            const double* row = cache->data();
            for (int j = 0; j < na; ++j, row += d + 1) {
                double v = row[0];
                for (int c = 0; c < d; ++c) v -= row[1 + c] * p[c];
                if (v > best) best = v;
            }
            return best;
        };
        H.argmax_action = [cache, na, d](std::span<const double>, std::span<const double> p,
                                         const EmpiricalMeasure&) {
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            const double* row = cache->data();
            for (int j = 0; j < na; ++j, row += d + 1) {
                double v = row[0];
                for (int c = 0; c < d; ++c) v -= row[1 + c] * p[c];
                if (v > best) { best = v; arg = j; }
            }
            return arg;
        };
        return H;
    }

    auto grid_copy = std::make_shared<ActionGrid>(std::move(grid));
    H.evaluate = [b, L, grid_copy, na, d](std::span<const double> x, std::span<const double> p,
                                          const EmpiricalMeasure& m) mutable {
        double best = -std::numeric_limits<double>::infinity();
        double bv[8];
        std::span<double> bs(bv, static_cast<std::size_t>(d));
        for (int j = 0; j < na; ++j) {
            b(x, grid_copy->action(j), m, bs);
            const double v = -L(x, grid_copy->action(j), m) - detail::dot(bs, p);
            if (v > best) best = v;
        }
        return best;
    };
    H.argmax_action = [b, L, grid_copy, na, d](std::span<const double> x,
                                               std::span<const double> p,
                                               const EmpiricalMeasure& m) mutable {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        double bv[8];
        std::span<double> bs(bv, static_cast<std::size_t>(d));
        for (int j = 0; j < na; ++j) {
            b(x, grid_copy->action(j), m, bs);
            const double v = -L(x, grid_copy->action(j), m) - detail::dot(bs, p);
            if (v > best) { best = v; arg = j; }
        }
        return arg;
    };
    return H;
}

/** The two zero-sum Hamiltonians of a drift/cost game plus saddle selectors. */
struct IsaacsPair {
    HamiltonianSpec minus; // min over a of max over b'
    HamiltonianSpec plus;  // max over b' of min over a
    /** Pointwise gap H_minus - H_plus (always >= 0). */
    std::function<double(std::span<const double>, std::span<const double>,
                         const EmpiricalMeasure&)> gap;
};

/**
 * Build H^- = min_a max_b {-L - drift.p} and H^+ = max_b min_a of the same
 * objective over finite action grids.  The `argmax_action` of each spec
 * returns the outer optimizer (a-index for minus, b-index for plus).
 *
 * Drift signature: drift(x, a, b, m, out_d); cost: L(x, a, b, m) -> double.
 */
template <class Drift, class RunCost>
IsaacsPair isaacs_pair(int d, Drift drift, RunCost L, ActionGrid A, ActionGrid B,
                       bool depends_on_x, bool depends_on_m, double lip_structure = 1.0) {
    if (A.empty() || B.empty()) throw invalid_input_error("isaacs_pair: empty action grid");
    if (d > 8) throw unsupported_error("isaacs_pair: d > 8");
    const int na = A.count(), nb = B.count();

    struct Cached {
        std::vector<double> neg_cost;   // na*nb
        std::vector<double> drift_vals; // na*nb*d
        ActionGrid A, B;
        int d;
    };
    auto cc = std::make_shared<Cached>();
    cc->A = A;
    cc->B = B;
    cc->d = d;
    const bool cacheable = !depends_on_x && !depends_on_m;
    if (cacheable) {
        cc->neg_cost.resize(static_cast<std::size_t>(na) * nb);
        cc->drift_vals.resize(static_cast<std::size_t>(na) * nb * d);
        std::vector<double> x0(d, 0.0), bv(d);
        const EmpiricalMeasure& m0 = detail::dummy_measure(d);
        for (int ja = 0; ja < na; ++ja)
            for (int jb = 0; jb < nb; ++jb) {
                const std::size_t e = static_cast<std::size_t>(ja) * nb + jb;
                drift(std::span<const double>(x0), cc->A.action(ja), cc->B.action(jb), m0,
                      std::span<double>(bv));
                cc->neg_cost[e] = -L(std::span<const double>(x0), cc->A.action(ja),
                                     cc->B.action(jb), m0);
                for (int c = 0; c < d; ++c) cc->drift_vals[e * d + c] = bv[c];
            }
    }

    // Objective value for one action pair.
    auto value = [cc, drift, L, cacheable, nb, d](std::span<const double> x,
                                                  std::span<const double> p,
                                                  const EmpiricalMeasure& m, int ja,
                                                  int jb) mutable {
        if (cacheable) {
            const std::size_t e = static_cast<std::size_t>(ja) * nb + jb;
            double v = cc->neg_cost[e];
            for (int c = 0; c < d; ++c) v -= cc->drift_vals[e * d + c] * p[c];
            return v;
        }
        double bv[8];
        std::span<double> bs(bv, static_cast<std::size_t>(d));
        drift(x, cc->A.action(ja), cc->B.action(jb), m, bs);
        return -L(x, cc->A.action(ja), cc->B.action(jb), m) - detail::dot(bs, p);
    };

    auto minus_pick = [value, na, nb](std::span<const double> x, std::span<const double> p,
                                      const EmpiricalMeasure& m) mutable {
        double best_outer = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int ja = 0; ja < na; ++ja) {
            double inner = -std::numeric_limits<double>::infinity();
            for (int jb = 0; jb < nb; ++jb) inner = std::max(inner, value(x, p, m, ja, jb));
            if (inner < best_outer) { best_outer = inner; arg = ja; }
        }
        return std::pair<double, int>(best_outer, arg);
    };
    auto plus_pick = [value, na, nb](std::span<const double> x, std::span<const double> p,
                                     const EmpiricalMeasure& m) mutable {
        double best_outer = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int jb = 0; jb < nb; ++jb) {
            double inner = std::numeric_limits<double>::infinity();
            for (int ja = 0; ja < na; ++ja) inner = std::min(inner, value(x, p, m, ja, jb));
            if (inner > best_outer) { best_outer = inner; arg = jb; }
        }
        return std::pair<double, int>(best_outer, arg);
    };

    IsaacsPair out;
    out.minus.d = out.plus.d = d;
    out.minus.depends_on_x = out.plus.depends_on_x = depends_on_x;
    out.minus.depends_on_m = out.plus.depends_on_m = depends_on_m;
    out.minus.lip_structure = out.plus.lip_structure = lip_structure;
    out.minus.actions = A;
    out.plus.actions = B;
    out.minus.evaluate = [minus_pick](auto x, auto p, const EmpiricalMeasure& m) mutable {
        return minus_pick(x, p, m).first;
    };
    out.minus.argmax_action = [minus_pick](auto x, auto p, const EmpiricalMeasure& m) mutable {
        return minus_pick(x, p, m).second;
    };
    out.plus.evaluate = [plus_pick](auto x, auto p, const EmpiricalMeasure& m) mutable {
        return plus_pick(x, p, m).first;
    };
    out.plus.argmax_action = [plus_pick](auto x, auto p, const EmpiricalMeasure& m) mutable {
        return plus_pick(x, p, m).second;
    };
    out.gap = [minus_pick, plus_pick](auto x, auto p, const EmpiricalMeasure& m) mutable {
        return minus_pick(x, p, m).first - plus_pick(x, p, m).first;
    };
    return out;
}

/** Mollified problem data with Monte-Carlo error access. */
struct MollifiedData {
    HamiltonianSpec hamiltonian;
    TerminalSpec terminal;
    std::function<MeanStderr(std::span<const double>, std::span<const double>,
                             const EmpiricalMeasure&)> hamiltonian_stats;
    int n = 0;
    int samples = 0;
};

/**
 * Smooth the measure argument of (H, G) through the n-particle empirical
 * projection: atoms are drawn from m, and atoms, state, and momentum are
 * perturbed by truncated Gaussian noise of scale 1/n.  The randomness is
 * frozen at construction so the returned data are deterministic functions.
 */
MollifiedData mollify_data(const HamiltonianSpec& H, const TerminalSpec& G, int n, int S,
                           std::uint64_t seed);

struct ConstantsEstimate {
    double C_H = 0.0;
    double C_G = 0.0;
    double R_star = 0.0; // e^{2 C_H T} C_G
    int probes_used = 0;
};

/**
 * Empirical structure constants from randomized probe pairs: C_H is the
 * largest observed ratio |dH| / ((1+|p|+|p'|)(|dx|+|dp|+d1)), C_G the largest
 * |dG| / d1.  Probes mix independent pairs, small jitters, and near-Dirac
 * pairs so local slopes are represented.  Both are lower bounds of the true
 * constants.
 */
ConstantsEstimate estimate_constants(const HamiltonianSpec& H, const TerminalSpec& G,
                                     double horizon, int P, std::uint64_t seed);

} // namespace mfhjb

#endif
