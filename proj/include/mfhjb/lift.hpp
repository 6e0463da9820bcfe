#ifndef MFHJB_LIFT_HPP
#define MFHJB_LIFT_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "mfhjb/measures.hpp"
#include "mfhjb/solver.hpp"

namespace mfhjb {

enum class LiftMethod { ExactTensor, MonteCarlo };

/** Value of the measure lift: the tensor integral of a grid value function
 *  against the N-fold product of a single input measure. */
struct LiftEvaluation {
    double t = 0.0;
    double value = 0.0;
    LiftMethod method = LiftMethod::ExactTensor;
    std::size_t samples = 0; // tensor tuples (exact) or draws (monte-carlo)
    double stderr_ = 0.0;    // zero for exact-tensor
};

/**
 * Lift a raw grid function: integral of V against m^{⊗N}.
 *
 * Exact-tensor contracts over every node tuple (grid measures: node weights
 * proportional to density values; empirical measures: all atom tuples with
 * multilinear interpolation).  Monte-Carlo averages interpolated values over
 * i.i.d. tensor samples with a pairwise-summed mean and standard error.
 * Tuple enumeration past `exact_cap` raises a resource error.
 */
LiftEvaluation lift_value(const GridFn& V, const MeasureAny& m,
                          LiftMethod method = LiftMethod::ExactTensor,
                          int samples = 100000, std::uint64_t seed = 0,
                          std::uint64_t exact_cap = 20000000);

/** Lift of a solved trajectory at snapshot time t. */
LiftEvaluation project_vhat(const SolutionTrajectory& traj, double t, const MeasureAny& m,
                            LiftMethod method = LiftMethod::ExactTensor,
                            int samples = 100000, std::uint64_t seed = 0);

/**
 * Linear derivative of the lift in the measure argument, tabulated on the
 * single-particle grid: sum over slots of the contraction of V over the other
 * N-1 slots, recentered to zero grid average (the normalization that fixes
 * the additive constant).  Interpolate the result for off-node points.
 */
GridFn vhat_derivative_grid(const GridFn& V, const MeasureAny& m,
                            LiftMethod method = LiftMethod::ExactTensor,
                            int samples = 20000, std::uint64_t seed = 0);

/** Derivative of the lift at a single point x (see vhat_derivative_grid). */
double vhat_linear_derivative(const SolutionTrajectory& traj, double t, const MeasureAny& m,
                              const TorusPoint& x,
                              LiftMethod method = LiftMethod::ExactTensor,
                              int samples = 20000, std::uint64_t seed = 0);

enum class LiftMetric { D1, HNegK, CNegKSurrogate };

/** Random measure-pair generation for Lipschitz probing: atom jitter at
 *  several scales, weight perturbations, and independent redraws. */
struct PairSamplerSpec {
    int atoms = 8;
    std::vector<double> jitter_scales = {1e-3, 1e-2, 1e-1};
    bool include_reweight = true;
    bool include_independent = true;
    int c_neg_modes = 8; // dictionary size for the C^{-k} surrogate
};

struct LipschitzProfile {
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    double median_ratio = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
    std::vector<double> ratios;
};

/**
 * Max and distribution of |lift(m) - lift(m')| / metric(m, m') over P random
 * pairs.  Pairs whose metric falls below 1e-10 are skipped; if every pair
 * degenerates a diagnostic error is raised.
 */
LipschitzProfile lipschitz_profile(const SolutionTrajectory& traj, double t,
                                   LiftMetric metric, const PairSamplerSpec& sampler,
                                   int pairs, std::uint64_t seed,
                                   const SobolevParams& sp = SobolevParams{});

/** One lifted evaluation inside a cross-N table. */
struct ConvergenceRow {
    int N = 0;
    double t = 0.0;
    int measure_id = 0;
    double value = 0.0;
    double stderr_ = 0.0;
    double gap_to_next = 0.0; // |value at next N - value|; NaN on the last N
    double d1_lip = 0.0;      // per-N profile, repeated across the N's rows
    double hk_lip = 0.0;
    double scaled_d1 = 0.0; // N * max block gradient sup at t
    double scaled_d2 = 0.0; // N * max block Hessian sup at t
};

struct ConvergenceTable {
    std::vector<int> Ns;
    std::vector<double> times;
    std::vector<ConvergenceRow> rows;
    std::vector<double> gaps;         // g_N = max over (t, m) of gap_to_next, per consecutive pair
    std::vector<double> holder_ratio; // per N: max |dV| / sqrt(|dt|) over time pairs
    std::vector<double> extrapolated; // per (t, m): Aitken-accelerated limit estimate
    double extrapolation_order = 0.0; // log-log slope of gaps vs N; empirical only
};

struct ConvergenceInputs {
    std::vector<int> Ns;                                 // strictly increasing
    std::vector<double> times;                           // evaluation times
    std::vector<MeasureAny> measures;                    // shared across all N
    std::function<SolutionTrajectory(int N)> solve_for;  // per-N solve
    LiftMethod method = LiftMethod::ExactTensor;
    int mc_samples = 100000;
    std::uint64_t seed = 0;
    SobolevParams sobolev = SobolevParams{};
    int lip_pairs = 24;
    int lip_atoms = 6;
};

/**
 * Cross-N Cauchy diagnostics: lifted values of each N-particle solution on a
 * shared measure set, consecutive gaps, per-N Lipschitz and scaled derivative
 * norms, time-Hoelder ratios, and an extrapolated limit labeled empirical.
 */
ConvergenceTable convergence_table(const ConvergenceInputs& in);

/** Shared measure set for cross-N comparison: lattice empiricals of several
 *  sizes plus smooth positive grid densities, all fixed by the seed. */
std::vector<MeasureAny> default_measure_set(int d, int M, std::uint64_t seed);

void write_convergence_csv(const std::string& path, const ConvergenceTable& table);

} // namespace mfhjb

#endif
