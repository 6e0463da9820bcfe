#ifndef MFHJB_SIMULATE_HPP
#define MFHJB_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfhjb/measures.hpp"
#include "mfhjb/solver.hpp"

namespace mfhjb {

/** Particle drift: writes d components for one particle given its state, its
 *  action, and the current empirical measure of all particles. */
using SimDrift = std::function<void(std::span<const double> x, std::span<const double> a,
                                    const EmpiricalMeasure& m, std::span<double> out)>;

/** Running cost for one particle. */
using SimCost = std::function<double(std::span<const double> x, std::span<const double> a,
                                     const EmpiricalMeasure& m)>;

/** Two-action variants for zero-sum games. */
using GameDrift = std::function<void(std::span<const double> x, std::span<const double> a,
                                     std::span<const double> b, const EmpiricalMeasure& m,
                                     std::span<double> out)>;
using GameCost = std::function<double(std::span<const double> x, std::span<const double> a,
                                      std::span<const double> b, const EmpiricalMeasure& m)>;

struct SimConfig {
    int N = 1;
    int d = 1;
    double a0 = 0.0;     // common-noise intensity
    double t0 = 0.0;
    double T = 0.1;
    std::vector<double> x0;       // N*d start state; empty requests sampling from m0
    std::optional<MeasureAny> m0; // initial law, sampled i.i.d. per particle per path
    double dt_sim = 1e-3;
    int paths = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CostEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int paths = 0;
};

/**
 * Euler-Maruyama estimate of the expected control cost: within each path all
 * particles share one common Gaussian increment per step (scaled by sqrt(2 a0))
 * plus independent idiosyncratic increments; the running cost uses
 * left-endpoint quadrature and the terminal cost reads the final empirical
 * measure.  Paths use derived per-path streams, so the estimate is
 * deterministic for a given seed and independent of scheduling.
 */
CostEstimate simulate_cost(const SimDrift& b, const SimCost& L, const TerminalSpec& G,
                           const Policy& policy, const SimConfig& sim);

/** Game version: two feedback policies supply the two action arguments. */
CostEstimate simulate_game(const GameDrift& b, const GameCost& L, const TerminalSpec& G,
                           const Policy& policy_a, const Policy& policy_b,
                           const SimConfig& sim);

struct NamedPolicy {
    std::string name;
    Policy policy;
};

struct ProbeRow {
    std::string name;
    double mean = 0.0;
    double stderr_ = 0.0;
    double margin = 0.0; // mean - reference value
    bool violation = false;
};

struct ProbeReport {
    double reference = 0.0;
    double tolerance = 0.0;
    std::vector<ProbeRow> rows;
};

/**
 * Costs of alternative policies against a reference value (the solved value
 * function at the start state).  Since the value is an infimum, margins below
 * -(4 stderr + tolerance) are flagged as violations.
 */
ProbeReport suboptimality_probe(const SimDrift& b, const SimCost& L, const TerminalSpec& G,
                                double reference, const std::vector<NamedPolicy>& alternatives,
                                const SimConfig& sim, double tolerance = 2e-2);

void write_probe_csv(const std::string& path, const ProbeReport& report);

/** Policy that plays one fixed action vector for every particle and time. */
Policy constant_policy(int n_particles, std::vector<double> action);

} // namespace mfhjb

#endif
