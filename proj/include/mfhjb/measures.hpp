#ifndef MFHJB_MEASURES_HPP
#define MFHJB_MEASURES_HPP

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfhjb/fourier.hpp"
#include "mfhjb/rng.hpp"
#include "mfhjb/torus.hpp"

namespace mfhjb {

/** Weighted atoms on T^d; weights nonnegative and summing to one. */
struct EmpiricalMeasure {
    int d = 1;
    std::vector<double> xs; // n*d coordinates, wrapped to [0,1)
    std::vector<double> w;  // atom weights

    int size() const { return static_cast<int>(w.size()); }
    std::span<const double> atom(int i) const {
        return {xs.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
    }

    static EmpiricalMeasure make(int d, std::vector<double> coords, std::vector<double> weights);
    static EmpiricalMeasure uniform(int d, std::vector<double> coords);

    bool is_uniform(double tol = 1e-12) const;
    /** Push-forward under translation by z (atoms shifted, weights kept). */
    EmpiricalMeasure shifted(std::span<const double> z) const;
};

/** Density samples at the nodes of a T^d grid, averaging to one. */
struct GridMeasure {
    int d = 1;
    int M = 4;
    std::vector<double> rho; // M^d samples, row-major

    static GridMeasure make(int d, int M, std::vector<double> samples);
    /** Rescale nonnegative samples so the node average is one. */
    static GridMeasure normalized(int d, int M, std::vector<double> samples);
    std::size_t nodes() const;
};

using MeasureAny = std::variant<EmpiricalMeasure, GridMeasure>;

/** Integral of a pointwise function against a measure (node quadrature for densities). */
double integrate(const std::function<double(std::span<const double>)>& f, const MeasureAny& m);

/**
 * Exact order-1 Wasserstein distance between empirical measures on the circle,
 * computed from the cumulative-difference representation: the distance is the
 * minimum over offsets t of the integral of |F_mu - F_nu - t|, attained at a
 * weighted median.
 */
double d1_circle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/**
 * Exact order-1 Wasserstein distance between equal-size uniform empirical
 * measures in any dimension via a minimum-cost perfect matching.
 */
double d1_matching(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/** Circle formula when d = 1, matching otherwise. */
double d1_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/** Exact minimum-cost assignment (O(n^3)); used by d1_matching and tests. */
double assignment_min_cost(int n, const std::function<double(int, int)>& cost);

/** Parameters of the dual Sobolev norm: order k and per-axis frequency cut Xi. */
struct SobolevParams {
    int k = 3;
    int Xi = 16;
    void validate(int d) const;
};

/** sum over multi-indices |j| <= k of prod_a (2 pi xi_a)^(2 j_a). */
double sobolev_weight(std::span<const int> xi, int k);

/** Same sum with first powers; equals the C^k norm of x -> cos(2 pi xi.x). */
double ck_norm_of_mode(std::span<const int> xi, int k);

/**
 * Fourier coefficients q_hat(xi) = integral of e^{-2 pi i xi.x} dq over the
 * box |xi_a| <= Xi, row-major with index xi_a + Xi per axis.  Real signed
 * measures satisfy q_hat(-xi) = conj(q_hat(xi)).
 */
struct SignedMeasureCoeffs {
    int d = 1;
    int Xi = 0;
    std::vector<std::complex<double>> c;

    std::size_t box_count() const;
    std::size_t box_index(std::span<const int> xi) const;
    std::complex<double> at(std::span<const int> xi) const { return c[box_index(xi)]; }
    std::complex<double>& at(std::span<const int> xi) { return c[box_index(xi)]; }
    double hermitian_defect() const;

    SignedMeasureCoeffs& operator-=(const SignedMeasureCoeffs& other);
};

SignedMeasureCoeffs empirical_coeffs(const EmpiricalMeasure& m, int Xi);
SignedMeasureCoeffs coeffs_difference(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int Xi);

struct NegSobolevNorm {
    double value = 0.0;      // truncated dual norm
    double tail_bound = 0.0; // bound on the squared-norm truncation error for
                             // differences of probability measures
};

/** Truncated H^{-k} norm sqrt(sum |q_hat|^2 / w_k) with a reported tail bound. */
NegSobolevNorm h_neg_k_norm(const SignedMeasureCoeffs& q, const SobolevParams& p);

/**
 * Grid samples of the H^k representer of q: the function with coefficients
 * q_hat(xi) / w_k(xi), so that the H^k inner product against any band-limited
 * test function reproduces the pairing with q.  Requires M >= 2 Xi.
 */
GridFn dual_element(const SignedMeasureCoeffs& q, const SobolevParams& p, int M);

/** H^k inner product of two real grid functions (spectral, exact on grid modes). */
double sobolev_inner(const GridFn& a, const GridFn& b, int k);

/** Pairing q(phi) for a band-limited phi given by its mode coefficients. */
double pair_coeffs(const SignedMeasureCoeffs& q, const ModeArray& phi);

/**
 * Dictionary surrogate for the C^{-k} gap between two measures: maximum of
 * |integral of phi d(mu - nu)| over S deterministic test functions (low
 * Fourier modes, then wrapped Gaussian bumps) rescaled to unit C^k norm.
 * Always a lower bound for the true dual norm.
 */
double c_neg_k_gap(const MeasureAny& mu, const MeasureAny& nu, int k, int S);

/** n independent draws from m (exact inversion); returns n*d wrapped coordinates. */
std::vector<double> sample_tensor(const MeasureAny& m, int n, Rng& rng);

void write_empirical_csv(const std::string& path, const EmpiricalMeasure& m);
EmpiricalMeasure read_empirical_csv(const std::string& path);

} // namespace mfhjb

#endif
