#ifndef MFHJB_NUMERIC_HPP
#define MFHJB_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mfhjb {

/**
 * Deterministic pairwise summation.  The reduction tree depends only on the
 * length, so results do not change with threading or chunk order upstream.
 */
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double pairwise_mean(std::span<const double> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

/** Sample mean and standard error (pairwise reductions throughout). */
inline MeanStderr mean_stderr(std::span<const double> v) {
    MeanStderr r;
    r.n = v.size();
    if (r.n == 0) return r;
    r.mean = pairwise_mean(v);
    if (r.n < 2) return r;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - r.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(r.n - 1);
    r.stderr_ = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double pi_sq4 = 39.478417604357434475337963999505; // (2*pi)^2

} // namespace mfhjb

#endif
