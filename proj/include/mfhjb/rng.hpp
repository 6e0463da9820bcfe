#ifndef MFHJB_RNG_HPP
#define MFHJB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mfhjb {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Counter-seeded generator with explicit distributions so that results are
 * identical across standard library implementations.  Streams derived from the
 * same master seed but different path ids are independent for practical
 * purposes and stable under reordering of draws from other streams.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /** Stream derivation: hash the master seed with a path of ids. */
    static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
        std::uint64_t s = master ^ 0x6a09e667f3bcc908ULL;
        for (std::uint64_t id : path) {
            s ^= id + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
            std::uint64_t t = s;
            s = splitmix64(t);
        }
        return Rng(s);
    }

    std::uint64_t bits() { return eng_(); }

    /** Uniform double in [0,1) with 53 random bits. */
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /** Unbiased integer in [0, n). */
    std::uint64_t integer(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do { v = eng_(); } while (v >= limit);
        return v % n;
    }

    /** Standard normal via Box-Muller (explicit, implementation independent). */
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform01(); } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /** Standard normal conditioned on |value| <= cut (rejection). */
    double truncated_normal(double cut) {
        double g;
        do { g = normal(); } while (std::fabs(g) > cut);
        return g;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mfhjb

#endif
