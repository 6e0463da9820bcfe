#ifndef MFHJB_TORUS_HPP
#define MFHJB_TORUS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfhjb/errors.hpp"

namespace mfhjb {

/** Map a real coordinate to the fundamental domain [0,1). */
inline double wrap1(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0; // guards tiny negatives that round up to 1.0
    return r;
}

void wrap(std::span<double> x);

/** A point on the d-dimensional unit torus, coordinates in [0,1). */
struct TorusPoint {
    std::vector<double> x;

    TorusPoint() = default;
    explicit TorusPoint(std::vector<double> coords);
    int dim() const { return static_cast<int>(x.size()); }
};

/** Geodesic (flat) distance on T^d: Euclidean norm of per-axis wrapped gaps. */
double torus_distance(std::span<const double> a, std::span<const double> b);

/** Per-axis wrapped gap with sign, in [-1/2, 1/2). */
double wrapped_gap(double a, double b);

/**
 * Product grid over the particle state space: N particle blocks of d axes
 * each, plus an optional leading block of d translation axes.  Every axis has
 * M equally spaced nodes j/M.  Values are stored row-major, axis 0 slowest.
 */
struct GridSpec {
    int d = 1;
    int N = 1;
    int M = 4;
    bool has_z = false;

    int axes() const { return d * N + (has_z ? d : 0); }
    int z_axis_offset() const { return has_z ? d : 0; } // particle axes start here
    double dx() const { return 1.0 / M; }
    std::size_t node_count() const;

    /** Axis index of component c of particle block i. */
    int particle_axis(int i, int c) const { return z_axis_offset() + i * d + c; }

    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

/** Throws resource_error if the working set exceeds the byte budget. */
void check_memory_budget(const GridSpec& spec, std::uint64_t budget_bytes,
                         int working_set_factor = 6);

constexpr std::uint64_t default_memory_budget = 2ULL << 30; // 2 GiB

/** Scalar function sampled on all nodes of a GridSpec. */
struct GridFn {
    GridSpec spec;
    std::vector<double> v;

    GridFn() = default;
    explicit GridFn(const GridSpec& s) : spec(s), v(s.node_count(), 0.0) {}
    GridFn(const GridSpec& s, std::vector<double> values);

    std::size_t size() const { return v.size(); }
};

/** Per-axis strides (row-major, axis 0 slowest). */
std::vector<std::size_t> axis_strides(const GridSpec& spec);

/** Decompose a flat index into per-axis node indices. */
void node_indices(const GridSpec& spec, std::size_t flat, std::span<int> out);

/** Coordinates of a node, one value per axis. */
void node_coords(const GridSpec& spec, std::size_t flat, std::span<double> out);

std::size_t flat_index(const GridSpec& spec, std::span<const int> idx);

enum class DiffMode { Forward, Backward, Centered, Second };

/** One-dimensional periodic finite difference along a single axis. */
GridFn periodic_diff(const GridFn& f, int axis, DiffMode mode);

/**
 * Periodic multilinear interpolation; exact at grid nodes and linear along
 * each axis between them.  `point` has one coordinate per grid axis.
 */
double interpolate(const GridFn& f, std::span<const double> point);

} // namespace mfhjb

#endif
