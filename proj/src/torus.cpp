#include "mfhjb/torus.hpp"

#include <cmath>
#include <limits>

namespace mfhjb {

void wrap(std::span<double> x) {
    for (double& c : x) {
        if (!std::isfinite(c)) throw invalid_input_error("wrap: non-finite coordinate");
        c = wrap1(c);
    }
}

TorusPoint::TorusPoint(std::vector<double> coords) : x(std::move(coords)) {
    wrap(x);
}

double wrapped_gap(double a, double b) {
    double g = a - b;
    g -= std::round(g);
    if (g < -0.5) g += 1.0;
    if (g >= 0.5) g -= 1.0;
    return g;
}

double torus_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw invalid_input_error("torus_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
            throw invalid_input_error("torus_distance: non-finite coordinate");
        const double g = wrapped_gap(a[i], b[i]);
        s += g * g;
    }
    return std::sqrt(s);
}

std::size_t GridSpec::node_count() const {
    validate();
    std::size_t n = 1;
    for (int a = 0; a < axes(); ++a) {
        if (n > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(M))
            throw resource_error("grid node count overflows size_t");
        n *= static_cast<std::size_t>(M);
    }
    return n;
}

void GridSpec::validate() const {
    if (d < 1) throw invalid_input_error("grid: d must be >= 1");
    if (N < 1) throw invalid_input_error("grid: N must be >= 1");
    if (M < 4 || M % 2 != 0)
        throw invalid_input_error("grid: M must be even and >= 4 (real transform layout)");
}

void check_memory_budget(const GridSpec& spec, std::uint64_t budget_bytes,
                         int working_set_factor) {
    const std::uint64_t nodes = spec.node_count();
    const std::uint64_t per = 8ULL * static_cast<std::uint64_t>(working_set_factor);
    if (nodes > budget_bytes / per)
        throw resource_error("grid working set exceeds memory budget (" +
                             std::to_string(nodes * per) + " > " +
                             std::to_string(budget_bytes) + " bytes)");
}

GridFn::GridFn(const GridSpec& s, std::vector<double> values) : spec(s), v(std::move(values)) {
    if (v.size() != s.node_count())
        throw invalid_input_error("grid function: value count does not match node count");
}

std::vector<std::size_t> axis_strides(const GridSpec& spec) {
    const int A = spec.axes();
    std::vector<std::size_t> s(A, 1);
    for (int a = A - 2; a >= 0; --a) s[a] = s[a + 1] * static_cast<std::size_t>(spec.M);
    return s;
}

void node_indices(const GridSpec& spec, std::size_t flat, std::span<int> out) {
    const int A = spec.axes();
    for (int a = A - 1; a >= 0; --a) {
        out[a] = static_cast<int>(flat % spec.M);
        flat /= spec.M;
    }
}

void node_coords(const GridSpec& spec, std::size_t flat, std::span<double> out) {
    const int A = spec.axes();
    const double dx = spec.dx();
    for (int a = A - 1; a >= 0; --a) {
        out[a] = static_cast<double>(flat % spec.M) * dx;
        flat /= spec.M;
    }
}

std::size_t flat_index(const GridSpec& spec, std::span<const int> idx) {
    std::size_t f = 0;
    for (int a = 0; a < spec.axes(); ++a) {
        int j = idx[a] % spec.M;
        if (j < 0) j += spec.M;
        f = f * spec.M + static_cast<std::size_t>(j);
    }
    return f;
}

GridFn periodic_diff(const GridFn& f, int axis, DiffMode mode) {
    const GridSpec& spec = f.spec;
    if (axis < 0 || axis >= spec.axes())
        throw invalid_input_error("periodic_diff: axis out of range");
    const std::size_t n = f.size();
    const std::size_t stride = axis_strides(spec)[axis];
    const std::size_t M = static_cast<std::size_t>(spec.M);
    const double dx = spec.dx();
    GridFn out(spec);

    const std::size_t block = stride * M; // contiguous span covering one axis cycle
    for (std::size_t base = 0; base < n; base += block) {
        for (std::size_t a = 0; a < M; ++a) {
            const std::size_t up = (a + 1) % M, dn = (a + M - 1) % M;
            const double* fc = &f.v[base + a * stride];
            const double* fu = &f.v[base + up * stride];
            const double* fd = &f.v[base + dn * stride];
            double* o = &out.v[base + a * stride];
            switch (mode) {
                case DiffMode::Forward:
                    for (std::size_t i = 0; i < stride; ++i) o[i] = (fu[i] - fc[i]) / dx;
                    break;
                case DiffMode::Backward:
                    for (std::size_t i = 0; i < stride; ++i) o[i] = (fc[i] - fd[i]) / dx;
                    break;
                case DiffMode::Centered:
                    for (std::size_t i = 0; i < stride; ++i) o[i] = (fu[i] - fd[i]) / (2.0 * dx);
                    break;
                case DiffMode::Second:
                    for (std::size_t i = 0; i < stride; ++i)
                        o[i] = (fu[i] - 2.0 * fc[i] + fd[i]) / (dx * dx);
                    break;
            }
        }
    }
    return out;
}

double interpolate(const GridFn& f, std::span<const double> point) {
    const GridSpec& spec = f.spec;
    const int A = spec.axes();
    if (static_cast<int>(point.size()) != A)
        throw invalid_input_error("interpolate: point dimension does not match grid axes");
    const std::vector<std::size_t> strides = axis_strides(spec);

    // Per-axis lower node and fractional offset, snapping to nodes when the
    // coordinate is within rounding distance so that node queries are exact.
    int i0[16];
    double fr[16];
    if (A > 16) throw unsupported_error("interpolate: more than 16 axes");
    for (int a = 0; a < A; ++a) {
        if (!std::isfinite(point[a]))
            throw invalid_input_error("interpolate: non-finite coordinate");
        const double u = wrap1(point[a]) * spec.M;
        double fl = std::floor(u);
        double frac = u - fl;
        if (frac > 1.0 - 1e-12) { fl += 1.0; frac = 0.0; }
        if (frac < 1e-12) frac = 0.0;
        int j = static_cast<int>(fl) % spec.M;
        if (j < 0) j += spec.M;
        i0[a] = j;
        fr[a] = frac;
    }

    double acc = 0.0;
    const unsigned corners = 1u << A;
    for (unsigned c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int a = 0; a < A; ++a) {
            const bool hi = (c >> a) & 1u;
            w *= hi ? fr[a] : (1.0 - fr[a]);
            if (w == 0.0) break;
            const int j = hi ? (i0[a] + 1) % spec.M : i0[a];
            flat += static_cast<std::size_t>(j) * strides[a];
        }
        if (w != 0.0) acc += w * f.v[flat];
    }
    return acc;
}

} // namespace mfhjb
