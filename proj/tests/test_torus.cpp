#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "mfhjb/errors.hpp"
#include "mfhjb/fourier.hpp"
#include "mfhjb/grid_io.hpp"
#include "mfhjb/rng.hpp"
#include "mfhjb/torus.hpp"

using namespace mfhjb;

namespace {

constexpr double pi = std::numbers::pi;

GridFn cos_mode(const GridSpec& spec, int axis, int freq) {
    GridFn f(spec);
    std::vector<double> pt(spec.axes());
    for (std::size_t n = 0; n < f.size(); ++n) {
        node_coords(spec, n, pt);
        f.v[n] = std::cos(2.0 * pi * freq * pt[axis]);
    }
    return f;
}

std::filesystem::path temp_file(const char* stem) {
    return std::filesystem::temp_directory_path() / stem;
}

} // namespace

TEST_CASE("wrap1 maps into the fundamental domain") {
    CHECK(wrap1(0.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(wrap1(1.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(wrap1(-0.25) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(wrap1(3.0) == 0.0);
    CHECK(wrap1(-2.0) == 0.0);
    // Tiny negative arguments must not round up to exactly 1.0.
    const double r = wrap1(-1e-18);
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
}

TEST_CASE("wrapped_gap is the signed shortest displacement") {
    CHECK(wrapped_gap(0.1, 0.9) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(wrapped_gap(0.9, 0.1) == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(wrapped_gap(0.3, 0.3) == 0.0);
    CHECK(wrapped_gap(0.0, 0.5) == -0.5); // half-gap lands on the closed end
}

TEST_CASE("torus_distance uses per-axis wrapped gaps") {
    const std::vector<double> a{0.1, 0.95};
    const std::vector<double> b{0.9, 0.05};
    CHECK(torus_distance(a, b) ==
          doctest::Approx(std::sqrt(0.2 * 0.2 + 0.1 * 0.1)).epsilon(1e-14));
    CHECK(torus_distance(a, a) == 0.0);
}

TEST_CASE("GridSpec layout and validation") {
    GridSpec spec{2, 3, 8, true};
    CHECK(spec.axes() == 8);
    CHECK(spec.z_axis_offset() == 2);
    CHECK(spec.particle_axis(0, 0) == 2);
    CHECK(spec.particle_axis(2, 1) == 7);
    CHECK(spec.node_count() == std::size_t(16777216)); // 8^8
    CHECK_NOTHROW(spec.validate());

    GridSpec odd{1, 1, 5, false};
    CHECK_THROWS_AS(odd.validate(), invalid_input_error);
    GridSpec zero_n{1, 0, 4, false};
    CHECK_THROWS_AS(zero_n.validate(), invalid_input_error);
}

TEST_CASE("check_memory_budget rejects oversized grids") {
    GridSpec big{1, 4, 64, false}; // 64^4 = 16.8M nodes
    CHECK_THROWS_AS(check_memory_budget(big, 1u << 20), resource_error);
    CHECK_NOTHROW(check_memory_budget(big, 4ULL << 30));
}

TEST_CASE("node_coords and flat_index round-trip") {
    GridSpec spec{1, 2, 8, false};
    std::vector<int> idx(spec.axes());
    std::vector<double> pt(spec.axes());
    Rng rng = Rng::stream(11, {1});
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t flat = rng.integer(spec.node_count());
        node_indices(spec, flat, idx);
        node_coords(spec, flat, pt);
        CHECK(flat_index(spec, idx) == flat);
        for (int a = 0; a < spec.axes(); ++a)
            CHECK(pt[a] == doctest::Approx(idx[a] / double(spec.M)).epsilon(1e-15));
    }
}

TEST_CASE("periodic_diff reproduces exact discrete derivatives of a cosine") {
    GridSpec spec{1, 1, 32, false};
    const double h = spec.dx();
    GridFn f = cos_mode(spec, 0, 1);

    // Centered difference of cos(2pi x) is -sin(2pi x) sin(2pi h)/h.
    GridFn d1 = periodic_diff(f, 0, DiffMode::Centered);
    std::vector<double> pt(1);
    for (std::size_t n = 0; n < d1.size(); ++n) {
        node_coords(spec, n, pt);
        const double expect = -std::sin(2.0 * pi * pt[0]) * std::sin(2.0 * pi * h) / h;
        CHECK(d1.v[n] == doctest::Approx(expect).epsilon(1e-12));
    }

    // Second difference multiplies cos by -2(1-cos(2pi h))/h^2.
    GridFn d2 = periodic_diff(f, 0, DiffMode::Second);
    const double amp = -2.0 * (1.0 - std::cos(2.0 * pi * h)) / (h * h);
    for (std::size_t n = 0; n < d2.size(); ++n)
        CHECK(d2.v[n] == doctest::Approx(amp * f.v[n]).epsilon(1e-11));

    // Forward minus backward difference telescopes to the second difference * h.
    GridFn fw = periodic_diff(f, 0, DiffMode::Forward);
    GridFn bw = periodic_diff(f, 0, DiffMode::Backward);
    for (std::size_t n = 0; n < f.size(); ++n)
        CHECK(fw.v[n] - bw.v[n] == doctest::Approx(h * d2.v[n]).epsilon(1e-10));
}

TEST_CASE("interpolate is exact at nodes and linear between them") {
    GridSpec spec{1, 2, 16, false};
    GridFn f = cos_mode(spec, 0, 1);
    std::vector<double> pt(2);

    node_coords(spec, 37, pt);
    CHECK(interpolate(f, pt) == f.v[37]);

    // Midpoint along axis 0 averages the two bracketing nodes.
    pt = {0.5 / 16.0, 3.0 / 16.0};
    const double left = std::cos(0.0);
    const double right = std::cos(2.0 * pi / 16.0);
    CHECK(interpolate(f, pt) == doctest::Approx(0.5 * (left + right)).epsilon(1e-14));

    // Wraps across the periodic seam.
    pt = {15.5 / 16.0, 0.0};
    const double last = std::cos(2.0 * pi * 15.0 / 16.0);
    CHECK(interpolate(f, pt) == doctest::Approx(0.5 * (last + 1.0)).epsilon(1e-14));
}

TEST_CASE("dft round-trips a random grid") {
    GridSpec spec{1, 2, 16, false};
    GridFn f(spec);
    Rng rng = Rng::stream(5, {2});
    for (double& x : f.v) x = rng.uniform01() - 0.5;

    ModeArray c = dft_forward(f);
    GridFn back = dft_inverse(c);
    for (std::size_t n = 0; n < f.size(); ++n)
        CHECK(back.v[n] == doctest::Approx(f.v[n]).epsilon(1e-12));
}

TEST_CASE("dft of a cosine concentrates on the matching modes") {
    GridSpec spec{1, 2, 16, false};
    GridFn f = cos_mode(spec, 1, 1);
    ModeArray c = dft_forward(f);

    const std::vector<int> plus{0, 1};
    const std::vector<int> minus{0, -1};
    CHECK(std::abs(c.coeff(plus) - std::complex<double>(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(c.coeff(minus) - std::complex<double>(0.5, 0.0)) < 1e-12);
    const std::vector<int> zero{0, 0};
    CHECK(std::abs(c.coeff(zero)) < 1e-12);
}

TEST_CASE("diffusion_symbol matches hand-computed values") {
    GridSpec spec{1, 2, 8, false};
    const double w = 4.0 * pi * pi;

    // No common noise: sum of squared frequencies.
    std::vector<int> xi{1, 1};
    CHECK(diffusion_symbol(spec, xi, 0.0) == doctest::Approx(2.0 * w).epsilon(1e-14));
    // Common noise adds a0 * |sum of particle frequencies|^2.
    CHECK(diffusion_symbol(spec, xi, 1.0) == doctest::Approx(6.0 * w).epsilon(1e-14));
    xi = {1, -1};
    CHECK(diffusion_symbol(spec, xi, 1.0) == doctest::Approx(2.0 * w).epsilon(1e-14));

    // With an explicit translation block the a0 term uses the z frequency.
    GridSpec specz{1, 1, 8, true};
    std::vector<int> zxi{2, 1}; // zeta = 2, xi = 1
    CHECK(diffusion_symbol(specz, zxi, 1.0) == doctest::Approx(5.0 * w).epsilon(1e-14));
    CHECK(diffusion_symbol(specz, zxi, 0.25) == doctest::Approx(2.0 * w).epsilon(1e-14));
}

TEST_CASE("spectral_diffusion_step damps a single mode by its symbol") {
    GridSpec spec{1, 2, 16, false};
    const double a0 = 1.0;
    const double tau = 3e-3;
    GridFn f = cos_mode(spec, 0, 1);
    const std::vector<int> xi{1, 0};
    const double sigma = diffusion_symbol(spec, xi, a0);

    GridFn semi = spectral_diffusion_step(f, tau, a0, StepKind::Semigroup);
    GridFn reso = spectral_diffusion_step(f, tau, a0, StepKind::Resolvent);
    const double semi_gain = std::exp(-sigma * tau);
    const double reso_gain = 1.0 / (1.0 + sigma * tau);
    for (std::size_t n = 0; n < f.size(); ++n) {
        CHECK(semi.v[n] == doctest::Approx(semi_gain * f.v[n]).epsilon(1e-11));
        CHECK(reso.v[n] == doctest::Approx(reso_gain * f.v[n]).epsilon(1e-11));
    }

    // Constants are invariant under both step kinds.
    GridFn one(spec);
    for (double& x : one.v) x = 1.0;
    GridFn one_semi = spectral_diffusion_step(one, tau, a0, StepKind::Semigroup);
    for (double x : one_semi.v) CHECK(x == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("apply_generator returns minus the symbol times the mode") {
    GridSpec spec{1, 2, 16, false};
    GridFn f = cos_mode(spec, 1, 2);
    const std::vector<int> xi{0, 2};
    const double sigma = diffusion_symbol(spec, xi, 0.5);
    GridFn g = apply_generator(f, 0.5);
    for (std::size_t n = 0; n < f.size(); ++n)
        CHECK(g.v[n] == doctest::Approx(-sigma * f.v[n]).epsilon(1e-9));
}

TEST_CASE("heat_convolve is the identity at zero time and damps modes otherwise") {
    GridSpec spec{1, 1, 64, false};
    GridFn g(spec);
    for (int j = 0; j < 64; ++j)
        g.v[std::size_t(j)] = std::cos(2.0 * pi * j / 64.0) + 0.25;

    GridFn same = heat_convolve(g, 0.0);
    for (int j = 0; j < 64; ++j)
        CHECK(same.v[std::size_t(j)] == doctest::Approx(g.v[std::size_t(j)]).epsilon(1e-13));

    const double v = 0.05;
    GridFn blur = heat_convolve(g, v);
    const double gain = std::exp(-2.0 * pi * pi * v);
    for (int j = 0; j < 64; ++j) {
        const double expect = gain * std::cos(2.0 * pi * j / 64.0) + 0.25;
        CHECK(blur.v[std::size_t(j)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("grid dumps round-trip bit-exactly") {
    GridSpec spec{1, 2, 8, false};
    GridFn f(spec);
    Rng rng = Rng::stream(9, {3});
    for (double& x : f.v) x = rng.normal();

    const auto path = temp_file("mfhjb_test_grid.bin");
    write_grid_dump(path.string(), f);
    GridFn back = read_grid_dump(path.string());
    CHECK(back.spec == spec);
    REQUIRE(back.v.size() == f.v.size());
    for (std::size_t n = 0; n < f.size(); ++n) CHECK(back.v[n] == f.v[n]);
    std::filesystem::remove(path);
}

TEST_CASE("grid dump reader rejects corrupted headers") {
    GridSpec spec{1, 1, 4, false};
    GridFn f(spec);
    const auto path = temp_file("mfhjb_test_corrupt.bin");
    write_grid_dump(path.string(), f);

    SUBCASE("bad magic") {
        std::fstream s(path, std::ios::in | std::ios::out | std::ios::binary);
        s.seekp(0);
        s.write("XXXX", 4);
        s.close();
        CHECK_THROWS_AS(read_grid_dump(path.string()), invalid_input_error);
    }
    SUBCASE("unknown version") {
        std::fstream s(path, std::ios::in | std::ios::out | std::ios::binary);
        s.seekp(4);
        const char v2[4] = {2, 0, 0, 0};
        s.write(v2, 4);
        s.close();
        CHECK_THROWS_AS(read_grid_dump(path.string()), invalid_input_error);
    }
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
        CHECK_THROWS_AS(read_grid_dump(path.string()), invalid_input_error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("coefficient dumps round-trip bit-exactly") {
    EmpiricalMeasure m = EmpiricalMeasure::uniform(1, {0.1, 0.55, 0.9});
    SignedMeasureCoeffs q = empirical_coeffs(m, 6);
    const auto path = temp_file("mfhjb_test_coeffs.bin");
    write_coeffs_dump(path.string(), q);
    SignedMeasureCoeffs back = read_coeffs_dump(path.string());
    CHECK(back.d == q.d);
    CHECK(back.Xi == q.Xi);
    REQUIRE(back.c.size() == q.c.size());
    for (std::size_t n = 0; n < q.c.size(); ++n) CHECK(back.c[n] == q.c[n]);
    std::filesystem::remove(path);
}

TEST_CASE("sidecar files round-trip and reject malformed lines") {
    const auto path = temp_file("mfhjb_test_sidecar.meta");
    const std::vector<std::pair<std::string, std::string>> kv{
        {"problem", "heat-linear-g"}, {"t", "0.05"}, {"seed", "7"}};
    write_sidecar(path.string(), kv);
    auto back = read_sidecar(path.string());
    CHECK(back == kv);

    std::ofstream bad(path);
    bad << "# comment survives\nkey_without_value\n";
    bad.close();
    CHECK_THROWS_AS(read_sidecar(path.string()), invalid_input_error);
    std::filesystem::remove(path);
}
