#include "mfhjb/fourier.hpp"

#include <fftw3.h>

#include <cmath>

#include "mfhjb/numeric.hpp"

namespace mfhjb {

namespace {

int freq_of(int idx, int M) { return idx <= M / 2 ? idx : idx - M; }

} // namespace

double diffusion_symbol(const GridSpec& spec, std::span<const int> freqs, double a0) {
    const int d = spec.d;
    double block_sq = 0.0;   // sum_i |xi_i|^2 over particle blocks
    double coupling_sq = 0.0;
    for (int c = 0; c < d; ++c) {
        double col = 0.0;
        for (int i = 0; i < spec.N; ++i) {
            const double f = freqs[spec.particle_axis(i, c)];
            block_sq += f * f;
            col += f;
        }
        if (!spec.has_z) coupling_sq += col * col;
    }
    if (spec.has_z) {
        for (int c = 0; c < d; ++c) {
            const double z = freqs[c];
            coupling_sq += z * z;
        }
    }
    return pi_sq4 * (block_sq + a0 * coupling_sq);
}

SpectralWorkspace::SpectralWorkspace(const GridSpec& spec) : spec_(spec) {
    spec_.validate();
    const int A = spec_.axes();
    n_real_ = spec_.node_count();
    n_cplx_ = n_real_ / spec_.M * (spec_.M / 2 + 1);
    rbuf_ = fftw_alloc_real(n_real_);
    cbuf_ = fftw_alloc_complex(n_cplx_);
    if (!rbuf_ || !cbuf_) throw resource_error("fftw buffer allocation failed");
    std::vector<int> dims(A, spec_.M);
    // FFTW_ESTIMATE keeps plan selection deterministic across runs.
    fwd_ = fftw_plan_dft_r2c(A, dims.data(), rbuf_,
                             static_cast<fftw_complex*>(cbuf_), FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r(A, dims.data(), static_cast<fftw_complex*>(cbuf_),
                             rbuf_, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw resource_error("fftw plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
    if (rbuf_) fftw_free(rbuf_);
    if (cbuf_) fftw_free(cbuf_);
}

void SpectralWorkspace::mode_freqs(std::size_t flat, std::span<int> out) const {
    const int A = spec_.axes();
    const int Mh = spec_.M / 2 + 1;
    out[A - 1] = static_cast<int>(flat % Mh);
    flat /= Mh;
    for (int a = A - 2; a >= 0; --a) {
        out[a] = freq_of(static_cast<int>(flat % spec_.M), spec_.M);
        flat /= spec_.M;
    }
}

void SpectralWorkspace::build_multiplier(
    std::vector<double>& out, const std::function<double(std::span<const int>)>& f) const {
    out.resize(n_cplx_);
    std::vector<int> freqs(spec_.axes());
    for (std::size_t i = 0; i < n_cplx_; ++i) {
        mode_freqs(i, freqs);
        out[i] = f(freqs);
    }
}

void SpectralWorkspace::apply(GridFn& g, std::span<const double> mult) {
    if (g.spec != spec_) throw invalid_input_error("spectral apply: grid mismatch");
    if (mult.size() != n_cplx_) throw invalid_input_error("spectral apply: multiplier size");
    std::copy(g.v.begin(), g.v.end(), rbuf_);
    fftw_execute(fwd_);
    auto* c = static_cast<fftw_complex*>(cbuf_);
    for (std::size_t i = 0; i < n_cplx_; ++i) {
        c[i][0] *= mult[i];
        c[i][1] *= mult[i];
    }
    fftw_execute(bwd_);
    const double inv = 1.0 / static_cast<double>(n_real_);
    for (std::size_t i = 0; i < n_real_; ++i) g.v[i] = rbuf_[i] * inv;
}

ModeArray SpectralWorkspace::forward(const GridFn& g) {
    if (g.spec != spec_) throw invalid_input_error("dft_forward: grid mismatch");
    std::copy(g.v.begin(), g.v.end(), rbuf_);
    fftw_execute(fwd_);
    ModeArray m;
    m.spec = spec_;
    m.c.resize(n_cplx_);
    const auto* c = static_cast<const fftw_complex*>(cbuf_);
    const double inv = 1.0 / static_cast<double>(n_real_);
    for (std::size_t i = 0; i < n_cplx_; ++i)
        m.c[i] = std::complex<double>(c[i][0] * inv, c[i][1] * inv);
    return m;
}

GridFn SpectralWorkspace::inverse(const ModeArray& m) {
    if (m.spec != spec_) throw invalid_input_error("dft_inverse: grid mismatch");
    if (m.c.size() != n_cplx_) throw invalid_input_error("dft_inverse: coefficient count");
    auto* c = static_cast<fftw_complex*>(cbuf_);
    for (std::size_t i = 0; i < n_cplx_; ++i) {
        c[i][0] = m.c[i].real();
        c[i][1] = m.c[i].imag();
    }
    fftw_execute(bwd_);
    GridFn g(spec_);
    std::copy(rbuf_, rbuf_ + n_real_, g.v.begin());
    return g;
}

std::complex<double> ModeArray::coeff(std::span<const int> xi) const {
    const int A = spec.axes();
    if (static_cast<int>(xi.size()) != A)
        throw invalid_input_error("mode coeff: frequency dimension mismatch");
    for (int a = 0; a < A; ++a)
        if (std::abs(xi[a]) > spec.M / 2)
            throw invalid_input_error("mode coeff: frequency beyond Nyquist");
    std::vector<int> q(xi.begin(), xi.end());
    bool conj = false;
    int last = q[A - 1];
    if (last < 0 && last != -spec.M / 2) {
        conj = true;
        for (int& f : q) f = (f == -spec.M / 2) ? f : -f; // Nyquist maps to itself
    }
    if (q[A - 1] == -spec.M / 2) q[A - 1] = spec.M / 2;
    const int Mh = spec.M / 2 + 1;
    std::size_t flat = 0;
    for (int a = 0; a < A - 1; ++a) {
        int idx = q[a] >= 0 ? q[a] : q[a] + spec.M;
        if (q[a] == -spec.M / 2) idx = spec.M / 2;
        flat = flat * spec.M + static_cast<std::size_t>(idx);
    }
    flat = flat * Mh + static_cast<std::size_t>(q[A - 1]);
    return conj ? std::conj(c[flat]) : c[flat];
}

ModeArray dft_forward(const GridFn& f) {
    SpectralWorkspace ws(f.spec);
    return ws.forward(f);
}

GridFn dft_inverse(const ModeArray& m) {
    SpectralWorkspace ws(m.spec);
    return ws.inverse(m);
}

GridFn spectral_diffusion_step(const GridFn& f, double tau, double a0, StepKind kind) {
    if (!(tau > 0.0)) throw invalid_input_error("diffusion step: tau must be positive");
    if (a0 < 0.0) throw invalid_input_error("diffusion step: a0 must be >= 0");
    SpectralWorkspace ws(f.spec);
    std::vector<double> mult;
    ws.build_multiplier(mult, [&](std::span<const int> freqs) {
        const double s = diffusion_symbol(f.spec, freqs, a0);
        return kind == StepKind::Resolvent ? 1.0 / (1.0 + tau * s) : std::exp(-tau * s);
    });
    GridFn out = f;
    ws.apply(out, mult);
    return out;
}

GridFn apply_generator(const GridFn& f, double a0) {
    if (a0 < 0.0) throw invalid_input_error("generator: a0 must be >= 0");
    SpectralWorkspace ws(f.spec);
    std::vector<double> mult;
    ws.build_multiplier(mult, [&](std::span<const int> freqs) {
        return -diffusion_symbol(f.spec, freqs, a0);
    });
    GridFn out = f;
    ws.apply(out, mult);
    return out;
}

GridFn heat_convolve(const GridFn& g, double v) {
    if (v < 0.0) throw invalid_input_error("heat_convolve: v must be >= 0");
    if (g.spec.N != 1 || g.spec.has_z)
        throw invalid_input_error("heat_convolve: expects a plain single-block grid");
    if (v == 0.0) return g;
    SpectralWorkspace ws(g.spec);
    std::vector<double> mult;
    const double half_pi_sq = 0.5 * pi_sq4; // 2 pi^2
    ws.build_multiplier(mult, [&](std::span<const int> freqs) {
        double sq = 0.0;
        for (int f : freqs) sq += static_cast<double>(f) * f;
        return std::exp(-half_pi_sq * v * sq);
    });
    GridFn out = g;
    ws.apply(out, mult);
    return out;
}

} // namespace mfhjb
