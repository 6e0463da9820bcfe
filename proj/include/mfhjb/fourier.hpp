#ifndef MFHJB_FOURIER_HPP
#define MFHJB_FOURIER_HPP

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "mfhjb/torus.hpp"

struct fftw_plan_s;

namespace mfhjb {

/**
 * Normalized Fourier coefficients of a real grid function, stored in the
 * half-spectrum layout of a real-to-complex transform (last axis keeps
 * frequencies 0..M/2, all other axes the full range).  The convention is
 * f(x) = sum_xi coeff(xi) e^{2 pi i xi.x}, with the missing half recovered by
 * conjugate symmetry.
 */
struct ModeArray {
    GridSpec spec;
    std::vector<std::complex<double>> c;

    std::complex<double> coeff(std::span<const int> xi) const;
};

/**
 * Generator symbol sigma(xi) >= 0 of the particle-system diffusion: per-block
 * Laplacians plus the common-noise coupling, so that applying the generator
 * multiplies mode xi by -sigma(xi).  Without a translation block the coupling
 * term is a0 |sum_i xi_i|^2; with one it is a0 |zeta|^2 for the translation
 * frequency zeta.  `freqs` has one integer per axis, grid order.
 */
double diffusion_symbol(const GridSpec& spec, std::span<const int> freqs, double a0);

enum class StepKind { Resolvent, Semigroup };

/**
 * Reusable transform buffers and plans for one grid shape.  Plans are created
 * with deterministic heuristics so repeated runs are bit-identical.
 */
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const GridSpec& spec);
    ~SpectralWorkspace();
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const GridSpec& spec() const { return spec_; }
    std::size_t mode_count() const { return n_cplx_; }

    /** Evaluate `f` on the per-axis frequencies of every stored mode. */
    void build_multiplier(std::vector<double>& out,
                          const std::function<double(std::span<const int>)>& f) const;

    /** In-place transform, pointwise multiply, inverse transform. */
    void apply(GridFn& g, std::span<const double> mult);

    ModeArray forward(const GridFn& g);
    GridFn inverse(const ModeArray& m);

private:
    GridSpec spec_;
    std::size_t n_real_ = 0, n_cplx_ = 0;
    double* rbuf_ = nullptr;
    void* cbuf_ = nullptr;
    fftw_plan_s* fwd_ = nullptr;
    fftw_plan_s* bwd_ = nullptr;

    void mode_freqs(std::size_t flat, std::span<int> out) const;
};

ModeArray dft_forward(const GridFn& f);
GridFn dft_inverse(const ModeArray& m);

/** One implicit diffusion step (resolvent) or exact semigroup over time tau. */
GridFn spectral_diffusion_step(const GridFn& f, double tau, double a0, StepKind kind);

/** Apply the diffusion generator (spectral, exact on the grid modes). */
GridFn apply_generator(const GridFn& f, double a0);

/**
 * Convolution with the heat kernel of per-mode attenuation e^{-2 pi^2 v |xi|^2}
 * on a plain T^d grid (single block, no translation axes).  v = 0 is the
 * identity.
 */
GridFn heat_convolve(const GridFn& g, double v);

} // namespace mfhjb

#endif
