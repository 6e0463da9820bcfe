#include "mfhjb/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mfhjb/numeric.hpp"

namespace mfhjb {

// ---------------------------------------------------------------------------
// measure types

EmpiricalMeasure EmpiricalMeasure::make(int d, std::vector<double> coords,
                                        std::vector<double> weights) {
    if (d < 1) throw invalid_input_error("empirical measure: d must be >= 1");
    if (weights.empty()) throw invalid_input_error("empirical measure: no atoms");
    if (coords.size() != weights.size() * static_cast<std::size_t>(d))
        throw invalid_input_error("empirical measure: coordinate count mismatch");
    double s = 0.0;
    for (double wi : weights) {
        if (!(wi >= 0.0)) throw invalid_input_error("empirical measure: negative weight");
        s += wi;
    }
    if (std::fabs(s - 1.0) > 1e-12)
        throw invalid_input_error("empirical measure: weights sum to " + std::to_string(s));
    EmpiricalMeasure m;
    m.d = d;
    m.xs = std::move(coords);
    m.w = std::move(weights);
    wrap(m.xs);
    return m;
}

EmpiricalMeasure EmpiricalMeasure::uniform(int d, std::vector<double> coords) {
    if (d < 1 || coords.size() % d != 0)
        throw invalid_input_error("empirical measure: coordinate count mismatch");
    const std::size_t n = coords.size() / d;
    if (n == 0) throw invalid_input_error("empirical measure: no atoms");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    return make(d, std::move(coords), std::move(w));
}

bool EmpiricalMeasure::is_uniform(double tol) const {
    const double u = 1.0 / static_cast<double>(size());
    for (double wi : w)
        if (std::fabs(wi - u) > tol) return false;
    return true;
}

EmpiricalMeasure EmpiricalMeasure::shifted(std::span<const double> z) const {
    if (static_cast<int>(z.size()) != d)
        throw invalid_input_error("shifted measure: dimension mismatch");
    EmpiricalMeasure out = *this;
    for (int i = 0; i < size(); ++i)
        for (int c = 0; c < d; ++c)
            out.xs[static_cast<std::size_t>(i) * d + c] =
                wrap1(out.xs[static_cast<std::size_t>(i) * d + c] + z[c]);
    return out;
}

std::size_t GridMeasure::nodes() const {
    std::size_t n = 1;
    for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(M);
    return n;
}

GridMeasure GridMeasure::make(int d, int M, std::vector<double> samples) {
    if (d < 1) throw invalid_input_error("grid measure: d must be >= 1");
    if (M < 4 || M % 2 != 0) throw invalid_input_error("grid measure: M must be even, >= 4");
    GridMeasure g;
    g.d = d;
    g.M = M;
    g.rho = std::move(samples);
    if (g.rho.size() != g.nodes())
        throw invalid_input_error("grid measure: sample count mismatch");
    double s = 0.0;
    for (double r : g.rho) {
        if (!(r >= 0.0)) throw invalid_input_error("grid measure: negative density sample");
        s += r;
    }
    if (std::fabs(s / static_cast<double>(g.nodes()) - 1.0) > 1e-12)
        throw invalid_input_error("grid measure: node average must be 1");
    return g;
}

GridMeasure GridMeasure::normalized(int d, int M, std::vector<double> samples) {
    double s = 0.0;
    for (double r : samples) {
        if (!(r >= 0.0)) throw invalid_input_error("grid measure: negative density sample");
        s += r;
    }
    if (!(s > 0.0)) throw invalid_input_error("grid measure: zero total mass");
    const double scale = static_cast<double>(samples.size()) / s;
    for (double& r : samples) r *= scale;
    return make(d, M, std::move(samples));
}

double integrate(const std::function<double(std::span<const double>)>& f, const MeasureAny& m) {
    if (const auto* e = std::get_if<EmpiricalMeasure>(&m)) {
        std::vector<double> terms(e->size());
        for (int i = 0; i < e->size(); ++i) terms[i] = e->w[i] * f(e->atom(i));
        return pairwise_sum(terms);
    }
    const auto& g = std::get<GridMeasure>(m);
    const std::size_t n = g.nodes();
    std::vector<double> terms(n);
    std::vector<double> x(g.d);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t r = flat;
        for (int a = g.d - 1; a >= 0; --a) {
            x[a] = static_cast<double>(r % g.M) / g.M;
            r /= g.M;
        }
        terms[flat] = g.rho[flat] * f(x);
    }
    return pairwise_sum(terms) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Wasserstein-1 distances

double d1_circle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.d != 1 || nu.d != 1)
        throw invalid_input_error("d1_circle: defined for d = 1 only");
    struct Ev { double pos, w; };
    std::vector<Ev> ev;
    ev.reserve(mu.size() + nu.size());
    for (int i = 0; i < mu.size(); ++i) ev.push_back({mu.xs[i], mu.w[i]});
    for (int i = 0; i < nu.size(); ++i) ev.push_back({nu.xs[i], -nu.w[i]});
    std::sort(ev.begin(), ev.end(), [](const Ev& a, const Ev& b) { return a.pos < b.pos; });

    // Piecewise-constant cumulative difference over the segments between
    // consecutive distinct positions (plus the wrap-around segment).
    std::vector<double> pos, val, len;
    double run = 0.0;
    for (std::size_t i = 0; i < ev.size();) {
        std::size_t j = i;
        while (j < ev.size() && ev[j].pos == ev[i].pos) { run += ev[j].w; ++j; }
        pos.push_back(ev[i].pos);
        val.push_back(run);
        i = j;
    }
    const std::size_t m = pos.size();
    for (std::size_t j = 0; j < m; ++j) {
        const double next = (j + 1 < m) ? pos[j + 1] : pos[0] + 1.0;
        len.push_back(next - pos[j]);
    }

    // Weighted median of the segment values minimizes sum len * |val - t|.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    double cum = 0.0, med = val[order.back()];
    for (std::size_t oi : order) {
        cum += len[oi];
        if (cum >= 0.5) { med = val[oi]; break; }
    }
    std::vector<double> terms(m);
    for (std::size_t j = 0; j < m; ++j) terms[j] = len[j] * std::fabs(val[j] - med);
    return pairwise_sum(terms);
}

double assignment_min_cost(int n, const std::function<double(int, int)>& cost) {
    if (n <= 0) throw invalid_input_error("assignment: empty problem");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
    return total;
}

double d1_matching(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.d != nu.d) throw invalid_input_error("d1_matching: dimension mismatch");
    if (mu.size() != nu.size())
        throw invalid_input_error("d1_matching: atom counts differ");
    if (!mu.is_uniform() || !nu.is_uniform())
        throw invalid_input_error("d1_matching: weights must be uniform");
    const int n = mu.size();
    const double total = assignment_min_cost(
        n, [&](int i, int j) { return torus_distance(mu.atom(i), nu.atom(j)); });
    return total / static_cast<double>(n);
}

double d1_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.d == 1 && nu.d == 1) return d1_circle(mu, nu);
    return d1_matching(mu, nu);
}

// ---------------------------------------------------------------------------
// Sobolev duality

void SobolevParams::validate(int d) const {
    if (k <= d / 2.0 + 2.0)
        throw invalid_input_error("sobolev params: k must exceed d/2 + 2");
    if (Xi < 1) throw invalid_input_error("sobolev params: Xi must be >= 1");
}

double sobolev_weight(std::span<const int> xi, int k) {
    if (k < 0) throw invalid_input_error("sobolev_weight: negative order");
    std::vector<double> acc(k + 1, 0.0), next(k + 1, 0.0);
    acc[0] = 1.0;
    for (int a = 0; a < static_cast<int>(xi.size()); ++a) {
        const double t = pi_sq4 * static_cast<double>(xi[a]) * xi[a];
        std::fill(next.begin(), next.end(), 0.0);
        for (int deg = 0; deg <= k; ++deg) {
            if (acc[deg] == 0.0) continue;
            double tp = 1.0;
            for (int j = 0; deg + j <= k; ++j) {
                next[deg + j] += acc[deg] * tp;
                tp *= t;
            }
        }
        acc.swap(next);
    }
    double s = 0.0;
    for (double x : acc) s += x;
    return s;
}

double ck_norm_of_mode(std::span<const int> xi, int k) {
    std::vector<double> acc(k + 1, 0.0), next(k + 1, 0.0);
    acc[0] = 1.0;
    for (int a = 0; a < static_cast<int>(xi.size()); ++a) {
        const double t = two_pi * std::abs(xi[a]);
        std::fill(next.begin(), next.end(), 0.0);
        for (int deg = 0; deg <= k; ++deg) {
            if (acc[deg] == 0.0) continue;
            double tp = 1.0;
            for (int j = 0; deg + j <= k; ++j) {
                next[deg + j] += acc[deg] * tp;
                tp *= t;
            }
        }
        acc.swap(next);
    }
    double s = 0.0;
    for (double x : acc) s += x;
    return s;
}

std::size_t SignedMeasureCoeffs::box_count() const {
    std::size_t n = 1;
    for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(2 * Xi + 1);
    return n;
}

std::size_t SignedMeasureCoeffs::box_index(std::span<const int> xi) const {
    if (static_cast<int>(xi.size()) != d)
        throw invalid_input_error("coeffs: frequency dimension mismatch");
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
        if (std::abs(xi[a]) > Xi)
            throw invalid_input_error("coeffs: frequency outside truncation box");
        flat = flat * (2 * Xi + 1) + static_cast<std::size_t>(xi[a] + Xi);
    }
    return flat;
}

namespace {

void box_freqs(int d, int Xi, std::size_t flat, std::span<int> out) {
    for (int a = d - 1; a >= 0; --a) {
        out[a] = static_cast<int>(flat % (2 * Xi + 1)) - Xi;
        flat /= (2 * Xi + 1);
    }
}

} // namespace

double SignedMeasureCoeffs::hermitian_defect() const {
    std::vector<int> xi(d), mi(d);
    double worst = 0.0;
    for (std::size_t f = 0; f < box_count(); ++f) {
        box_freqs(d, Xi, f, xi);
        for (int a = 0; a < d; ++a) mi[a] = -xi[a];
        worst = std::max(worst, std::abs(c[f] - std::conj(at(mi))));
    }
    return worst;
}

SignedMeasureCoeffs& SignedMeasureCoeffs::operator-=(const SignedMeasureCoeffs& other) {
    if (d != other.d || Xi != other.Xi)
        throw invalid_input_error("coeffs: box mismatch in difference");
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= other.c[i];
    return *this;
}

SignedMeasureCoeffs empirical_coeffs(const EmpiricalMeasure& m, int Xi) {
    if (Xi < 1) throw invalid_input_error("empirical_coeffs: Xi must be >= 1");
    SignedMeasureCoeffs q;
    q.d = m.d;
    q.Xi = Xi;
    q.c.assign(q.box_count(), {0.0, 0.0});
    std::vector<int> xi(m.d);
    for (std::size_t f = 0; f < q.c.size(); ++f) {
        box_freqs(m.d, Xi, f, xi);
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < m.size(); ++i) {
            double phase = 0.0;
            const auto a = m.atom(i);
            for (int cdim = 0; cdim < m.d; ++cdim) phase += xi[cdim] * a[cdim];
            acc += m.w[i] * std::polar(1.0, -two_pi * phase);
        }
        q.c[f] = acc;
    }
    return q;
}

SignedMeasureCoeffs coeffs_difference(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                      int Xi) {
    SignedMeasureCoeffs q = empirical_coeffs(mu, Xi);
    q -= empirical_coeffs(nu, Xi);
    return q;
}

NegSobolevNorm h_neg_k_norm(const SignedMeasureCoeffs& q, const SobolevParams& p) {
    p.validate(q.d);
    if (p.Xi != q.Xi)
        throw invalid_input_error("h_neg_k_norm: params truncation differs from stored box");
    std::vector<int> xi(q.d);
    std::vector<double> terms(q.c.size());
    for (std::size_t f = 0; f < q.c.size(); ++f) {
        box_freqs(q.d, q.Xi, f, xi);
        terms[f] = std::norm(q.c[f]) / sobolev_weight(xi, p.k);
    }
    NegSobolevNorm out;
    out.value = std::sqrt(pairwise_sum(terms));

    // Modes outside the box satisfy |q_hat| <= 2 for a difference of
    // probability measures and w_k(xi) >= (2 pi r)^{2k} on the shell
    // max_a |xi_a| = r, so the dropped squared mass is at most this sum.
    double tail = 0.0;
    for (long r = q.Xi + 1; r < 100000000L; ++r) {
        const double shell = std::pow(2.0 * r + 1.0, q.d) - std::pow(2.0 * r - 1.0, q.d);
        const double term = 4.0 * shell / std::pow(two_pi * static_cast<double>(r), 2 * p.k);
        tail += term;
        if (term < tail * 1e-16 || term < 1e-300) break;
    }
    out.tail_bound = tail;
    return out;
}

GridFn dual_element(const SignedMeasureCoeffs& q, const SobolevParams& p, int M) {
    p.validate(q.d);
    if (M < 2 * q.Xi)
        throw invalid_input_error("dual_element: grid resolution below 2 Xi");
    GridSpec spec{q.d, 1, M, false};
    GridFn out(spec);
    const std::size_t n = out.size();
    // Per-axis tables of e^{2 pi i xi j / M}.
    const int B = 2 * q.Xi + 1;
    std::vector<std::complex<double>> tab(static_cast<std::size_t>(B) * M);
    for (int f = -q.Xi; f <= q.Xi; ++f)
        for (int j = 0; j < M; ++j)
            tab[static_cast<std::size_t>(f + q.Xi) * M + j] =
                std::polar(1.0, two_pi * f * static_cast<double>(j) / M);
    std::vector<std::complex<double>> acc(n, {0.0, 0.0});
    std::vector<int> xi(q.d), node(q.d);
    for (std::size_t f = 0; f < q.c.size(); ++f) {
        box_freqs(q.d, q.Xi, f, xi);
        const std::complex<double> coef = q.c[f] / sobolev_weight(xi, p.k);
        if (coef == std::complex<double>(0.0, 0.0)) continue;
        for (std::size_t flat = 0; flat < n; ++flat) {
            std::size_t r = flat;
            std::complex<double> e(1.0, 0.0);
            for (int a = q.d - 1; a >= 0; --a) {
                const int j = static_cast<int>(r % M);
                r /= M;
                e *= tab[static_cast<std::size_t>(xi[a] + q.Xi) * M + j];
            }
            acc[flat] += coef * e;
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.v[i] = acc[i].real();
    return out;
}

double sobolev_inner(const GridFn& a, const GridFn& b, int k) {
    if (!(a.spec == b.spec)) throw invalid_input_error("sobolev_inner: grid mismatch");
    SpectralWorkspace ws(a.spec);
    const ModeArray ma = ws.forward(a);
    const ModeArray mb = ws.forward(b);
    const int A = a.spec.axes();
    const int M = a.spec.M;
    const int Mh = M / 2 + 1;
    std::vector<int> freqs(A);
    std::vector<double> terms(ma.c.size());
    for (std::size_t f = 0; f < ma.c.size(); ++f) {
        std::size_t r = f;
        freqs[A - 1] = static_cast<int>(r % Mh);
        r /= Mh;
        for (int ax = A - 2; ax >= 0; --ax) {
            const int idx = static_cast<int>(r % M);
            freqs[ax] = idx <= M / 2 ? idx : idx - M;
            r /= M;
        }
        const double mult = (freqs[A - 1] == 0 || freqs[A - 1] == M / 2) ? 1.0 : 2.0;
        terms[f] = mult * sobolev_weight(freqs, k) *
                   (ma.c[f].real() * mb.c[f].real() + ma.c[f].imag() * mb.c[f].imag());
    }
    return pairwise_sum(terms);
}

double pair_coeffs(const SignedMeasureCoeffs& q, const ModeArray& phi) {
    const int A = phi.spec.axes();
    if (A != q.d) throw invalid_input_error("pair_coeffs: dimension mismatch");
    const int M = phi.spec.M;
    const int Mh = M / 2 + 1;
    std::vector<int> freqs(A), neg(A);
    std::vector<double> terms(phi.c.size(), 0.0);
    for (std::size_t f = 0; f < phi.c.size(); ++f) {
        std::size_t r = f;
        freqs[A - 1] = static_cast<int>(r % Mh);
        r /= Mh;
        for (int ax = A - 2; ax >= 0; --ax) {
            const int idx = static_cast<int>(r % M);
            freqs[ax] = idx <= M / 2 ? idx : idx - M;
            r /= M;
        }
        bool inside = true;
        for (int ax = 0; ax < A; ++ax) {
            if (std::abs(freqs[ax]) > q.Xi) { inside = false; break; }
            neg[ax] = -freqs[ax];
        }
        if (!inside) continue;
        // q(phi) = sum over the full lattice of phi_hat(xi) q_hat(-xi); the
        // stored half-spectrum contributes its conjugate partner as well.
        const std::complex<double> term = phi.c[f] * q.at(neg);
        const double mult = (freqs[A - 1] == 0 || freqs[A - 1] == M / 2) ? 1.0 : 2.0;
        terms[f] = (mult == 1.0) ? term.real() : 2.0 * term.real();
    }
    return pairwise_sum(terms);
}

// ---------------------------------------------------------------------------
// dictionary surrogate for the C^{-k} gap

namespace {

/** Sup norms of derivatives (orders 0..k) of the wrapped Gaussian of width sigma. */
std::vector<double> bump_derivative_sups(double sigma, int k) {
    std::vector<double> sup(k + 1, 0.0);
    const int fine = 4096;
    std::vector<double> he(k + 1);
    for (int g = 0; g < fine; ++g) {
        const double t = static_cast<double>(g) / fine;
        for (int j = 0; j <= k; ++j) {
            double acc = 0.0;
            for (int n = -3; n <= 3; ++n) {
                const double x = (t + n) / sigma;
                he[0] = 1.0;
                if (k >= 1) he[1] = x;
                for (int q = 1; q < j; ++q) he[q + 1] = x * he[q] - q * he[q - 1];
                const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                acc += sign * he[j] * std::exp(-0.5 * x * x) / std::pow(sigma, j);
            }
            sup[j] = std::max(sup[j], std::fabs(acc));
        }
    }
    return sup;
}

double ck_norm_separable(const std::vector<std::vector<double>>& axis_sups, int k) {
    // sum over |j| <= k of prod_a sup|D^{j_a} factor_a|
    std::vector<double> acc(k + 1, 0.0), next(k + 1, 0.0);
    acc[0] = 1.0;
    for (const auto& sups : axis_sups) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int deg = 0; deg <= k; ++deg) {
            if (acc[deg] == 0.0) continue;
            for (int j = 0; deg + j <= k; ++j) next[deg + j] += acc[deg] * sups[j];
        }
        acc.swap(next);
    }
    double s = 0.0;
    for (double x : acc) s += x;
    return s;
}

int measure_dim(const MeasureAny& m) {
    if (const auto* e = std::get_if<EmpiricalMeasure>(&m)) return e->d;
    return std::get<GridMeasure>(m).d;
}

/** Canonical nonzero frequencies ordered by sup norm then lexicographic. */
std::vector<std::vector<int>> canonical_modes(int d, int count) {
    std::vector<std::vector<int>> out;
    for (int radius = 1; static_cast<int>(out.size()) < count && radius <= 64; ++radius) {
        std::vector<int> xi(d, -radius);
        while (true) {
            int sup = 0;
            for (int v : xi) sup = std::max(sup, std::abs(v));
            if (sup == radius) {
                int first = 0;
                for (int v : xi)
                    if (v != 0) { first = v; break; }
                if (first > 0) out.push_back(xi); // one of each +/- pair
            }
            int a = d - 1;
            while (a >= 0 && xi[a] == radius) { xi[a] = -radius; --a; }
            if (a < 0) break;
            ++xi[a];
            if (static_cast<int>(out.size()) >= count) break;
        }
    }
    return out;
}

} // namespace

double c_neg_k_gap(const MeasureAny& mu, const MeasureAny& nu, int k, int S) {
    const int d = measure_dim(mu);
    if (measure_dim(nu) != d) throw invalid_input_error("c_neg_k_gap: dimension mismatch");
    if (k < 0 || S < 1) throw invalid_input_error("c_neg_k_gap: bad k or dictionary size");

    double best = 0.0;
    auto consider = [&](const std::function<double(std::span<const double>)>& phi,
                        double ck_norm) {
        const double gap = std::fabs(integrate(phi, mu) - integrate(phi, nu)) / ck_norm;
        best = std::max(best, gap);
    };

    // Low Fourier modes first: cos and sin per canonical frequency.
    const int n_modes = (S + 2) / 3 * 2 >= S ? S : (S + 2) / 3 * 2; // about two thirds
    int emitted = 0;
    for (const auto& xi : canonical_modes(d, (n_modes + 1) / 2)) {
        const double ck = ck_norm_of_mode(xi, k);
        if (emitted < n_modes) {
            consider([&xi](std::span<const double> x) {
                double ph = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) ph += xi[a] * x[a];
                return std::cos(two_pi * ph);
            }, ck);
            ++emitted;
        }
        if (emitted < n_modes) {
            consider([&xi](std::span<const double> x) {
                double ph = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) ph += xi[a] * x[a];
                return std::sin(two_pi * ph);
            }, ck);
            ++emitted;
        }
        if (emitted >= n_modes) break;
    }

    // Wrapped Gaussian bumps on a lattice of centers.
    const int n_bumps = S - emitted;
    if (n_bumps > 0) {
        const double sigma = 0.15;
        static const std::vector<double> sups_cache = bump_derivative_sups(0.15, 8);
        std::vector<double> sups(sups_cache.begin(),
                                 sups_cache.begin() + std::min<std::size_t>(k + 1, sups_cache.size()));
        if (static_cast<int>(sups.size()) < k + 1) {
            const auto full = bump_derivative_sups(sigma, k);
            sups.assign(full.begin(), full.end());
        }
        const double ck = ck_norm_separable(std::vector<std::vector<double>>(d, sups), k);
        int G = 1;
        while (std::pow(G, d) < n_bumps) ++G;
        int placed = 0;
        std::vector<int> cell(d, 0);
        while (placed < n_bumps) {
            std::vector<double> center(d);
            for (int a = 0; a < d; ++a) center[a] = (cell[a] + 0.5) / G;
            consider([center, sigma](std::span<const double> x) {
                double p = 1.0;
                for (std::size_t a = 0; a < x.size(); ++a) {
                    double s = 0.0;
                    for (int n = -3; n <= 3; ++n) {
                        const double t = (x[a] - center[a] + n) / sigma;
                        s += std::exp(-0.5 * t * t);
                    }
                    p *= s;
                }
                return p;
            }, ck);
            ++placed;
            int a = d - 1;
            while (a >= 0 && cell[a] == G - 1) { cell[a] = 0; --a; }
            if (a < 0) break;
            ++cell[a];
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// sampling

namespace {

std::vector<double> sample_from_empirical(const EmpiricalMeasure& m, int n, Rng& rng) {
    std::vector<double> cdf(m.size());
    double run = 0.0;
    for (int i = 0; i < m.size(); ++i) { run += m.w[i]; cdf[i] = run; }
    std::vector<double> out(static_cast<std::size_t>(n) * m.d);
    for (int s = 0; s < n; ++s) {
        const double u = rng.uniform01() * run;
        const int pick = static_cast<int>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto a = m.atom(std::min(pick, m.size() - 1));
        for (int c = 0; c < m.d; ++c) out[static_cast<std::size_t>(s) * m.d + c] = a[c];
    }
    return out;
}

std::vector<double> sample_from_grid(const GridMeasure& g, int n, Rng& rng) {
    const int d = g.d, M = g.M;
    const std::size_t cells = g.nodes(); // one cell per node, [j, j+1)/M per axis
    const int corners = 1 << d;

    // Cell masses for the piecewise-multilinear density: volume times corner mean.
    std::vector<double> cdf(cells);
    std::vector<std::size_t> strides(d, 1);
    for (int a = d - 2; a >= 0; --a) strides[a] = strides[a + 1] * M;
    auto corner_value = [&](std::size_t cell, int mask) {
        std::size_t flat = 0, r = cell;
        std::vector<int> idx(d);
        for (int a = d - 1; a >= 0; --a) { idx[a] = static_cast<int>(r % M); r /= M; }
        for (int a = 0; a < d; ++a) {
            int j = idx[a] + ((mask >> a) & 1);
            if (j == M) j = 0;
            flat += static_cast<std::size_t>(j) * strides[a];
        }
        return g.rho[flat];
    };
    double run = 0.0;
    for (std::size_t cidx = 0; cidx < cells; ++cidx) {
        double mean = 0.0;
        for (int mask = 0; mask < corners; ++mask) mean += corner_value(cidx, mask);
        mean /= corners;
        run += mean; // common factor dx^d cancels in the normalized cdf
        cdf[cidx] = run;
    }

    std::vector<double> out(static_cast<std::size_t>(n) * d);
    std::vector<double> cv(corners), collapsed(corners);
    for (int s = 0; s < n; ++s) {
        const double u = rng.uniform01() * run;
        const std::size_t cell = std::min<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cells - 1);
        std::vector<int> idx(d);
        std::size_t r = cell;
        for (int a = d - 1; a >= 0; --a) { idx[a] = static_cast<int>(r % M); r /= M; }
        for (int mask = 0; mask < corners; ++mask) cv[mask] = corner_value(cell, mask);

        // Within the cell the density is multilinear; sample one coordinate at
        // a time from its (linear) marginal, then condition the corner values.
        int rem = d;
        for (int a = 0; a < d; ++a) {
            const int half = 1 << (rem - 1);
            double a0 = 0.0, a1 = 0.0;
            for (int m2 = 0; m2 < half; ++m2) { a0 += cv[m2]; a1 += cv[m2 + half]; }
            a0 /= half; a1 /= half;
            const double su = rng.uniform01();
            double t;
            const double total = 0.5 * (a0 + a1);
            if (std::fabs(a1 - a0) < 1e-14 * (a0 + a1 + 1e-300)) {
                t = su;
            } else {
                const double disc = a0 * a0 + (a1 - a0) * (a0 + a1) * su;
                t = (-a0 + std::sqrt(std::max(0.0, disc))) / (a1 - a0);
                t = std::clamp(t, 0.0, 1.0);
            }
            (void)total;
            out[static_cast<std::size_t>(s) * d + a] = wrap1((idx[a] + t) / M);
            for (int m2 = 0; m2 < half; ++m2)
                collapsed[m2] = (1.0 - t) * cv[m2] + t * cv[m2 + half];
            std::copy(collapsed.begin(), collapsed.begin() + half, cv.begin());
            --rem;
        }
    }
    return out;
}

} // namespace

std::vector<double> sample_tensor(const MeasureAny& m, int n, Rng& rng) {
    if (n < 0) throw invalid_input_error("sample_tensor: negative draw count");
    if (const auto* e = std::get_if<EmpiricalMeasure>(&m))
        return sample_from_empirical(*e, n, rng);
    return sample_from_grid(std::get<GridMeasure>(m), n, rng);
}

// ---------------------------------------------------------------------------
// CSV interchange

void write_empirical_csv(const std::string& path, const EmpiricalMeasure& m) {
    std::ofstream f(path);
    if (!f) throw invalid_input_error("cannot open for writing: " + path);
    f << "w";
    for (int c = 1; c <= m.d; ++c) f << ",x" << c;
    f << "\n";
    f.precision(17);
    for (int i = 0; i < m.size(); ++i) {
        f << m.w[i];
        const auto a = m.atom(i);
        for (int c = 0; c < m.d; ++c) f << "," << a[c];
        f << "\n";
    }
    if (!f) throw invalid_input_error("write failed: " + path);
}

EmpiricalMeasure read_empirical_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw invalid_input_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw invalid_input_error(path + ": empty file");
    int d = 0;
    {
        std::stringstream hs(line);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            col.erase(std::remove_if(col.begin(), col.end(), ::isspace), col.end());
            if (first) {
                if (col != "w") throw invalid_input_error(path + ": header must start with w");
                first = false;
            } else {
                ++d;
            }
        }
    }
    if (d < 1) throw invalid_input_error(path + ": no coordinate columns");
    std::vector<double> coords, weights;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw invalid_input_error(path + ":" + std::to_string(lineno) +
                                          ": bad number '" + cell + "'");
            }
        }
        if (static_cast<int>(row.size()) != d + 1)
            throw invalid_input_error(path + ":" + std::to_string(lineno) +
                                      ": expected " + std::to_string(d + 1) + " columns");
        weights.push_back(row[0]);
        for (int c = 1; c <= d; ++c) coords.push_back(row[c]);
    }
    return EmpiricalMeasure::make(d, std::move(coords), std::move(weights));
}

} // namespace mfhjb
