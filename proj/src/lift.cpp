#include "mfhjb/lift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "mfhjb/errors.hpp"
#include "mfhjb/numeric.hpp"
#include "mfhjb/rng.hpp"

namespace mfhjb {

namespace {

constexpr std::uint64_t lift_tag = 0x6c696674ULL;  // stream labels, arbitrary
constexpr std::uint64_t deriv_tag = 0x64657276ULL;
constexpr std::uint64_t pair_tag = 0x70616972ULL;
constexpr std::uint64_t mset_tag = 0x6d736574ULL;

void check_lift_grid(const GridSpec& spec, const MeasureAny& m) {
    if (spec.has_z)
        throw unsupported_error("lift: translation-block grids are not lifted");
    const int md = std::holds_alternative<EmpiricalMeasure>(m)
                       ? std::get<EmpiricalMeasure>(m).d
                       : std::get<GridMeasure>(m).d;
    if (md != spec.d)
        throw invalid_input_error("lift: measure dimension does not match grid");
}

/** Node weights of a grid-measure on the value grid's single-particle nodes:
 *  density sampled at nodes (interpolated if resolutions differ), normalized
 *  to total mass one. */
std::vector<double> node_weights(const GridMeasure& gm, int d, int M) {
    std::vector<double> w;
    if (gm.M == M) {
        w = gm.rho;
    } else {
        GridFn density(GridSpec{d, 1, gm.M, false});
        density.v = gm.rho;
        const GridSpec target{d, 1, M, false};
        w.resize(target.node_count());
        std::vector<double> pt(static_cast<std::size_t>(d));
        const std::size_t n = w.size();
        for (std::size_t j = 0; j < n; ++j) {
            node_coords(target, j, pt);
            w[j] = std::max(0.0, interpolate(density, pt));
        }
    }
    double total = pairwise_sum(w);
    if (total <= 0.0)
        throw invalid_input_error("lift: grid measure has no mass on the value grid");
    for (double& x : w) x /= total;
    return w;
}

double exact_grid_lift(const GridFn& V, const GridMeasure& gm) {
    const GridSpec& spec = V.spec;
    const std::vector<double> w = node_weights(gm, spec.d, spec.M);
    const std::size_t block = w.size(); // M^d single-particle nodes
    const std::size_t n = V.v.size();
    const int N = spec.N;
    double acc = 0.0, comp = 0.0; // Kahan: many small product weights
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t rem = flat;
        double wp = 1.0;
        for (int i = N - 1; i >= 0; --i) { // row-major: block 0 slowest
            wp *= w[rem % block];
            rem /= block;
        }
        const double term = wp * V.v[flat] - comp;
        const double next = acc + term;
        comp = (next - acc) - term;
        acc = next;
    }
    return acc;
}

double exact_empirical_lift(const GridFn& V, const EmpiricalMeasure& em,
                            std::uint64_t exact_cap, std::size_t* tuples_out) {
    const GridSpec& spec = V.spec;
    const int N = spec.N, d = spec.d;
    const std::size_t n = em.size();
    double count = 1.0;
    for (int i = 0; i < N; ++i) count *= static_cast<double>(n);
    if (count > static_cast<double>(exact_cap))
        throw resource_error("lift: " + std::to_string(count) +
                             " atom tuples exceed the exact-tensor cap; use monte-carlo");
    const std::size_t tuples = static_cast<std::size_t>(count);
    if (tuples_out) *tuples_out = tuples;
    std::vector<std::size_t> idx(static_cast<std::size_t>(N), 0);
    std::vector<double> pt(static_cast<std::size_t>(N) * d);
    std::vector<double> terms;
    terms.reserve(tuples);
    for (std::size_t t = 0; t < tuples; ++t) {
        double wp = 1.0;
        for (int i = 0; i < N; ++i) {
            wp *= em.w[idx[static_cast<std::size_t>(i)]];
            const auto a = em.atom(static_cast<int>(idx[static_cast<std::size_t>(i)]));
            std::copy(a.begin(), a.end(), pt.begin() + static_cast<std::ptrdiff_t>(i) * d);
        }
        terms.push_back(wp * interpolate(V, pt));
        for (int i = N - 1; i >= 0; --i) {
            auto& e = idx[static_cast<std::size_t>(i)];
            if (++e < n) break;
            e = 0;
        }
    }
    return pairwise_sum(terms);
}

} // namespace

LiftEvaluation lift_value(const GridFn& V, const MeasureAny& m, LiftMethod method,
                          int samples, std::uint64_t seed, std::uint64_t exact_cap) {
    check_lift_grid(V.spec, m);
    LiftEvaluation out;
    out.method = method;
    if (method == LiftMethod::ExactTensor) {
        if (std::holds_alternative<GridMeasure>(m)) {
            out.value = exact_grid_lift(V, std::get<GridMeasure>(m));
            out.samples = V.v.size();
        } else {
            std::size_t tuples = 0;
            out.value = exact_empirical_lift(V, std::get<EmpiricalMeasure>(m), exact_cap, &tuples);
            out.samples = tuples;
        }
        return out;
    }
    if (samples < 1) throw invalid_input_error("lift: sample count must be positive");
    Rng rng = Rng::stream(seed, {lift_tag});
    const int N = V.spec.N;
    std::vector<double> vals(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
        const std::vector<double> draw = sample_tensor(m, N, rng);
        vals[static_cast<std::size_t>(s)] = interpolate(V, draw);
    }
    const MeanStderr ms = mean_stderr(vals);
    out.value = ms.mean;
    out.stderr_ = ms.stderr_;
    out.samples = static_cast<std::size_t>(samples);
    return out;
}

LiftEvaluation project_vhat(const SolutionTrajectory& traj, double t, const MeasureAny& m,
                            LiftMethod method, int samples, std::uint64_t seed) {
    const Snapshot& snap = traj.at_time(t);
    LiftEvaluation out = lift_value(snap.values, m, method, samples, seed);
    out.t = snap.t;
    return out;
}

GridFn vhat_derivative_grid(const GridFn& V, const MeasureAny& m, LiftMethod method,
                            int samples, std::uint64_t seed) {
    check_lift_grid(V.spec, m);
    const GridSpec& spec = V.spec;
    const int N = spec.N, d = spec.d;
    const GridSpec single{d, 1, spec.M, false};
    GridFn out(single);
    const std::size_t B = out.v.size();

    if (method == LiftMethod::ExactTensor && std::holds_alternative<GridMeasure>(m)) {
        const std::vector<double> w = node_weights(std::get<GridMeasure>(m), d, spec.M);
        const std::size_t n = V.v.size();
        std::vector<std::size_t> digit(static_cast<std::size_t>(N));
        std::vector<double> pre(static_cast<std::size_t>(N) + 1);
        std::vector<double> suf(static_cast<std::size_t>(N) + 1);
        for (std::size_t flat = 0; flat < n; ++flat) {
            std::size_t rem = flat;
            for (int i = N - 1; i >= 0; --i) {
                digit[static_cast<std::size_t>(i)] = rem % B;
                rem /= B;
            }
            pre[0] = 1.0;
            for (int i = 0; i < N; ++i)
                pre[static_cast<std::size_t>(i) + 1] =
                    pre[static_cast<std::size_t>(i)] * w[digit[static_cast<std::size_t>(i)]];
            suf[static_cast<std::size_t>(N)] = 1.0;
            for (int i = N - 1; i >= 0; --i)
                suf[static_cast<std::size_t>(i)] =
                    suf[static_cast<std::size_t>(i) + 1] * w[digit[static_cast<std::size_t>(i)]];
            const double v = V.v[flat];
            for (int i = 0; i < N; ++i)
                out.v[digit[static_cast<std::size_t>(i)]] +=
                    pre[static_cast<std::size_t>(i)] * suf[static_cast<std::size_t>(i) + 1] * v;
        }
    } else {
        // Empirical exact: enumerate (N-1)-tuples of atoms; monte-carlo: sample
        // them.  Either way each tuple contributes one interpolated value per
        // (slot, node).
        const bool exact = method == LiftMethod::ExactTensor;
        const EmpiricalMeasure* em =
            std::holds_alternative<EmpiricalMeasure>(m) ? &std::get<EmpiricalMeasure>(m) : nullptr;
        if (exact && !em)
            throw invalid_input_error("lift derivative: unexpected measure kind");
        std::size_t tuples = 1;
        if (exact) {
            double count = 1.0;
            for (int i = 0; i + 1 < N; ++i) count *= static_cast<double>(em->size());
            const double work = count * static_cast<double>(N) * static_cast<double>(B);
            if (work > 2.0e7)
                throw resource_error("lift derivative: exact enumeration too large; use monte-carlo");
            tuples = static_cast<std::size_t>(count);
        } else {
            if (samples < 1) throw invalid_input_error("lift: sample count must be positive");
            tuples = static_cast<std::size_t>(samples);
        }
        Rng rng = Rng::stream(seed, {deriv_tag});
        std::vector<std::size_t> idx(N > 1 ? static_cast<std::size_t>(N - 1) : 0, 0);
        std::vector<double> rest;
        std::vector<double> pt(static_cast<std::size_t>(N) * d);
        std::vector<double> node(static_cast<std::size_t>(d));
        double wsum = 0.0;
        for (std::size_t s = 0; s < tuples; ++s) {
            double wp = 1.0;
            if (exact) {
                rest.resize(static_cast<std::size_t>(N - 1) * d);
                for (int i = 0; i + 1 < N; ++i) {
                    const auto a = em->atom(static_cast<int>(idx[static_cast<std::size_t>(i)]));
                    std::copy(a.begin(), a.end(), rest.begin() + static_cast<std::ptrdiff_t>(i) * d);
                    wp *= em->w[idx[static_cast<std::size_t>(i)]];
                }
            } else {
                rest = N > 1 ? sample_tensor(m, N - 1, rng) : std::vector<double>{};
                wp = 1.0 / static_cast<double>(tuples);
            }
            wsum += wp;
            for (std::size_t j = 0; j < B; ++j) {
                node_coords(single, j, node);
                for (int slot = 0; slot < N; ++slot) {
                    // other slots take the tuple points in order
                    int r = 0;
                    for (int i = 0; i < N; ++i) {
                        double* dst = pt.data() + static_cast<std::ptrdiff_t>(i) * d;
                        if (i == slot) {
                            std::copy(node.begin(), node.end(), dst);
                        } else {
                            std::copy(rest.begin() + static_cast<std::ptrdiff_t>(r) * d,
                                      rest.begin() + static_cast<std::ptrdiff_t>(r + 1) * d, dst);
                            ++r;
                        }
                    }
                    out.v[j] += wp * interpolate(V, pt);
                }
            }
            if (exact && N > 1) {
                for (int i = N - 2; i >= 0; --i) {
                    auto& e = idx[static_cast<std::size_t>(i)];
                    if (++e < static_cast<std::size_t>(em->size())) break;
                    e = 0;
                }
            }
        }
        if (wsum > 0.0 && std::abs(wsum - 1.0) > 1e-12)
            for (double& x : out.v) x /= wsum; // weighted empirical tuples
    }

    const double mean = pairwise_mean(out.v);
    for (double& x : out.v) x -= mean; // zero grid average fixes the constant
    return out;
}

double vhat_linear_derivative(const SolutionTrajectory& traj, double t, const MeasureAny& m,
                              const TorusPoint& x, LiftMethod method, int samples,
                              std::uint64_t seed) {
    const Snapshot& snap = traj.at_time(t);
    const GridFn g = vhat_derivative_grid(snap.values, m, method, samples, seed);
    return interpolate(g, x.x);
}

namespace {

double metric_value(LiftMetric metric, const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                    const SobolevParams& sp, int c_neg_modes) {
    switch (metric) {
        case LiftMetric::D1:
            return d1_auto(a, b);
        case LiftMetric::HNegK:
            return h_neg_k_norm(coeffs_difference(a, b, sp.Xi), sp).value;
        case LiftMetric::CNegKSurrogate:
            return c_neg_k_gap(MeasureAny{a}, MeasureAny{b}, sp.k, c_neg_modes);
    }
    throw invalid_input_error("lipschitz_profile: unknown metric");
}

EmpiricalMeasure uniform_atoms(int d, int n, Rng& rng) {
    std::vector<double> xs(static_cast<std::size_t>(n) * d);
    for (double& x : xs) x = rng.uniform01();
    return EmpiricalMeasure::uniform(d, std::move(xs));
}

} // namespace

LipschitzProfile lipschitz_profile(const SolutionTrajectory& traj, double t, LiftMetric metric,
                                   const PairSamplerSpec& sampler, int pairs,
                                   std::uint64_t seed, const SobolevParams& sp) {
    if (pairs < 1) throw invalid_input_error("lipschitz_profile: need at least one pair");
    if (sampler.atoms < 1) throw invalid_input_error("lipschitz_profile: need at least one atom");
    const Snapshot& snap = traj.at_time(t);
    const GridSpec& spec = snap.values.spec;
    if (spec.has_z) throw unsupported_error("lipschitz_profile: translation-block grids");
    const int d = spec.d;

    // pair kinds: jitter at each scale, weight perturbation, independent redraw
    enum class Kind { Jitter, Reweight, Independent };
    std::vector<std::pair<Kind, double>> kinds;
    for (double s : sampler.jitter_scales) kinds.emplace_back(Kind::Jitter, s);
    const bool weights_ok = metric != LiftMetric::D1 || d == 1; // matching d1 needs uniform weights
    if (sampler.include_reweight && weights_ok) kinds.emplace_back(Kind::Reweight, 0.0);
    if (sampler.include_independent) kinds.emplace_back(Kind::Independent, 0.0);
    if (kinds.empty()) throw invalid_input_error("lipschitz_profile: no pair kinds enabled");

    Rng rng = Rng::stream(seed, {pair_tag});
    LipschitzProfile out;
    for (int p = 0; p < pairs; ++p) {
        EmpiricalMeasure a = uniform_atoms(d, sampler.atoms, rng);
        EmpiricalMeasure b = a;
        const auto [kind, scale] = kinds[static_cast<std::size_t>(p) % kinds.size()];
        switch (kind) {
            case Kind::Jitter:
                for (double& x : b.xs) x = wrap1(x + scale * rng.normal());
                break;
            case Kind::Reweight: {
                double total = 0.0;
                for (double& w : b.w) total += (w = rng.uniform(0.5, 1.5));
                for (double& w : b.w) w /= total;
                break;
            }
            case Kind::Independent:
                b = uniform_atoms(d, sampler.atoms, rng);
                break;
        }
        const double dist = metric_value(metric, a, b, sp, sampler.c_neg_modes);
        if (dist < 1e-10) {
            ++out.pairs_skipped;
            continue;
        }
        const double va = lift_value(snap.values, MeasureAny{a}).value;
        const double vb = lift_value(snap.values, MeasureAny{b}).value;
        out.ratios.push_back(std::abs(va - vb) / dist);
    }
    if (out.ratios.empty())
        throw diagnostic_error("lipschitz_profile: every sampled pair was degenerate");
    out.pairs_used = out.ratios.size();
    out.max_ratio = *std::max_element(out.ratios.begin(), out.ratios.end());
    out.mean_ratio = pairwise_mean(out.ratios);
    std::vector<double> sorted = out.ratios;
    std::sort(sorted.begin(), sorted.end());
    out.median_ratio = sorted[sorted.size() / 2];
    return out;
}

std::vector<MeasureAny> default_measure_set(int d, int M, std::uint64_t seed) {
    if (d < 1 || M < 4) throw invalid_input_error("default_measure_set: need d >= 1, M >= 4");
    Rng rng = Rng::stream(seed, {mset_tag});
    std::vector<MeasureAny> out;
    for (int K : {2, 3, 4, 5}) { // lattice empiricals with random phase
        std::vector<double> xs(static_cast<std::size_t>(K) * d);
        for (int c = 0; c < d; ++c) {
            const double off = rng.uniform01();
            for (int j = 0; j < K; ++j)
                xs[static_cast<std::size_t>(j) * d + c] = wrap1((j + off) / K);
        }
        out.emplace_back(EmpiricalMeasure::uniform(d, std::move(xs)));
    }
    const GridSpec single{d, 1, M, false};
    for (int s = 0; s < 2; ++s) { // smooth positive densities from low modes
        GridFn f(single);
        std::vector<double> amp1(static_cast<std::size_t>(d)), ph1(amp1), amp2(amp1), ph2(amp1);
        for (int c = 0; c < d; ++c) {
            amp1[static_cast<std::size_t>(c)] = rng.uniform(0.2, 0.5);
            ph1[static_cast<std::size_t>(c)] = rng.uniform(0.0, 1.0);
            amp2[static_cast<std::size_t>(c)] = rng.uniform(0.1, 0.25);
            ph2[static_cast<std::size_t>(c)] = rng.uniform(0.0, 1.0);
        }
        std::vector<double> pt(static_cast<std::size_t>(d));
        double maxabs = 0.0;
        for (std::size_t j = 0; j < f.v.size(); ++j) {
            node_coords(single, j, pt);
            double val = 0.0;
            for (int c = 0; c < d; ++c) {
                val += amp1[static_cast<std::size_t>(c)] *
                       std::cos(two_pi * (pt[static_cast<std::size_t>(c)] + ph1[static_cast<std::size_t>(c)]));
                val += amp2[static_cast<std::size_t>(c)] *
                       std::cos(2.0 * two_pi * (pt[static_cast<std::size_t>(c)] + ph2[static_cast<std::size_t>(c)]));
            }
            f.v[j] = val;
            maxabs = std::max(maxabs, std::abs(val));
        }
        std::vector<double> rho(f.v.size());
        for (std::size_t j = 0; j < rho.size(); ++j)
            rho[j] = 1.0 + 0.8 * f.v[j] / std::max(maxabs, 1e-12);
        const double mean = pairwise_mean(rho);
        for (double& r : rho) r /= mean;
        out.emplace_back(GridMeasure::make(d, M, std::move(rho)));
    }
    return out;
}

ConvergenceTable convergence_table(const ConvergenceInputs& in) {
    if (in.Ns.empty()) throw invalid_input_error("convergence_table: empty N list");
    for (std::size_t i = 1; i < in.Ns.size(); ++i)
        if (in.Ns[i] <= in.Ns[i - 1])
            throw invalid_input_error("convergence_table: N list must be strictly increasing");
    if (in.times.empty()) throw invalid_input_error("convergence_table: empty time list");
    if (in.measures.empty()) throw invalid_input_error("convergence_table: empty measure set");
    if (!in.solve_for) throw invalid_input_error("convergence_table: missing solver callback");

    const std::size_t nN = in.Ns.size(), nT = in.times.size(), nM = in.measures.size();
    ConvergenceTable table;
    table.Ns = in.Ns;
    table.times = in.times;

    std::vector<double> values(nN * nT * nM, 0.0), errs(nN * nT * nM, 0.0);
    std::vector<double> d1_lip(nN, 0.0), hk_lip(nN, 0.0), sc1(nN, 0.0), sc2(nN, 0.0);
    table.holder_ratio.assign(nN, 0.0);
    const auto at = [&](std::size_t i, std::size_t j, std::size_t k) {
        return (i * nT + j) * nM + k;
    };

    for (std::size_t i = 0; i < nN; ++i) {
        const SolutionTrajectory traj = in.solve_for(in.Ns[i]);
        for (std::size_t j = 0; j < nT; ++j) {
            for (std::size_t k = 0; k < nM; ++k) {
                std::uint64_t state =
                    in.seed ^ (static_cast<std::uint64_t>(in.Ns[i]) << 32) ^ k;
                const std::uint64_t s = splitmix64(state);
                const LiftEvaluation ev =
                    project_vhat(traj, in.times[j], in.measures[k], in.method, in.mc_samples, s);
                values[at(i, j, k)] = ev.value;
                errs[at(i, j, k)] = ev.stderr_;
            }
        }
        PairSamplerSpec sampler;
        sampler.atoms = in.lip_atoms;
        d1_lip[i] = lipschitz_profile(traj, in.times[0], LiftMetric::D1, sampler, in.lip_pairs,
                                      in.seed + static_cast<std::uint64_t>(in.Ns[i]), in.sobolev)
                        .max_ratio;
        hk_lip[i] = lipschitz_profile(traj, in.times[0], LiftMetric::HNegK, sampler, in.lip_pairs,
                                      in.seed + static_cast<std::uint64_t>(in.Ns[i]), in.sobolev)
                        .max_ratio;
        const DerivativeNorms dn = derivative_sup_norms(traj, in.times[0], 2);
        sc1[i] = dn.scaled[0];
        sc2[i] = dn.scaled[1];
        double holder = 0.0;
        for (std::size_t j = 0; j < nT; ++j)
            for (std::size_t j2 = j + 1; j2 < nT; ++j2) {
                const double dtm = std::sqrt(std::abs(in.times[j] - in.times[j2]));
                if (dtm < 1e-9) continue;
                for (std::size_t k = 0; k < nM; ++k)
                    holder = std::max(holder,
                                      std::abs(values[at(i, j, k)] - values[at(i, j2, k)]) / dtm);
            }
        table.holder_ratio[i] = holder;
    }

    const double qnan = std::numeric_limits<double>::quiet_NaN();
    table.gaps.assign(nN > 1 ? nN - 1 : 0, 0.0);
    for (std::size_t i = 0; i < nN; ++i)
        for (std::size_t j = 0; j < nT; ++j)
            for (std::size_t k = 0; k < nM; ++k) {
                ConvergenceRow row;
                row.N = in.Ns[i];
                row.t = in.times[j];
                row.measure_id = static_cast<int>(k);
                row.value = values[at(i, j, k)];
                row.stderr_ = errs[at(i, j, k)];
                if (i + 1 < nN) {
                    row.gap_to_next = std::abs(values[at(i + 1, j, k)] - values[at(i, j, k)]);
                    table.gaps[i] = std::max(table.gaps[i], row.gap_to_next);
                } else {
                    row.gap_to_next = qnan;
                }
                row.d1_lip = d1_lip[i];
                row.hk_lip = hk_lip[i];
                row.scaled_d1 = sc1[i];
                row.scaled_d2 = sc2[i];
                table.rows.push_back(row);
            }

    // Aitken acceleration on the last three values per (t, m); empirical only.
    table.extrapolated.assign(nT * nM, qnan);
    for (std::size_t j = 0; j < nT; ++j)
        for (std::size_t k = 0; k < nM; ++k) {
            double est = values[at(nN - 1, j, k)];
            if (nN >= 3) {
                const double v1 = values[at(nN - 3, j, k)];
                const double v2 = values[at(nN - 2, j, k)];
                const double v3 = values[at(nN - 1, j, k)];
                const double denom = (v3 - v2) - (v2 - v1);
                if (std::abs(denom) > 1e-14) est = v3 - (v3 - v2) * (v3 - v2) / denom;
            }
            table.extrapolated[j * nM + k] = est;
        }

    // log-log slope of the gap sequence against N; reported as empirical
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < table.gaps.size(); ++i)
        if (table.gaps[i] > 0.0) {
            lx.push_back(std::log(static_cast<double>(in.Ns[i])));
            ly.push_back(std::log(table.gaps[i]));
        }
    if (lx.size() >= 2) {
        const double mx = pairwise_mean(lx), my = pairwise_mean(ly);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            num += (lx[i] - mx) * (ly[i] - my);
            den += (lx[i] - mx) * (lx[i] - mx);
        }
        table.extrapolation_order = den > 0.0 ? -num / den : qnan;
    } else {
        table.extrapolation_order = qnan;
    }
    return table;
}

void write_convergence_csv(const std::string& path, const ConvergenceTable& table) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    out << "N,t,measure_id,value,stderr,gap_to_next_N,d1_lip,hk_lip,scaled_D1,scaled_D2\n";
    out << std::setprecision(17);
    for (const ConvergenceRow& r : table.rows) {
        out << r.N << ',' << r.t << ',' << r.measure_id << ',' << r.value << ',' << r.stderr_
            << ',';
        if (std::isnan(r.gap_to_next))
            out << "nan";
        else
            out << r.gap_to_next;
        out << ',' << r.d1_lip << ',' << r.hk_lip << ',' << r.scaled_d1 << ',' << r.scaled_d2
            << '\n';
    }
    if (!out) throw invalid_input_error("write failed: " + path);
}

} // namespace mfhjb
