#pragma once

// Fast transform for circulant Gram matrices on lattice nodes.
//
// V is the n x n matrix V[j,k] = exp(+2*pi*i*j*k/n), so V^H V = n I and the
// first row and column of V are all ones. The fast transform of b is V^H b,
// i.e. the ordinary forward DFT
//
//   (V^H b)_k = sum_j b_j exp(-2*pi*i*j*k/n),
//
// computed by an iterative radix-2 decimation-in-time FFT.
//
// Summation order of bin 0: the butterflies never multiply the k = 0 term, so
// (V^H b)_0 is exactly the even/odd recursive sum
//   S(b) = S(b[0::2]) + S(b[1::2]),   S of a single element = that element,
// which is what pairwise_sum() below computes without an FFT.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "bcub/errors.hpp"
#include "bcub/kernel.hpp"
#include "bcub/lattice.hpp"

namespace bcub {

using complex_vector = std::vector<std::complex<double>>;

[[nodiscard]] constexpr bool is_power_of_two(std::size_t n) noexcept {
    return n != 0 && (n & (n - 1)) == 0;
}

/// The even/odd recursive sum that coincides with bin 0 of the fast transform.
[[nodiscard]] inline double pairwise_sum(std::span<const double> b) {
    if (!is_power_of_two(b.size()))
        throw std::invalid_argument("pairwise_sum: length must be a power of two");
    // Bit-reverse, then add adjacent blocks level by level, as the DIT butterflies do.
    const std::size_t n = b.size();
    std::vector<double> a(b.begin(), b.end());
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 1; len < n; len <<= 1)
        for (std::size_t i = 0; i < n; i += 2 * len) a[i] = a[i] + a[i + len];
    return a[0];
}

/// Precomputed twiddles for one transform length. Immutable, shareable across threads.
template <class Real>
class BasicFftPlan {
public:
    using value_type = std::complex<Real>;

    explicit BasicFftPlan(std::size_t n) : n_(n) {
        if (!is_power_of_two(n))
            throw std::invalid_argument("FftPlan: length must be a power of two");
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const Real angle = Real(-2) * std::numbers::pi_v<Real> * static_cast<Real>(k) / static_cast<Real>(n);
            twiddle_[k] = {std::cos(angle), std::sin(angle)};
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// In place: data <- V^H data.
    void forward(std::span<value_type> data) const {
        if (data.size() != n_) throw std::invalid_argument("FftPlan::forward: length mismatch");
        bit_reverse(data);
        for (std::size_t len = 1; len < n_; len <<= 1) {
            const std::size_t stride = n_ / (2 * len);
            for (std::size_t i = 0; i < n_; i += 2 * len) {
                // k = 0: twiddle is exactly 1, no multiply.
                {
                    const auto u = data[i];
                    const auto v = data[i + len];
                    data[i] = {u.real() + v.real(), u.imag() + v.imag()};
                    data[i + len] = {u.real() - v.real(), u.imag() - v.imag()};
                }
                for (std::size_t k = 1; k < len; ++k) {
                    const auto w = twiddle_[k * stride];
                    const auto u = data[i + k];
                    const auto x = data[i + k + len];
                    const Real vr = x.real() * w.real() - x.imag() * w.imag();
                    const Real vi = x.real() * w.imag() + x.imag() * w.real();
                    data[i + k] = {u.real() + vr, u.imag() + vi};
                    data[i + k + len] = {u.real() - vr, u.imag() - vi};
                }
            }
        }
    }

    /// In place: data <- (1/n) V data, the inverse of forward().
    void inverse(std::span<value_type> data) const {
        for (auto& z : data) z = std::conj(z);
        forward(data);
        const Real scale = Real(1) / static_cast<Real>(n_);
        for (auto& z : data) z = std::conj(z) * scale;
    }

private:
    static void bit_reverse(std::span<value_type> a) {
        const std::size_t n = a.size();
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
    }

    std::size_t n_;
    std::vector<value_type> twiddle_;
};

using FftPlan = BasicFftPlan<double>;

[[nodiscard]] inline complex_vector fast_transform(std::span<const std::complex<double>> b) {
    FftPlan plan(b.size());
    complex_vector out(b.begin(), b.end());
    plan.forward(out);
    return out;
}

[[nodiscard]] inline complex_vector fast_transform(std::span<const double> b) {
    FftPlan plan(b.size());
    complex_vector out(b.begin(), b.end());
    plan.forward(out);
    return out;
}

[[nodiscard]] inline complex_vector inverse_transform(std::span<const std::complex<double>> b) {
    FftPlan plan(b.size());
    complex_vector out(b.begin(), b.end());
    plan.inverse(out);
    return out;
}

/// First Gram column C1[i] = c0(x_i, x_0) on the lattice nodes, nodes generated on the fly.
[[nodiscard]] inline std::vector<double> gram_first_column(const LatticeRule& rule,
                                                           const KernelParams& params) {
    validate(rule);
    validate(params);
    const std::size_t n = rule.size();
    const std::size_t d = rule.dim();
    const double sg = detail::factor_sign(params.r) * params.gamma;
    const int degree = 2 * params.r;
    std::vector<double> origin(d);
    rule.node(0, origin);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t l = 0; l < d; ++l)
            prod *= 1.0 + sg * bernoulli_poly(degree, std::abs(rule.coord(i, l) - origin[l]));
        col[i] = prod;
    }
    return col;
}

namespace detail {

// out[i] = c0(x_i, x_0) - 1; returns the long double sum. x_i - x_0 is congruent
// to (i z mod n) / n and B_2r(t) = B_2r(1 - t), so the column depends on the
// exact lattice residues only, not on the shift.
template <int Degree>
long double excess_column(const LatticeRule& rule, double gamma, complex_vector& out) {
    const std::size_t n = rule.size();
    const std::size_t d = rule.dim();
    const std::uint64_t mask = n - 1;
    const long double inv_n = 1.0L / static_cast<long double>(n);
    const long double sg = static_cast<long double>(factor_sign(Degree / 2) * gamma);
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double e = 0.0L;
        for (std::size_t l = 0; l < d; ++l) {
            const std::uint64_t k = (static_cast<std::uint64_t>(i) * rule.gen_vector[l]) & mask;
            const long double a = sg * bernoulli_poly_ld(Degree, static_cast<long double>(k) * inv_n);
            e += a * (1.0L + e);
        }
        total += e;
        out[i] = {static_cast<double>(e), 0.0};
    }
    return total;
}

} // namespace detail

/// Gram eigenvalues together with ell_0 / n - 1, which is a near-cancellation
/// when formed from ell_0 and is therefore accumulated separately.
struct GramSpectrum {
    std::vector<double> ell;
    double ell0_excess = 0.0;
};

/// Eigenvalues ell = V^H C1 of the circulant Gram matrix C0 = (1/n) V diag(ell) V^H.
/// The transform is applied to C1 - 1, whose bins k >= 1 equal those of C1,
/// and ell_0 = n + sum(C1 - 1) with the sum taken in long double.
/// Throws ill_conditioned_error if an eigenvalue is non-positive or not real.
[[nodiscard]] inline GramSpectrum gram_spectrum(const LatticeRule& rule, const KernelParams& params,
                                                const FftPlan& plan) {
    validate(rule);
    validate(params);
    const std::size_t n = rule.size();
    if (plan.size() != n) throw std::invalid_argument("gram_spectrum: plan length mismatch");
    complex_vector spec(n);
    long double total = 0.0L;
    switch (params.r) {
    case 1: total = detail::excess_column<2>(rule, params.gamma, spec); break;
    case 2: total = detail::excess_column<4>(rule, params.gamma, spec); break;
    case 3: total = detail::excess_column<6>(rule, params.gamma, spec); break;
    default: total = detail::excess_column<8>(rule, params.gamma, spec); break;
    }
    plan.forward(spec);
    GramSpectrum out;
    out.ell.resize(n);
    out.ell0_excess = static_cast<double>(total / static_cast<long double>(n));
    const double ell0 = static_cast<double>(static_cast<long double>(n) + total);
    for (std::size_t k = 0; k < n; ++k) {
        const double re = k == 0 ? ell0 : spec[k].real();
        if (k > 0 && std::abs(spec[k].imag()) > 1e-9 * std::abs(re) + 1e-12 * ell0)
            throw ill_conditioned_error("gram_eigenvalues: eigenvalue " + std::to_string(k)
                                        + " has a non-negligible imaginary part");
        if (!(re > 0.0))
            throw ill_conditioned_error("gram_eigenvalues: non-positive eigenvalue at index "
                                        + std::to_string(k) + " (gamma too large or duplicate nodes)");
        out.ell[k] = re;
    }
    if (out.ell0_excess < 0.0) out.ell0_excess = 0.0;
    return out;
}

[[nodiscard]] inline std::vector<double> gram_eigenvalues(const LatticeRule& rule,
                                                          const KernelParams& params,
                                                          const FftPlan& plan) {
    return gram_spectrum(rule, params, plan).ell;
}

[[nodiscard]] inline std::vector<double> gram_eigenvalues(const LatticeRule& rule,
                                                          const KernelParams& params) {
    return gram_eigenvalues(rule, params, FftPlan(rule.size()));
}

/// Transformed integrand data and Gram eigenvalues for one (n, theta).
struct SpectralCache {
    std::size_t n = 0;
    complex_vector f_tilde;
    std::vector<double> ell;
    double ell0_excess = 0.0;  // ell[0] / n - 1 without cancellation
    KernelParams theta;
};

[[nodiscard]] inline SpectralCache make_spectral_cache(std::span<const double> f, const LatticeRule& rule,
                                                       const KernelParams& params) {
    if (f.size() != rule.size())
        throw std::invalid_argument("make_spectral_cache: data length does not match lattice size");
    FftPlan plan(rule.size());
    SpectralCache cache;
    cache.n = rule.size();
    cache.f_tilde.assign(f.begin(), f.end());
    plan.forward(cache.f_tilde);
    GramSpectrum gs = gram_spectrum(rule, params, FftPlan(rule.size()));
    cache.ell = std::move(gs.ell);
    cache.ell0_excess = gs.ell0_excess;
    cache.theta = params;
    return cache;
}

} // namespace bcub
