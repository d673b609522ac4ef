#pragma once

// Shift-invariant product kernel built from even-degree Bernoulli polynomials:
//
//   c0(x, x'; r, gamma) = prod_l [ 1 - (-1)^r * gamma * B_{2r}(|x_l - x'_l|) ]
//
// on [0,1]^d with the uniform measure. Every one-dimensional factor integrates
// to 1 in either argument, so the kernel mean and double mean are identically 1.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace bcub {

inline constexpr int kMaxSmoothness = 4;

/// Margin kept below the largest gamma for which every 1-d factor stays positive.
inline constexpr double kGammaMargin = 1e-6;

struct KernelParams {
    int r = 1;                  // smoothness order, polynomial degree 2r
    double gamma = 1.0;         // weight of the non-constant part
    double lambda_scale = 1.0;  // vertical scale; c = lambda * c0

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// B_degree(x) for degree in {2, 4, 6, 8}.
[[nodiscard]] inline double bernoulli_poly(int degree, double x) {
    switch (degree) {
    case 2:
        return (x - 1.0) * x + 1.0 / 6.0;
    case 4:
        return ((x - 2.0) * x + 1.0) * x * x - 1.0 / 30.0;
    case 6:
        return (((x - 3.0) * x + 2.5) * x * x - 0.5) * x * x + 1.0 / 42.0;
    case 8:
        return ((((x - 4.0) * x + 14.0 / 3.0) * x * x - 7.0 / 3.0) * x * x + 2.0 / 3.0) * x * x
               - 1.0 / 30.0;
    default:
        throw std::invalid_argument("bernoulli_poly: unsupported degree " + std::to_string(degree));
    }
}

namespace detail {

[[nodiscard]] inline long double bernoulli_poly_ld(int degree, long double x) {
    switch (degree) {
    case 2:
        return (x - 1.0L) * x + 1.0L / 6.0L;
    case 4:
        return ((x - 2.0L) * x + 1.0L) * x * x - 1.0L / 30.0L;
    case 6:
        return (((x - 3.0L) * x + 2.5L) * x * x - 0.5L) * x * x + 1.0L / 42.0L;
    case 8:
        return ((((x - 4.0L) * x + 14.0L / 3.0L) * x * x - 7.0L / 3.0L) * x * x + 2.0L / 3.0L) * x * x
               - 1.0L / 30.0L;
    default:
        throw std::invalid_argument("bernoulli_poly: unsupported degree " + std::to_string(degree));
    }
}

} // namespace detail

/// sup_{x in [0,1]} |B_{2r}(x)|, attained at the endpoints (|Bernoulli number|).
[[nodiscard]] inline double bernoulli_sup(int r) {
    switch (r) {
    case 1: return 1.0 / 6.0;
    case 2: return 1.0 / 30.0;
    case 3: return 1.0 / 42.0;
    case 4: return 1.0 / 30.0;
    default:
        throw std::invalid_argument("bernoulli_sup: smoothness order out of range");
    }
}

/// Largest admissible gamma for order r.
[[nodiscard]] inline double max_gamma(int r) { return (1.0 - kGammaMargin) / bernoulli_sup(r); }

inline void validate(const KernelParams& p) {
    if (p.r < 1 || p.r > kMaxSmoothness)
        throw std::invalid_argument("KernelParams: r must lie in {1,2,3,4}");
    if (!(p.gamma > 0.0) || p.gamma > max_gamma(p.r))
        throw std::invalid_argument("KernelParams: gamma outside (0, max_gamma(r)]");
    if (!(p.lambda_scale > 0.0) || !std::isfinite(p.lambda_scale))
        throw std::invalid_argument("KernelParams: lambda_scale must be positive");
}

namespace detail {

// -(-1)^r, the sign that makes each factor a positive-definite kernel.
[[nodiscard]] constexpr double factor_sign(int r) noexcept { return (r % 2 == 1) ? 1.0 : -1.0; }

[[nodiscard]] inline double c0_factor(double t, int r, double signed_gamma) {
    return 1.0 + signed_gamma * bernoulli_poly(2 * r, t);
}

// No domain or parameter checks; callers validate once up front.
[[nodiscard]] inline double c0_unchecked(std::span<const double> x, std::span<const double> xp,
                                         const KernelParams& p) {
    const double sg = factor_sign(p.r) * p.gamma;
    double prod = 1.0;
    for (std::size_t l = 0; l < x.size(); ++l)
        prod *= c0_factor(std::abs(x[l] - xp[l]), p.r, sg);
    return prod;
}

// c0(x, x') - 1 in extended precision, via prod(1 + a_l) - 1 = p with
// p <- p + a_l (1 + p). Coordinate differences are formed in long double so
// they are exact for nodes that are not extremely close to 0.
[[nodiscard]] inline long double c0_excess_ld(std::span<const double> x, std::span<const double> xp,
                                              const KernelParams& p) {
    const long double sg = static_cast<long double>(factor_sign(p.r) * p.gamma);
    long double excess = 0.0L;
    for (std::size_t l = 0; l < x.size(); ++l) {
        long double t = static_cast<long double>(x[l]) - static_cast<long double>(xp[l]);
        if (t < 0) t = -t;
        const long double a = sg * bernoulli_poly_ld(2 * p.r, t);
        excess += a * (1.0L + excess);
    }
    return excess;
}

inline void check_unit_cube(std::span<const double> x, const char* who) {
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error(std::string(who) + ": coordinate outside [0,1]");
}

} // namespace detail

/// Normalized kernel c0(x, x'); lambda_scale is ignored.
[[nodiscard]] inline double eval_c0(std::span<const double> x, std::span<const double> xp,
                                    const KernelParams& p) {
    if (x.size() != xp.size())
        throw std::invalid_argument("eval_c0: dimension mismatch");
    validate(p);
    detail::check_unit_cube(x, "eval_c0");
    detail::check_unit_cube(xp, "eval_c0");
    return detail::c0_unchecked(x, xp, p);
}

/// Scaled covariance lambda * c0(x, x').
[[nodiscard]] inline double eval_kernel(std::span<const double> x, std::span<const double> xp,
                                        const KernelParams& p) {
    return p.lambda_scale * eval_c0(x, xp, p);
}

/// Integral of c0(., x) against the uniform measure. Identically 1 for this family.
[[nodiscard]] inline double c0_mean(std::span<const double> x, const KernelParams& p) {
    validate(p);
    detail::check_unit_cube(x, "c0_mean");
    return 1.0;
}

/// Double integral of c0 over [0,1]^d x [0,1]^d. Identically 1.
[[nodiscard]] inline double c0_double_mean(const KernelParams& p) {
    validate(p);
    return 1.0;
}

} // namespace bcub
