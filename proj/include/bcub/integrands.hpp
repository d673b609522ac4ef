#pragma once

// Test integrands on [0,1)^d: closed-form synthetic families and the
// arithmetic-mean Asian call under geometric Brownian motion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "bcub/kernel.hpp"

namespace bcub {

using IntegrandFn = std::function<double(std::span<const double>)>;

struct IntegrandSpec {
    std::size_t dim = 1;
    IntegrandFn eval;
    std::optional<double> true_value;
    std::string provenance;   // where true_value comes from
    std::string description;
    bool thread_safe = true;

    double operator()(std::span<const double> x) const { return eval(x); }
};

/// Clamp applied to uniforms before the inverse normal CDF.
inline constexpr double kUniformClamp = 0x1p-53;

/// Standard normal quantile via the inverse complementary error function.
[[nodiscard]] inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: p must lie in (0,1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

[[nodiscard]] inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Tent map u -> 1 - |2u - 1|; preserves the uniform measure.
[[nodiscard]] inline double baker(double u) noexcept { return 1.0 - std::abs(2.0 * u - 1.0); }

[[nodiscard]] inline IntegrandSpec constant_integrand(std::size_t d, double value) {
    IntegrandSpec s;
    s.dim = d;
    s.eval = [value](std::span<const double>) { return value; };
    s.true_value = value;
    s.provenance = "exact";
    s.description = "constant " + std::to_string(value);
    return s;
}

/// prod_l (1 + a (x_l - 1/2)); integral 1.
[[nodiscard]] inline IntegrandSpec product_peak(std::size_t d, double a) {
    if (d == 0) throw std::invalid_argument("product_peak: dimension must be positive");
    IntegrandSpec s;
    s.dim = d;
    s.eval = [a](std::span<const double> x) {
        double p = 1.0;
        for (double v : x) p *= 1.0 + a * (v - 0.5);
        return p;
    };
    s.true_value = 1.0;
    s.provenance = "closed form: each factor integrates to 1";
    s.description = "product_peak(a=" + std::to_string(a) + ")";
    return s;
}

/// prod_l (1 + c_l B_{2r}(x_l)), a member of the kernel's native space; integral 1.
[[nodiscard]] inline IntegrandSpec bernoulli_native(std::size_t d, int r, std::vector<double> coeffs) {
    if (d == 0 || coeffs.size() != d)
        throw std::invalid_argument("bernoulli_native: need one coefficient per dimension");
    if (r < 1 || r > kMaxSmoothness) throw std::invalid_argument("bernoulli_native: r outside {1,2,3,4}");
    IntegrandSpec s;
    s.dim = d;
    s.eval = [r, c = std::move(coeffs)](std::span<const double> x) {
        double p = 1.0;
        for (std::size_t l = 0; l < x.size(); ++l) p *= 1.0 + c[l] * bernoulli_poly(2 * r, x[l]);
        return p;
    };
    s.true_value = 1.0;
    s.provenance = "closed form: Bernoulli polynomials integrate to 0";
    s.description = "bernoulli_native(r=" + std::to_string(r) + ")";
    return s;
}

/// Replaces f by f(baker(x)); same integral.
[[nodiscard]] inline IntegrandSpec periodize_baker(IntegrandSpec inner) {
    IntegrandSpec s = inner;
    s.eval = [f = std::move(inner.eval)](std::span<const double> x) {
        thread_local std::vector<double> y;
        y.resize(x.size());
        for (std::size_t l = 0; l < x.size(); ++l) y[l] = baker(x[l]);
        return f(y);
    };
    s.description = "baker(" + inner.description + ")";
    return s;
}

enum class PathConstruction { cholesky, brownian_bridge, pca };
enum class Periodization { none, baker };

struct AsianOptionParams {
    double s0 = 100.0;
    double strike = 100.0;
    double rate = 0.05;
    double volatility = 0.5;
    double maturity = 1.0;
    std::size_t n_monitor = 12;
    PathConstruction path = PathConstruction::cholesky;
    Periodization periodization = Periodization::baker;
};

inline void validate(const AsianOptionParams& p) {
    if (!(p.s0 > 0.0) || !(p.strike >= 0.0) || !(p.rate >= 0.0) || !(p.volatility >= 0.0)
        || !(p.maturity > 0.0) || p.n_monitor == 0)
        throw std::invalid_argument("AsianOptionParams: invalid parameter");
}

/// Monitoring times t_j = j T / d, j = 1..d.
[[nodiscard]] inline std::vector<double> monitoring_times(const AsianOptionParams& p) {
    std::vector<double> t(p.n_monitor);
    for (std::size_t j = 0; j < t.size(); ++j)
        t[j] = p.maturity * static_cast<double>(j + 1) / static_cast<double>(p.n_monitor);
    return t;
}

/// Brownian bridge ordering over arbitrary increasing times, as a linear map z -> W.
[[nodiscard]] inline Eigen::MatrixXd brownian_bridge_matrix(const std::vector<double>& t) {
    const std::size_t m = t.size();
    std::vector<std::size_t> bridge(m), left(m), right(m);
    std::vector<double> lw(m, 0.0), rw(m, 0.0), sd(m, 0.0);
    std::vector<std::size_t> filled(m, 0);
    filled[m - 1] = 1;
    bridge[0] = m - 1;
    sd[0] = std::sqrt(t[m - 1]);
    std::size_t j = 0;
    for (std::size_t i = 1; i < m; ++i) {
        while (filled[j]) ++j;
        std::size_t k = j;
        while (!filled[k]) ++k;
        const std::size_t l = j + ((k - 1 - j) >> 1);
        filled[l] = i + 1;
        bridge[i] = l;
        left[i] = j;
        right[i] = k;
        const double tl = t[l];
        const double tk = t[k];
        const double tj = j == 0 ? 0.0 : t[j - 1];
        lw[i] = (tk - tl) / (tk - tj);
        rw[i] = (tl - tj) / (tk - tj);
        sd[i] = std::sqrt((tl - tj) * (tk - tl) / (tk - tj));
        j = k + 1;
        if (j >= m) j = 0;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t col = 0; col < m; ++col) {
        std::vector<double> z(m, 0.0), w(m, 0.0);
        z[col] = 1.0;
        w[m - 1] = sd[0] * z[0];
        for (std::size_t i = 1; i < m; ++i) {
            const std::size_t l = bridge[i];
            const double wr = w[right[i]];
            const double wl = left[i] == 0 ? 0.0 : w[left[i] - 1];
            w[l] = lw[i] * wl + rw[i] * wr + sd[i] * z[i];
        }
        for (std::size_t r = 0; r < m; ++r) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = w[r];
    }
    return a;
}

/// Matrix A with A A^T = [min(t_i, t_j)], mapping iid normals to the Brownian path.
[[nodiscard]] inline Eigen::MatrixXd path_matrix(const std::vector<double>& t, PathConstruction how) {
    const auto m = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = std::min(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)]);
    switch (how) {
    case PathConstruction::cholesky:
        return cov.llt().matrixL();
    case PathConstruction::brownian_bridge:
        return brownian_bridge_matrix(t);
    case PathConstruction::pca: {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        // Largest eigenvalue first.
        Eigen::MatrixXd a(m, m);
        for (Eigen::Index k = 0; k < m; ++k)
            a.col(k) = es.eigenvectors().col(m - 1 - k) * std::sqrt(std::max(0.0, es.eigenvalues()(m - 1 - k)));
        return a;
    }
    }
    throw std::invalid_argument("path_matrix: unknown construction");
}

/// Discounted arithmetic-average call payoff as a function of u in [0,1)^d.
[[nodiscard]] inline IntegrandSpec asian_option(const AsianOptionParams& p) {
    validate(p);
    const auto t = monitoring_times(p);
    auto state = std::make_shared<const Eigen::MatrixXd>(path_matrix(t, p.path));
    const std::size_t d = p.n_monitor;
    std::vector<double> drift(d);
    for (std::size_t j = 0; j < d; ++j) drift[j] = (p.rate - 0.5 * p.volatility * p.volatility) * t[j];
    const double discount = std::exp(-p.rate * p.maturity);
    const bool use_baker = p.periodization == Periodization::baker;

    IntegrandSpec s;
    s.dim = d;
    s.eval = [=](std::span<const double> u) {
        thread_local std::vector<double> z;
        z.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            double v = use_baker ? baker(u[k]) : u[k];
            v = std::clamp(v, kUniformClamp, 1.0 - kUniformClamp);
            z[k] = inverse_normal_cdf(v);
        }
        const Eigen::MatrixXd& a = *state;
        double avg = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double w = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                w += a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * z[k];
            avg += std::exp(drift[j] + p.volatility * w);
        }
        avg *= p.s0 / static_cast<double>(d);
        return discount * std::max(avg - p.strike, 0.0);
    };
    s.description = "asian_call(d=" + std::to_string(d) + ")";
    return s;
}

/// Price with zero strike: exp(-rT) s0 (1/d) sum_j exp(r t_j).
[[nodiscard]] inline double asian_zero_strike_price(const AsianOptionParams& p) {
    const auto t = monitoring_times(p);
    double s = 0.0;
    for (double tj : t) s += std::exp(p.rate * tj);
    return std::exp(-p.rate * p.maturity) * p.s0 * s / static_cast<double>(t.size());
}

/// Payoff in the zero-volatility limit (deterministic path).
[[nodiscard]] inline double asian_zero_vol_price(const AsianOptionParams& p) {
    const double avg = asian_zero_strike_price(p) * std::exp(p.rate * p.maturity);
    return std::exp(-p.rate * p.maturity) * std::max(avg - p.strike, 0.0);
}

} // namespace bcub
