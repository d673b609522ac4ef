#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bcub/integrands.hpp"
#include "bcub/kernel.hpp"

using namespace bcub;

namespace {

struct McResult {
    double mean;
    double se;
};

McResult monte_carlo(const IntegrandSpec& f, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<double> x(f.dim);
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x) v = u(rng);
        const double y = f.eval(x);
        s += y;
        ss += y * y;
    }
    const double mean = s / static_cast<double>(n);
    const double var = (ss / static_cast<double>(n) - mean * mean) * static_cast<double>(n) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace

TEST(InverseNormal, RoundTripAndKnownValue) {
    EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-13);
    EXPECT_EQ(inverse_normal_cdf(0.5), 0.0);
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99, 1 - 1e-9})
        EXPECT_NEAR(normal_cdf(inverse_normal_cdf(p)), p, 1e-13 * std::min(p, 1 - p) + 2e-16);
    EXPECT_THROW((void)inverse_normal_cdf(0.0), std::domain_error);
    EXPECT_THROW((void)inverse_normal_cdf(1.0), std::domain_error);
    EXPECT_TRUE(std::isfinite(inverse_normal_cdf(kUniformClamp)));
}

TEST(Integrands, MonteCarloAgreesWithTrueValues) {
    const std::vector<IntegrandSpec> fs{constant_integrand(2, 3.5), product_peak(3, 1.0), product_peak(5, 1.5),
                                        bernoulli_native(2, 1, {1.0, 1.0}), bernoulli_native(3, 2, {4.0, -2.0, 1.0})};
    std::uint64_t seed = 1;
    for (const auto& f : fs) {
        ASSERT_TRUE(f.true_value.has_value());
        const auto mc = monte_carlo(f, 1'000'000, seed++);
        EXPECT_LE(std::abs(mc.mean - *f.true_value), 4 * mc.se + 1e-15) << f.description;
    }
}

TEST(Integrands, BakerPreservesIntegral) {
    const auto f = periodize_baker(product_peak(3, 1.5));
    EXPECT_EQ(f.true_value, 1.0);
    const auto mc = monte_carlo(f, 1'000'000, 9);
    EXPECT_LE(std::abs(mc.mean - 1.0), 4 * mc.se);
    EXPECT_EQ(baker(0.0), 0.0);
    EXPECT_EQ(baker(0.5), 1.0);
    EXPECT_EQ(baker(0.25), baker(0.75));
}

TEST(Integrands, RejectBadArguments) {
    EXPECT_THROW((void)product_peak(0, 1.0), std::invalid_argument);
    EXPECT_THROW((void)bernoulli_native(2, 1, {1.0}), std::invalid_argument);
    EXPECT_THROW((void)bernoulli_native(1, 5, {1.0}), std::invalid_argument);
    AsianOptionParams p;
    p.volatility = -1;
    EXPECT_THROW((void)asian_option(p), std::invalid_argument);
}

TEST(PathMatrix, ReproducesBrownianCovariance) {
    AsianOptionParams p;
    for (std::size_t d : {1, 2, 5, 12, 16}) {
        p.n_monitor = d;
        const auto t = monitoring_times(p);
        for (auto how : {PathConstruction::cholesky, PathConstruction::brownian_bridge, PathConstruction::pca}) {
            const Eigen::MatrixXd a = path_matrix(t, how);
            const Eigen::MatrixXd c = a * a.transpose();
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    EXPECT_NEAR(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), std::min(t[i], t[j]), 1e-12)
                        << "d " << d << " construction " << static_cast<int>(how);
        }
    }
}

TEST(PathMatrix, BridgeFirstColumnSetsTerminalValue) {
    AsianOptionParams p;
    const auto t = monitoring_times(p);
    const Eigen::MatrixXd a = path_matrix(t, PathConstruction::brownian_bridge);
    // z_0 drives W(T) with weight sqrt(T) and every earlier point linearly in t.
    for (std::size_t j = 0; j < t.size(); ++j)
        EXPECT_NEAR(a(static_cast<Eigen::Index>(j), 0), t[j] / std::sqrt(p.maturity), 1e-14);
}

TEST(AsianOption, ZeroVolatilityIsDeterministic) {
    AsianOptionParams p;
    p.volatility = 0.0;
    const auto f = asian_option(p);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u;
    std::vector<double> x(p.n_monitor);
    for (int k = 0; k < 10; ++k) {
        for (auto& v : x) v = u(rng);
        EXPECT_NEAR(f.eval(x), asian_zero_vol_price(p), 1e-12);
    }
}

TEST(AsianOption, ZeroStrikeMatchesForwardAverage) {
    for (auto how : {PathConstruction::cholesky, PathConstruction::brownian_bridge, PathConstruction::pca}) {
        AsianOptionParams p;
        p.strike = 0.0;
        p.volatility = 0.2;
        p.path = how;
        const auto mc = monte_carlo(asian_option(p), 400'000, 3);
        EXPECT_LE(std::abs(mc.mean - asian_zero_strike_price(p)), 4 * mc.se);
    }
}

TEST(AsianOption, PayoffNonNegativeAndMonotoneInSpot) {
    AsianOptionParams lo, hi;
    hi.s0 = 110.0;
    const auto fl = asian_option(lo);
    const auto fh = asian_option(hi);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u;
    std::vector<double> x(lo.n_monitor);
    for (int k = 0; k < 1000; ++k) {
        for (auto& v : x) v = u(rng);
        const double a = fl.eval(x), b = fh.eval(x);
        EXPECT_GE(a, 0.0);
        EXPECT_GE(b, a);
    }
}

TEST(AsianOption, HandlesCubeBoundary) {
    AsianOptionParams p;
    p.periodization = Periodization::none;
    const auto f = asian_option(p);
    std::vector<double> zeros(p.n_monitor, 0.0);
    EXPECT_TRUE(std::isfinite(f.eval(zeros)));
    EXPECT_EQ(f.eval(zeros), 0.0);
}
