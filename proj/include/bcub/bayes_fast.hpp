#pragma once

// O(n log n) Bayesian cubature on shifted rank-1 lattices.
//
// With a shift-invariant kernel the Gram matrix is circulant, C0 = (1/n) V diag(ell) V^H,
// and with f_tilde = V^H f every posterior quantity reduces to sums over DFT bins:
//
//   mean     = f_tilde[0] / n                                       (the sample average)
//   variance = (ell[0]/n - 1) / (n (n - 1)) * sum_{i>=1} |f_tilde[i]|^2 / ell[i]
//   EB(theta) = log(sum_{i>=1} |f_tilde[i]|^2 / ell[i]) + (1/n) sum_i log ell[i]
//
// The dense EB objective equals this one minus log n.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bcub/errors.hpp"
#include "bcub/kernel.hpp"
#include "bcub/lattice.hpp"
#include "bcub/posterior.hpp"
#include "bcub/transform.hpp"

namespace bcub {

/// Log-uniform grid over gamma, as fractions of max_gamma(r).
struct GammaGrid {
    double lower_fraction = 1e-4;
    double upper_fraction = 1.0;
    int points = 32;
};

struct CubatureConfig {
    double tolerance = 1e-2;
    double confidence = 0.99;
    int min_log2_n = 8;
    int max_log2_n = 22;
    int r = 1;
    bool search_r = false;          // scan r in {1,..,4} as well as gamma (4x cost)
    GammaGrid gamma_search{};
    int max_eb_evaluations = 40;    // grid points plus golden-section refinements
    double inflation = 1.0;         // stop when inflation * half_width <= tolerance
    std::uint64_t seed = 0;         // random shift
    std::vector<std::uint64_t> gen_vector;  // empty: default_generating_vector(d)
    int threads = 1;                // concurrent integrand evaluation at new nodes
};

inline void validate(const CubatureConfig& c) {
    if (!(c.tolerance > 0.0)) throw std::invalid_argument("CubatureConfig: tolerance must be positive");
    if (!(c.confidence > 0.0 && c.confidence < 1.0))
        throw std::invalid_argument("CubatureConfig: confidence must lie in (0,1)");
    if (c.min_log2_n < 1 || c.min_log2_n > c.max_log2_n || c.max_log2_n > kLatticeLog2Cap)
        throw std::invalid_argument("CubatureConfig: need 1 <= min_log2_n <= max_log2_n <= 26");
    if (c.r < 1 || c.r > kMaxSmoothness) throw std::invalid_argument("CubatureConfig: r outside {1,2,3,4}");
    const auto& g = c.gamma_search;
    if (!(g.lower_fraction > 0.0 && g.lower_fraction < g.upper_fraction && g.upper_fraction <= 1.0))
        throw std::invalid_argument("CubatureConfig: gamma grid needs 0 < lower < upper <= 1");
    if (g.points < 2) throw std::invalid_argument("CubatureConfig: gamma grid needs at least 2 points");
    if (c.max_eb_evaluations < g.points)
        throw std::invalid_argument("CubatureConfig: max_eb_evaluations smaller than the gamma grid");
    if (!(c.inflation > 0.0)) throw std::invalid_argument("CubatureConfig: inflation must be positive");
    if (c.threads < 1) throw std::invalid_argument("CubatureConfig: threads must be >= 1");
}

namespace detail {

// Tail energy at or below this fraction of |f_tilde[0]|^2 is treated as rounding noise.
inline constexpr double kDegenerateTailRatio = 1e-28;

[[nodiscard]] inline bool degenerate_tail(const SpectralCache& c) {
    double tail = 0.0;
    for (std::size_t i = 1; i < c.n; ++i) tail += std::norm(c.f_tilde[i]);
    return tail <= kDegenerateTailRatio * std::norm(c.f_tilde[0]);
}

[[nodiscard]] inline double weighted_tail(const SpectralCache& c) {
    double s = 0.0;
    for (std::size_t i = 1; i < c.n; ++i) s += std::norm(c.f_tilde[i]) / c.ell[i];
    return s;
}

} // namespace detail

[[nodiscard]] inline PosteriorSummary fast_posterior(const SpectralCache& cache, double confidence = 0.99) {
    if (cache.n < 2) throw std::invalid_argument("fast_posterior: need n >= 2");
    const double n = static_cast<double>(cache.n);
    const double mean = cache.f_tilde[0].real() / n;
    double variance = 0.0;
    if (!detail::degenerate_tail(cache)) {
        const double node_factor = detail::clamp_tiny_negative<ill_conditioned_error>(
            cache.ell0_excess, 1.0, "fast_posterior");
        variance = node_factor * detail::weighted_tail(cache) / (n * (n - 1.0));
    }
    return make_summary(mean, variance, n - 1.0, confidence);
}

[[nodiscard]] inline double fast_eb_objective(const SpectralCache& cache) {
    if (cache.n < 2) throw std::invalid_argument("fast_eb_objective: need n >= 2");
    if (detail::degenerate_tail(cache))
        throw degenerate_data_error("fast_eb_objective: data are constant, objective undefined");
    double log_sum = 0.0;
    for (double l : cache.ell) log_sum += std::log(l);
    return std::log(detail::weighted_tail(cache)) + log_sum / static_cast<double>(cache.n);
}

struct ThetaFit {
    KernelParams theta;
    bool degenerate = false;
    double objective = std::numeric_limits<double>::quiet_NaN();
    int evaluations = 0;
    SpectralCache cache;  // f_tilde and ell at theta
};

/// Empirical Bayes choice of gamma (and optionally r): a log-uniform grid, then
/// golden-section refinement around the best grid point with the remaining budget.
[[nodiscard]] inline ThetaFit optimize_theta(std::span<const double> f, const LatticeRule& rule,
                                             const CubatureConfig& config) {
    validate(config);
    if (f.size() != rule.size()) throw std::invalid_argument("optimize_theta: data length mismatch");
    if (rule.size() < 2) throw std::invalid_argument("optimize_theta: need n >= 2");

    const FftPlan plan(rule.size());
    SpectralCache base;
    base.n = rule.size();
    base.f_tilde.assign(f.begin(), f.end());
    plan.forward(base.f_tilde);

    const auto& grid = config.gamma_search;
    std::vector<int> orders;
    if (config.search_r)
        for (int r = 1; r <= kMaxSmoothness; ++r) orders.push_back(r);
    else
        orders.push_back(config.r);

    ThetaFit fit;
    if (detail::degenerate_tail(base)) {
        const int r = config.r;
        const double mid = std::sqrt(grid.lower_fraction * grid.upper_fraction) * max_gamma(r);
        fit.theta = KernelParams{r, mid, 1.0};
        fit.degenerate = true;
        fit.cache = std::move(base);
        GramSpectrum gs = gram_spectrum(rule, fit.theta, plan);
        fit.cache.ell = std::move(gs.ell);
        fit.cache.ell0_excess = gs.ell0_excess;
        fit.cache.theta = fit.theta;
        fit.evaluations = 1;
        return fit;
    }

    double best_obj = std::numeric_limits<double>::infinity();
    GramSpectrum best_spec;
    const int refine_budget = config.max_eb_evaluations - grid.points;

    for (int r : orders) {
        const double gmax = max_gamma(r);
        const double log_lo = std::log(grid.lower_fraction * gmax);
        const double log_hi = std::log(grid.upper_fraction * gmax);
        const double step = (log_hi - log_lo) / (grid.points - 1);

        auto evaluate = [&](double log_gamma) {
            const KernelParams p{r, std::min(std::exp(log_gamma), gmax), 1.0};
            ++fit.evaluations;
            SpectralCache c;
            c.n = base.n;
            GramSpectrum gs;
            try {
                gs = gram_spectrum(rule, p, plan);
                c.ell = std::move(gs.ell);
            } catch (const ill_conditioned_error&) {
                return std::numeric_limits<double>::infinity();
            }
            // Borrow f_tilde without copying it.
            std::swap(c.f_tilde, base.f_tilde);
            const double obj = fast_eb_objective(c);
            std::swap(c.f_tilde, base.f_tilde);
            if (obj < best_obj) {
                best_obj = obj;
                fit.theta = p;
                best_spec.ell = std::move(c.ell);
                best_spec.ell0_excess = gs.ell0_excess;
            }
            return obj;
        };

        std::vector<double> values(static_cast<std::size_t>(grid.points));
        for (int k = 0; k < grid.points; ++k) values[static_cast<std::size_t>(k)] = evaluate(log_lo + k * step);
        const auto kbest = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());

        // Golden-section search over the bracket of the best grid point.
        double a = log_lo + std::max(kbest - 1, 0) * step;
        double b = log_lo + std::min(kbest + 1, grid.points - 1) * step;
        const int budget = refine_budget / static_cast<int>(orders.size());
        if (budget >= 1 && std::isfinite(values[static_cast<std::size_t>(kbest)])) {
            const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
            double c = b - inv_phi * (b - a);
            double d = a + inv_phi * (b - a);
            double fc = evaluate(c);
            double fd = budget >= 2 ? evaluate(d) : std::numeric_limits<double>::infinity();
            for (int used = 2; used < budget; ++used) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - inv_phi * (b - a);
                    fc = evaluate(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + inv_phi * (b - a);
                    fd = evaluate(d);
                }
            }
        }
    }

    if (!std::isfinite(best_obj))
        throw ill_conditioned_error("optimize_theta: no admissible gamma produced a positive spectrum");
    fit.objective = best_obj;
    fit.cache = std::move(base);
    fit.cache.ell = std::move(best_spec.ell);
    fit.cache.ell0_excess = best_spec.ell0_excess;
    fit.cache.theta = fit.theta;
    return fit;
}

struct StepRecord {
    std::size_t n = 0;
    KernelParams theta;
    double estimate = 0.0;
    double variance = 0.0;
    double half_width = 0.0;
    double elapsed_seconds = 0.0;  // since the start of the run
};

struct CubatureResult {
    double estimate = 0.0;
    double half_width = 0.0;
    std::size_t n_used = 0;
    KernelParams theta_eb;
    bool converged = false;
    bool eb_degenerate = false;
    std::vector<StepRecord> per_step;
};

/// One EB fit plus posterior at the current lattice size.
struct StepFit {
    ThetaFit fit;
    PosteriorSummary posterior;
};

[[nodiscard]] inline StepFit fit_step(std::span<const double> f, const LatticeRule& rule,
                                      const CubatureConfig& config) {
    StepFit s{optimize_theta(f, rule, config), {}};
    s.posterior = fast_posterior(s.fit.cache, config.confidence);
    return s;
}

namespace detail {

template <class Integrand>
void evaluate_range(Integrand& integrand, const LatticeRule& rule, std::size_t first, std::size_t stride,
                    std::size_t count, std::span<double> out, std::size_t& failed_at) {
    std::vector<double> x(rule.dim());
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = first + k * stride;
        rule.node(i, x);
        const double v = integrand(std::span<const double>(x));
        if (!std::isfinite(v)) {
            failed_at = i;
            return;
        }
        out[i] = v;
    }
}

// Fills out[first + k*stride] for k < count. Work is split into contiguous
// blocks, one per thread; results do not depend on the thread count.
template <class Integrand>
void evaluate_nodes(Integrand& integrand, const LatticeRule& rule, std::size_t first, std::size_t stride,
                    std::size_t count, std::span<double> out, int threads) {
    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                      std::max<std::size_t>(count / 1024, 1));
    std::vector<std::size_t> failed(workers, npos);
    if (workers == 1) {
        evaluate_range(integrand, rule, first, stride, count, out, failed[0]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t block = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * block;
            const std::size_t len = begin < count ? std::min(block, count - begin) : 0;
            pool.emplace_back([&, w, begin, len] {
                try {
                    evaluate_range(integrand, rule, first + begin * stride, stride, len, out, failed[w]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (std::size_t i : failed) {
        if (i == npos) continue;
        std::vector<double> x(rule.dim());
        rule.node(i, x);
        std::ostringstream msg;
        msg << "integrand returned a non-finite value at node " << i << " (";
        for (std::size_t l = 0; l < x.size(); ++l) msg << (l ? ", " : "") << x[l];
        msg << ")";
        throw evaluation_error(msg.str(), std::move(x));
    }
}

} // namespace detail

/// Doubles a shifted lattice from 2^min_log2_n until the credible half-width is
/// within tolerance or 2^max_log2_n is reached. Values at old nodes are reused.
/// The integrand must accept std::span<const double> and be safe to call
/// concurrently when config.threads > 1.
template <class Integrand>
[[nodiscard]] CubatureResult auto_cubature(Integrand&& integrand, std::size_t dim, const CubatureConfig& config) {
    validate(config);
    if (dim == 0) throw std::invalid_argument("auto_cubature: dimension must be positive");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    auto gen = config.gen_vector.empty() ? default_generating_vector(dim) : config.gen_vector;
    if (gen.size() != dim) throw std::invalid_argument("auto_cubature: generating vector length differs from dim");
    LatticeRule rule = make_lattice(std::move(gen), random_shift(dim, config.seed), config.min_log2_n,
                                    config.max_log2_n);

    std::vector<double> values(rule.size());
    detail::evaluate_nodes(integrand, rule, 0, 1, rule.size(), values, config.threads);

    CubatureResult result;
    for (;;) {
        const StepFit step = fit_step(values, rule, config);
        StepRecord rec;
        rec.n = rule.size();
        rec.theta = step.fit.theta;
        rec.estimate = step.posterior.mean;
        rec.variance = step.posterior.variance;
        rec.half_width = step.posterior.half_width;
        rec.elapsed_seconds = std::chrono::duration<double>(clock::now() - start).count();
        if (!result.per_step.empty() && rec.elapsed_seconds <= result.per_step.back().elapsed_seconds)
            rec.elapsed_seconds = std::nextafter(result.per_step.back().elapsed_seconds, INFINITY);
        result.per_step.push_back(rec);

        result.estimate = rec.estimate;
        result.half_width = rec.half_width;
        result.n_used = rec.n;
        result.theta_eb = rec.theta;
        result.eb_degenerate = step.fit.degenerate;

        if (config.inflation * rec.half_width <= config.tolerance) {
            result.converged = true;
            break;
        }
        if (rule.log2_n >= rule.max_log2_n) break;

        rule = extend(rule);
        std::vector<double> next(rule.size());
        for (std::size_t i = 0; i < values.size(); ++i) next[reindex_after_extend(i)] = values[i];
        detail::evaluate_nodes(integrand, rule, 1, 2, values.size(), next, config.threads);
        values = std::move(next);
    }
    return result;
}

} // namespace bcub
