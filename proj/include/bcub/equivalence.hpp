#pragma once

// Dense vs fast agreement matrix on lattice nodes: posterior mean, posterior
// variance and EB objective, over n in {4, ..., 2^max_log2_n} and d in {1, 2, 3}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "bcub/bayes_dense.hpp"
#include "bcub/bayes_fast.hpp"
#include "bcub/lattice.hpp"
#include "bcub/transform.hpp"

namespace bcub {

/// Deliberate defects for checking that the suite can fail.
enum class Mutation {
    none,
    flip_variance_sign,  // fast variance reported with the wrong sign
};

struct EquivalenceCell {
    std::size_t n = 0;
    std::size_t d = 0;
    double mean_dev = 0.0;      // max |fast - dense| / |dense|
    double variance_dev = 0.0;  // max |fast - dense| / |dense|
    double eb_dev = 0.0;        // max |(fast - log n) - dense| / max(1, |dense|)
    int cases = 0;
};

struct EquivalenceReport {
    double tolerance = 1e-9;
    std::vector<EquivalenceCell> cells;

    [[nodiscard]] double worst() const {
        double w = 0.0;
        for (const auto& c : cells) w = std::max({w, c.mean_dev, c.variance_dev, c.eb_dev});
        return w;
    }
    [[nodiscard]] bool passed() const { return !cells.empty() && worst() <= tolerance; }
};

struct EquivalenceOptions {
    int max_log2_n = 6;
    Mutation mutation = Mutation::none;
    std::uint64_t seed = 424242;
    int gammas = 5;
    int vectors = 5;
    /// gamma drawn log-uniformly from [lower, 1] * max_gamma(r)
    double gamma_lower_fraction = 0.01;
};

[[nodiscard]] inline EquivalenceReport run_equivalence_suite(const EquivalenceOptions& opt = {}) {
    EquivalenceReport report;
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    for (int m = 2; m <= opt.max_log2_n; ++m) {
        for (std::size_t d = 1; d <= 3; ++d) {
            EquivalenceCell cell;
            cell.n = std::size_t{1} << m;
            cell.d = d;
            const LatticeRule rule = make_lattice(default_generating_vector(d), random_shift(d, rng()), m);
            const PointSet pts = nodes(rule);
            const double log_n = std::log(static_cast<double>(cell.n));
            for (int r = 1; r <= 2; ++r) {
                for (int g = 0; g < opt.gammas; ++g) {
                    const double frac = std::exp(std::log(opt.gamma_lower_fraction) * unif(rng));
                    const KernelParams theta{r, frac * max_gamma(r), 1.0};
                    const GramContext ctx = GramContext::from_nodes(pts, theta);
                    for (int v = 0; v < opt.vectors; ++v) {
                        std::vector<double> f(cell.n);
                        for (auto& x : f) x = normal(rng);
                        const SpectralCache cache = make_spectral_cache(f, rule, theta);
                        const PosteriorSummary fast = fast_posterior(cache);
                        double fast_var = fast.variance;
                        if (opt.mutation == Mutation::flip_variance_sign) fast_var = -fast_var;
                        const double dense_mean = full_bayes_mean(ctx, f);
                        const double dense_var = full_bayes_variance(ctx, f);
                        const double fast_eb = fast_eb_objective(cache) - log_n;
                        const double dense_eb = eb_objective(ctx, f);
                        cell.mean_dev = std::max(cell.mean_dev, std::abs(fast.mean - dense_mean) / std::abs(dense_mean));
                        cell.variance_dev = std::max(cell.variance_dev, std::abs(fast_var - dense_var) / std::abs(dense_var));
                        cell.eb_dev = std::max(cell.eb_dev, std::abs(fast_eb - dense_eb) / std::max(1.0, std::abs(dense_eb)));
                        ++cell.cases;
                    }
                }
            }
            report.cells.push_back(cell);
        }
    }
    return report;
}

inline void print_report(std::ostream& os, const EquivalenceReport& rep) {
    os << "      n  d   cases   mean_dev      variance_dev  eb_dev\n";
    for (const auto& c : rep.cells) {
        char line[160];
        std::snprintf(line, sizeof line, "%7zu  %zu  %6d   %.3e     %.3e     %.3e\n", c.n, c.d, c.cases,
                      c.mean_dev, c.variance_dev, c.eb_dev);
        os << line;
    }
    char tail[120];
    std::snprintf(tail, sizeof tail, "worst deviation %.3e (tolerance %.1e): %s\n", rep.worst(), rep.tolerance,
                  rep.passed() ? "PASS" : "FAIL");
    os << tail;
}

} // namespace bcub
