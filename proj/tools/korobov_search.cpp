// Offline search for the default Korobov multiplier.
//
// Scores a candidate a by the mean log10 of the shift-averaged squared
// worst-case error of the rank-1 lattice z_l = a^(l-1) in the weighted
// r = 1 Korobov space (weights w_l = 1/l), over n = 2^min..2^max and over
// every leading dimension count in --dims.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "bcub/kernel.hpp"
#include "bcub/lattice.hpp"

namespace {

double squared_wce(const std::vector<std::uint64_t>& z, int log2_n) {
    const std::size_t n = std::size_t{1} << log2_n;
    const std::uint64_t mask = n - 1;
    const double two_pi_sq = 2.0 * std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t l = 0; l < z.size(); ++l) {
            const double t = std::ldexp(static_cast<double>((i * z[l]) & mask), -log2_n);
            prod *= 1.0 + two_pi_sq / static_cast<double>(l + 1) * bcub::bernoulli_poly(2, t);
        }
        sum += prod;
    }
    return sum / static_cast<double>(n) - 1.0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Search a Korobov multiplier for the default generating vector"};
    std::vector<int> dims{2, 3, 12};
    int min_m = 10;
    int max_m = 16;
    int candidates = 400;
    std::uint64_t seed = 20181;
    app.add_option("--dims", dims);
    app.add_option("--min-m", min_m);
    app.add_option("--max-m", max_m);
    app.add_option("--candidates", candidates);
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(1, (std::uint64_t{1} << 25) - 1);
    double best_score = INFINITY;
    std::uint64_t best_a = 1;
    for (int c = 0; c < candidates; ++c) {
        const std::uint64_t a = 2 * pick(rng) + 1;
        double score = 0.0;
        for (int dim : dims) {
            const auto z = bcub::korobov_vector(static_cast<std::size_t>(dim), a);
            for (int m = min_m; m <= max_m; ++m) score += std::log10(squared_wce(z, m));
        }
        score /= static_cast<double>((max_m - min_m + 1) * dims.size());
        if (score < best_score) {
            best_score = score;
            best_a = a;
            std::cout << "candidate " << c << ": a = " << a << "  mean log10 e^2 = " << score << '\n';
        }
    }
    std::cout << "best a = " << best_a << '\n';
    for (int dim : dims) {
        const auto z = bcub::korobov_vector(static_cast<std::size_t>(dim), best_a);
        for (int m = min_m; m <= max_m + 4; ++m)
            std::cout << "  d = " << dim << "  m = " << m << "  e^2 = " << squared_wce(z, m) << '\n';
    }
    return 0;
}
