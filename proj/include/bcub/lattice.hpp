#pragma once

// Shifted rank-1 lattices with n = 2^m points in natural index order:
//
//   x_i = frac(i * z / n + shift),   i = 0, ..., n-1.
//
// Natural order makes the Gram matrix of any shift-invariant kernel circulant,
// and doubling n keeps every old point: x_i at size n equals x_{2i} at size 2n,
// bit for bit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "bcub/errors.hpp"

namespace bcub {

/// Hard cap on log2 of the lattice size.
inline constexpr int kLatticeLog2Cap = 26;

/// Multiplier of the default Korobov-style generating vector z_l = a^(l-1) mod 2^26.
/// Picked by tools/korobov_search.cpp (400 candidates, seed 20181): minimizes the
/// mean log weighted r=1 worst-case error over n = 2^10..2^16 and d in {2, 3, 12}.
/// Reproducible, not optimal.
inline constexpr std::uint64_t kDefaultKorobovMultiplier = 1381533;

/// Row-major n x d point set.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return d_; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * d_, d_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * d_, d_}; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t l) const { return data_[i * d_ + l]; }
    double& operator()(std::size_t i, std::size_t l) { return data_[i * d_ + l]; }

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<double> data_;
};

struct LatticeRule {
    std::vector<std::uint64_t> gen_vector;  // odd entries
    std::vector<double> shift;              // in [0,1)^d
    int log2_n = 0;
    int max_log2_n = kLatticeLog2Cap;

    [[nodiscard]] std::size_t dim() const noexcept { return gen_vector.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return std::size_t{1} << log2_n; }

    /// Coordinate l of node i, computed exactly in integer arithmetic before the shift.
    [[nodiscard]] double coord(std::size_t i, std::size_t l) const noexcept {
        const std::uint64_t mask = (std::uint64_t{1} << log2_n) - 1;
        const std::uint64_t k = (static_cast<std::uint64_t>(i) * gen_vector[l]) & mask;
        double v = std::ldexp(static_cast<double>(k), -log2_n) + shift[l];
        if (v >= 1.0) v -= 1.0;
        return v;
    }

    void node(std::size_t i, std::span<double> out) const noexcept {
        for (std::size_t l = 0; l < out.size(); ++l) out[l] = coord(i, l);
    }
};

inline void validate(const LatticeRule& rule) {
    if (rule.gen_vector.empty())
        throw std::invalid_argument("LatticeRule: dimension must be positive");
    if (rule.shift.size() != rule.gen_vector.size())
        throw std::invalid_argument("LatticeRule: shift and generating vector differ in length");
    for (auto z : rule.gen_vector)
        if (z % 2 == 0) throw std::invalid_argument("LatticeRule: generating vector entries must be odd");
    for (double s : rule.shift)
        if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("LatticeRule: shift outside [0,1)");
    if (rule.max_log2_n < 0 || rule.max_log2_n > kLatticeLog2Cap)
        throw std::invalid_argument("LatticeRule: max_log2_n outside [0, 26]");
    if (rule.log2_n < 0 || rule.log2_n > rule.max_log2_n)
        throw std::invalid_argument("LatticeRule: log2_n outside [0, max_log2_n]");
}

/// z_l = a^(l-1) mod 2^26 with every entry odd (a itself must be odd).
[[nodiscard]] inline std::vector<std::uint64_t> korobov_vector(std::size_t d, std::uint64_t a) {
    if (a % 2 == 0) throw std::invalid_argument("korobov_vector: multiplier must be odd");
    const std::uint64_t mask = (std::uint64_t{1} << kLatticeLog2Cap) - 1;
    std::vector<std::uint64_t> z(d);
    std::uint64_t v = 1;
    for (std::size_t l = 0; l < d; ++l) {
        z[l] = v;
        v = (v * a) & mask;
    }
    return z;
}

[[nodiscard]] inline std::vector<std::uint64_t> default_generating_vector(std::size_t d) {
    return korobov_vector(d, kDefaultKorobovMultiplier);
}

/// Bits of resolution of random shifts. With log2_n <= 26 the sum
/// frac(i z / n) + shift then fits in a double exactly, so every node lies
/// exactly on the shifted lattice and the Gram matrix is exactly circulant.
inline constexpr int kShiftBits = 48;

/// Uniform shift on the grid 2^-48 Z in [0,1)^d from a seeded 64-bit Mersenne twister.
[[nodiscard]] inline std::vector<double> random_shift(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> s(d);
    for (auto& v : s) v = std::ldexp(static_cast<double>(rng() >> (64 - kShiftBits)), -kShiftBits);
    return s;
}

[[nodiscard]] inline LatticeRule make_lattice(std::vector<std::uint64_t> gen_vector,
                                              std::vector<double> shift, int log2_n,
                                              int max_log2_n = kLatticeLog2Cap) {
    LatticeRule rule{std::move(gen_vector), std::move(shift), log2_n, max_log2_n};
    validate(rule);
    return rule;
}

[[nodiscard]] inline PointSet nodes(const LatticeRule& rule) {
    validate(rule);
    PointSet pts(rule.size(), rule.dim());
    for (std::size_t i = 0; i < pts.size(); ++i) rule.node(i, pts.row(i));
    return pts;
}

/// Same rule at twice the size. Old node i becomes node 2i.
[[nodiscard]] inline LatticeRule extend(const LatticeRule& rule) {
    validate(rule);
    if (rule.log2_n + 1 > rule.max_log2_n)
        throw resource_limit_error("extend: lattice size cap 2^" + std::to_string(rule.max_log2_n)
                                   + " reached");
    LatticeRule next = rule;
    ++next.log2_n;
    return next;
}

/// Index of an old value after one doubling.
[[nodiscard]] constexpr std::size_t reindex_after_extend(std::size_t i) noexcept { return 2 * i; }

namespace detail {

[[nodiscard]] inline double circular_distance(double a, double b) noexcept {
    double t = std::abs(a - b);
    t -= std::floor(t);
    return std::min(t, 1.0 - t);
}

[[nodiscard]] inline bool contains_point(const PointSet& pts, std::span<const double> y, double tol) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
        bool match = true;
        for (std::size_t l = 0; l < pts.dim() && match; ++l)
            match = circular_distance(pts(j, l), y[l]) <= tol;
        if (match) return true;
    }
    return false;
}

} // namespace detail

/// Checks x + x' - x'' mod 1 stays in the set. Exhaustive for n <= 64,
/// otherwise 2000 triples drawn from a fixed-seed generator.
[[nodiscard]] inline bool check_group_closure(const PointSet& pts, double tol) {
    const std::size_t n = pts.size();
    const std::size_t d = pts.dim();
    if (n == 0) return true;
    std::vector<double> y(d);
    auto test_triple = [&](std::size_t a, std::size_t b, std::size_t c) {
        for (std::size_t l = 0; l < d; ++l) {
            double v = pts(a, l) + pts(b, l) - pts(c, l);
            y[l] = v - std::floor(v);
        }
        return detail::contains_point(pts, y, tol);
    };
    if (n <= 64) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t c = 0; c < n; ++c)
                    if (!test_triple(a, b, c)) return false;
        return true;
    }
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int t = 0; t < 2000; ++t)
        if (!test_triple(pick(rng), pick(rng), pick(rng))) return false;
    return true;
}

} // namespace bcub
