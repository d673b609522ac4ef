#pragma once

// Reference O(n^3) Bayesian and deterministic kernel cubature on arbitrary node
// sets. Every formula here works from a Cholesky factor of the Gram matrix and
// serves as the oracle for the circulant fast path. The factorization and all
// reductions run in long double; inputs and outputs are double.
//
// Notation: C is the Gram matrix, m = Pi[c(., X)] the kernel means,
// M = PiPi[c] the double mean, 1 the ones vector.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "bcub/errors.hpp"
#include "bcub/kernel.hpp"
#include "bcub/lattice.hpp"
#include "bcub/posterior.hpp"
#include "bcub/student_t.hpp"

namespace bcub {

/// Extended-precision scalar used for the factorization and all reductions.
using dense_real = long double;
using MatrixXld = Eigen::Matrix<dense_real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<dense_real, Eigen::Dynamic, 1>;

class GramContext {
public:
    /// Relative diagonal jitter tried in order until the Cholesky factorization succeeds.
    static constexpr std::array<double, 4> kJitterLadder{0.0, 1e-12, 1e-10, 1e-8};

    GramContext(const Eigen::MatrixXd& gram, const Eigen::VectorXd& kernel_means, double double_mean)
        : GramContext(MatrixXld(gram.cast<dense_real>()), VectorXld(kernel_means.cast<dense_real>()),
                      static_cast<dense_real>(double_mean)) {}

    GramContext(MatrixXld gram, VectorXld kernel_means, dense_real double_mean)
        : gram_(std::move(gram)), kernel_means_(std::move(kernel_means)), double_mean_(double_mean) {
        const auto n = gram_.rows();
        if (n == 0 || gram_.cols() != n || kernel_means_.size() != n)
            throw std::invalid_argument("GramContext: inconsistent dimensions");
        const dense_real scale = gram_.cwiseAbs().maxCoeff();
        if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12L * scale)
            throw std::invalid_argument("GramContext: Gram matrix is not symmetric");
        factorize();
    }

    /// Gram matrix of lambda * c0 on the given nodes, with exact kernel means.
    [[nodiscard]] static GramContext from_nodes(const PointSet& pts, const KernelParams& p) {
        validate(p);
        const auto n = static_cast<Eigen::Index>(pts.size());
        const dense_real lambda = p.lambda_scale;
        MatrixXld gram(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            detail::check_unit_cube(pts.row(static_cast<std::size_t>(i)), "GramContext::from_nodes");
            for (Eigen::Index j = 0; j <= i; ++j) {
                const dense_real v = lambda
                                     * (1.0L + detail::c0_excess_ld(pts.row(static_cast<std::size_t>(i)),
                                                                    pts.row(static_cast<std::size_t>(j)), p));
                gram(i, j) = v;
                gram(j, i) = v;
            }
        }
        VectorXld means(n);
        for (Eigen::Index i = 0; i < n; ++i)
            means(i) = lambda * c0_mean(pts.row(static_cast<std::size_t>(i)), p);
        return GramContext(std::move(gram), std::move(means), lambda * c0_double_mean(p));
    }

    [[nodiscard]] Eigen::Index size() const noexcept { return gram_.rows(); }
    [[nodiscard]] Eigen::MatrixXd gram() const { return gram_.cast<double>(); }
    [[nodiscard]] Eigen::VectorXd kernel_means() const { return kernel_means_.cast<double>(); }
    [[nodiscard]] double double_mean() const noexcept { return static_cast<double>(double_mean_); }
    [[nodiscard]] double jitter() const noexcept { return static_cast<double>(jitter_); }

    [[nodiscard]] const MatrixXld& gram_ld() const noexcept { return gram_; }
    [[nodiscard]] const VectorXld& kernel_means_ld() const noexcept { return kernel_means_; }
    [[nodiscard]] dense_real double_mean_ld() const noexcept { return double_mean_; }

    [[nodiscard]] VectorXld solve(const VectorXld& b) const { return llt_.solve(b); }
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return llt_.solve(b.cast<dense_real>()).template cast<double>();
    }

    /// log det of the (possibly jittered) Gram matrix.
    [[nodiscard]] double log_det() const {
        const auto& l = llt_.matrixLLT();
        dense_real s = 0.0L;
        for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
        return static_cast<double>(2.0L * s);
    }

private:
    void factorize() {
        const dense_real mean_diag = gram_.diagonal().mean();
        const auto n = gram_.rows();
        for (double rel : kJitterLadder) {
            MatrixXld a = gram_;
            a.diagonal().array() += static_cast<dense_real>(rel) * mean_diag;
            llt_.compute(a);
            if (llt_.info() == Eigen::Success && (llt_.matrixLLT().diagonal().array() > 0.0L).all()) {
                jitter_ = static_cast<dense_real>(rel) * mean_diag;
                return;
            }
        }
        throw ill_conditioned_error("GramContext: Cholesky failed for n = " + std::to_string(n)
                                    + " even with jitter");
    }

    MatrixXld gram_;
    VectorXld kernel_means_;
    dense_real double_mean_;
    Eigen::LLT<MatrixXld> llt_;
    dense_real jitter_ = 0.0L;
};

namespace detail {

[[nodiscard]] inline VectorXld to_eigen(std::span<const double> f) {
    return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())).cast<dense_real>();
}

inline void check_data(const GramContext& ctx, std::span<const double> f, const char* who) {
    if (static_cast<Eigen::Index>(f.size()) != ctx.size())
        throw std::invalid_argument(std::string(who) + ": data length does not match node count");
}

[[nodiscard]] inline bool is_constant(std::span<const double> f) {
    return std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
}

[[nodiscard]] inline double mean_diagonal(const GramContext& ctx) {
    return static_cast<double>(ctx.gram_ld().diagonal().mean());
}

// f^T (C^-1 - C^-1 1 1^T C^-1 / 1^T C^-1 1) f, evaluated as r^T C^-1 r with
// r = f - mu 1 and mu the generalized least squares mean. Exactly 0 for constant f.
[[nodiscard]] inline double projected_quadratic_form(const GramContext& ctx, std::span<const double> f) {
    if (is_constant(f)) return 0.0;
    const VectorXld fv = to_eigen(f);
    const VectorXld ones = VectorXld::Ones(ctx.size());
    const VectorXld a = ctx.solve(ones);
    const dense_real mu = a.dot(fv) / a.sum();
    const VectorXld r = fv - mu * ones;
    const double q = static_cast<double>(r.dot(ctx.solve(r)));
    return clamp_tiny_negative<ill_conditioned_error>(q, static_cast<double>(fv.squaredNorm()) / mean_diagonal(ctx),
                                                      "projected_quadratic_form");
}

} // namespace detail

/// PiPi[c] - m^T C^-1 m, the posterior variance of the integral for unit scale
/// and zero prior mean. Depends only on the nodes and kernel.
[[nodiscard]] inline double zero_mean_variance(const GramContext& ctx) {
    const VectorXld& m = ctx.kernel_means_ld();
    const double v = static_cast<double>(ctx.double_mean_ld() - m.dot(ctx.solve(m)));
    return detail::clamp_tiny_negative<ill_conditioned_error>(v, ctx.double_mean(), "zero_mean_variance");
}

/// Zero-mean Gaussian process: mean m^T C^-1 f, variance (f^T C^-1 f / n) * zero_mean_variance,
/// normal quantile for the half-width.
[[nodiscard]] inline PosteriorSummary zero_mean_posterior(const GramContext& ctx, std::span<const double> f,
                                                          double confidence = 0.99) {
    detail::check_data(ctx, f, "zero_mean_posterior");
    const VectorXld fv = detail::to_eigen(f);
    const VectorXld w = ctx.solve(fv);
    const double mean = static_cast<double>(ctx.kernel_means_ld().dot(w));
    const double scale_sq = std::max(0.0, static_cast<double>(fv.dot(w))) / static_cast<double>(ctx.size());
    return make_summary(mean, scale_sq * zero_mean_variance(ctx), kInfiniteDof, confidence);
}

/// Posterior mean under an unknown constant prior mean with a flat prior:
///   m^T w + (1 - 1^T b) (1^T w) / (1^T a),   w = C^-1 f, a = C^-1 1, b = C^-1 m.
[[nodiscard]] inline double full_bayes_mean(const GramContext& ctx, std::span<const double> f) {
    detail::check_data(ctx, f, "full_bayes_mean");
    const VectorXld fv = detail::to_eigen(f);
    const VectorXld ones = VectorXld::Ones(ctx.size());
    const VectorXld w = ctx.solve(fv);
    const VectorXld a = ctx.solve(ones);
    const VectorXld b = ctx.solve(ctx.kernel_means_ld());
    return static_cast<double>(ctx.kernel_means_ld().dot(w) + (1.0L - b.sum()) * w.sum() / a.sum());
}

/// Node-quality factor (1 - m^T C^-1 1)^2 / (1^T C^-1 1) + PiPi[c] - m^T C^-1 m.
[[nodiscard]] inline double full_bayes_node_factor(const GramContext& ctx) {
    const VectorXld ones = VectorXld::Ones(ctx.size());
    const VectorXld a = ctx.solve(ones);
    const VectorXld& m = ctx.kernel_means_ld();
    const dense_real one_minus = 1.0L - m.dot(a);
    const double v = static_cast<double>(one_minus * one_minus / a.sum() + ctx.double_mean_ld() - m.dot(ctx.solve(m)));
    return detail::clamp_tiny_negative<ill_conditioned_error>(v, ctx.double_mean(),
                                                              "full_bayes_node_factor");
}

/// Student-t scale^2 of the integral (n - 1 degrees of freedom).
[[nodiscard]] inline double full_bayes_variance(const GramContext& ctx, std::span<const double> f) {
    detail::check_data(ctx, f, "full_bayes_variance");
    if (ctx.size() < 2)
        throw std::invalid_argument("full_bayes_variance: need n >= 2 for positive degrees of freedom");
    const double n = static_cast<double>(ctx.size());
    return detail::projected_quadratic_form(ctx, f) / (n - 1.0) * full_bayes_node_factor(ctx);
}

[[nodiscard]] inline PosteriorSummary full_bayes_posterior(const GramContext& ctx, std::span<const double> f,
                                                           double confidence = 0.99) {
    return make_summary(full_bayes_mean(ctx, f), full_bayes_variance(ctx, f),
                        static_cast<double>(ctx.size() - 1), confidence);
}

/// log(projected quadratic form) + log det(C) / n.
[[nodiscard]] inline double eb_objective(const GramContext& ctx, std::span<const double> f) {
    detail::check_data(ctx, f, "eb_objective");
    const double q = detail::projected_quadratic_form(ctx, f);
    if (!(q > 0.0)) throw degenerate_data_error("eb_objective: data are constant, objective undefined");
    return std::log(q) + ctx.log_det() / static_cast<double>(ctx.size());
}

/// Objective at theta, with the Gram context produced by builder(theta).
template <class ContextBuilder>
[[nodiscard]] double eb_objective(ContextBuilder&& builder, std::span<const double> f,
                                  const KernelParams& theta) {
    const GramContext ctx = builder(theta);
    return eb_objective(ctx, f);
}

/// Integral of the minimum-norm interpolant: m^T K^-1 f.
[[nodiscard]] inline double det_cubature(const GramContext& ctx, std::span<const double> f) {
    detail::check_data(ctx, f, "det_cubature");
    return static_cast<double>(ctx.kernel_means_ld().dot(ctx.solve(detail::to_eigen(f))));
}

/// Squared native-space norm of the minimum-norm interpolant: f^T K^-1 f.
[[nodiscard]] inline double spline_norm_sq(const GramContext& ctx, std::span<const double> f) {
    detail::check_data(ctx, f, "spline_norm_sq");
    const VectorXld fv = detail::to_eigen(f);
    const double v = static_cast<double>(fv.dot(ctx.solve(fv)));
    return detail::clamp_tiny_negative<ill_conditioned_error>(v, static_cast<double>(fv.squaredNorm()) / detail::mean_diagonal(ctx),
                                                              "spline_norm_sq");
}

/// Whether ||f - f_hat||^2 <= t^2 f^T K^-1 f / n, with t the (1 + confidence)/2 quantile
/// of Student's t on n degrees of freedom.
[[nodiscard]] inline bool pseudo_bound_check(const GramContext& ctx, std::span<const double> f,
                                             double residual_norm_sq, double confidence = 0.99) {
    const double n = static_cast<double>(ctx.size());
    const double t = student_t_quantile(n, 0.5 * (1.0 + confidence));
    return residual_norm_sq <= t * t * spline_norm_sq(ctx, f) / n;
}

} // namespace bcub
