#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "bcub/student_t.hpp"

namespace bcub {

/// Posterior marginal of the integral: location, scale and credible half-width.
struct PosteriorSummary {
    double mean = 0.0;
    double variance = 0.0;
    double dof = kInfiniteDof;  // n - 1 for full Bayes, infinity for the zero-mean Gaussian case
    double half_width = 0.0;
    double confidence = 0.99;
};

/// half_width = t_{dof, (1 + confidence) / 2} * sqrt(variance).
[[nodiscard]] inline PosteriorSummary make_summary(double mean, double variance, double dof,
                                                   double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("make_summary: confidence must lie in (0,1)");
    if (variance < 0.0) throw std::invalid_argument("make_summary: negative variance");
    PosteriorSummary s;
    s.mean = mean;
    s.variance = variance;
    s.dof = dof;
    s.confidence = confidence;
    s.half_width = student_t_quantile(dof, 0.5 * (1.0 + confidence)) * std::sqrt(variance);
    return s;
}

namespace detail {

// Variance-like quantities may come out slightly negative from cancellation.
// Within 1e-12 * scale they are rounded to zero; anything larger is a bug.
template <class Error>
[[nodiscard]] double clamp_tiny_negative(double v, double scale, const char* who) {
    if (v >= 0.0) return v;
    if (v >= -1e-12 * scale) return 0.0;
    throw Error(std::string(who) + ": negative value beyond rounding tolerance");
}

} // namespace detail

} // namespace bcub
