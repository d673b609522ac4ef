#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace bcub {

inline constexpr double kInfiniteDof = std::numeric_limits<double>::infinity();

/// p-quantile of Student's t with dof degrees of freedom; dof = infinity gives the
/// standard normal quantile.
[[nodiscard]] inline double student_t_quantile(double dof, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("student_t_quantile: p must lie in (0,1)");
    if (!(dof > 0.0))
        throw std::invalid_argument("student_t_quantile: dof must be positive");
    if (std::isinf(dof)) return boost::math::quantile(boost::math::normal_distribution<double>(), p);
    return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

} // namespace bcub
