#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bcub {

/// Gram matrix could not be factorized, or an eigenvalue came out non-positive.
class ill_conditioned_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrand data carries no information beyond its mean (e.g. a constant).
class degenerate_data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured size cap (lattice size, sample budget) would be exceeded.
class resource_limit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The integrand returned a non-finite value. Carries the offending node.
class evaluation_error : public std::runtime_error {
public:
    evaluation_error(const std::string& what, std::vector<double> node)
        : std::runtime_error(what), node_(std::move(node)) {}

    [[nodiscard]] const std::vector<double>& node() const noexcept { return node_; }

private:
    std::vector<double> node_;
};

} // namespace bcub
