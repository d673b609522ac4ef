// Minimal library use: integrate a smooth product on [0,1]^3 to 1e-4 and
// print the doubling trace.

#include <cstdio>

#include "bcub/bayes_fast.hpp"
#include "bcub/integrands.hpp"

int main() {
    const bcub::IntegrandSpec f = bcub::product_peak(3, 1.0);

    bcub::CubatureConfig cfg;
    cfg.tolerance = 1e-4;
    cfg.seed = 7;

    const bcub::CubatureResult res = bcub::auto_cubature(f, f.dim, cfg);
    std::printf("%8s  %10s  %14s  %10s\n", "n", "gamma", "estimate", "half-width");
    for (const auto& s : res.per_step)
        std::printf("%8zu  %10.4g  %14.10f  %10.3e\n", s.n, s.theta.gamma, s.estimate, s.half_width);
    std::printf("%s after %zu points: %.10f +/- %.2e (true value %.1f)\n",
                res.converged ? "converged" : "stopped at size cap", res.n_used, res.estimate, res.half_width,
                *f.true_value);
    return 0;
}
