// Reference price for the Asian option benchmark: the mean of independent
// randomly shifted lattice averages, with its standard error across shifts.
// Writes config/asian_benchmark.json, read by the experiment runner and the
// acceptance test.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "json.hpp"

#include "bcub/experiment.hpp"
#include "bcub/integrands.hpp"
#include "bcub/lattice.hpp"

namespace {

double shifted_average(const bcub::IntegrandSpec& f, const bcub::LatticeRule& rule, int threads) {
    const std::size_t n = rule.size();
    const auto workers = static_cast<std::size_t>(threads);
    std::vector<double> partial(workers, 0.0);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            std::vector<double> x(rule.dim());
            const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                rule.node(i, x);
                s += f(x);
            }
            partial[w] = s;
        });
    for (auto& t : pool) t.join();
    double s = 0.0;
    for (double p : partial) s += p;
    return s / static_cast<double>(n);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asian option reference price by randomly shifted lattices"};
    int log2_n = 22;
    int shifts = 32;
    std::uint64_t seed = 20240601;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string out = (bcub::config_dir() / "asian_benchmark.json").string();
    app.add_option("--log2-n", log2_n, "points per shift = 2^m")->check(CLI::Range(8, 26));
    app.add_option("--shifts", shifts, "independent random shifts")->check(CLI::Range(2, 1024));
    app.add_option("--seed", seed, "shift k uses seed + k");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    app.add_option("--out", out, "output JSON file");
    CLI11_PARSE(app, argc, argv);

    const bcub::AsianOptionParams p;  // benchmark defaults
    const bcub::IntegrandSpec f = bcub::asian_option(p);
    const auto gen = bcub::default_generating_vector(p.n_monitor);

    std::vector<double> means;
    for (int k = 0; k < shifts; ++k) {
        const auto rule = bcub::make_lattice(gen, bcub::random_shift(p.n_monitor, seed + static_cast<std::uint64_t>(k)),
                                             log2_n);
        means.push_back(shifted_average(f, rule, threads));
        std::cerr << "shift " << k << ": " << bcub::format_double(means.back()) << "\n";
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= shifts;
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    const double se = std::sqrt(ss / (shifts - 1) / shifts);

    nlohmann::json params{{"s0", p.s0},          {"strike", p.strike},       {"rate", p.rate},
                          {"volatility", p.volatility}, {"maturity", p.maturity}, {"n_monitor", p.n_monitor}};
    nlohmann::json entry{{"params", params},
                         {"price", mean},
                         {"standard_error", se},
                         {"points_per_shift", std::size_t{1} << log2_n},
                         {"shifts", shifts},
                         {"seed", seed},
                         {"path", bcub::to_string(p.path)},
                         {"baker", p.periodization == bcub::Periodization::baker},
                         {"provenance", "tools/asian_reference: mean of " + std::to_string(shifts)
                                            + " randomly shifted 2^" + std::to_string(log2_n)
                                            + "-point lattice averages (default Korobov vector)"},
                         {"shift_means", means}};
    nlohmann::json doc{{"description", "Arithmetic-average Asian call benchmark at the default option parameters"},
                       {"references", nlohmann::json::array({entry})}};
    std::ofstream os(out);
    if (!os) {
        std::cerr << "cannot write " << out << "\n";
        return 3;
    }
    os << doc.dump(2) << "\n";
    std::cout << "price " << bcub::format_double(mean) << "  standard error " << se << "\n";
    return 0;
}
