// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "bcub/bayes_fast.hpp"
#include "bcub/equivalence.hpp"
#include "bcub/experiment.hpp"
#include "bcub/integrands.hpp"
#include "bcub/student_t.hpp"
#include "bcub/transform.hpp"

using namespace bcub;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d %-28s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double even_odd_sum(const std::vector<double>& b) {
    if (b.size() == 1) return b[0];
    std::vector<double> even, odd;
    for (std::size_t i = 0; i < b.size(); ++i) (i % 2 ? odd : even).push_back(b[i]);
    return even_odd_sum(even) + even_odd_sum(odd);
}

bool clean_suite_passed = false;

void criterion_1() {
    auto t0 = clock_type::now();
    const auto clean = run_equivalence_suite();
    clean_suite_passed = clean.passed();
    const double elapsed = seconds_since(t0);
    report(1, "dense/fast equivalence", clean.passed() && clean.cells.size() == 15 && elapsed < 60.0,
           fmt("worst %.2e (tol 1e-9), %zu cells, %.2f s", clean.worst(), clean.cells.size(), elapsed));
}

void criterion_9() {
    EquivalenceOptions opt;
    opt.mutation = Mutation::flip_variance_sign;
    const auto mutated = run_equivalence_suite(opt);
    report(9, "mutation sanity", clean_suite_passed && !mutated.passed(),
           fmt("clean %s, sign-flipped variance %s (worst %.2e)", clean_suite_passed ? "passes" : "fails",
               mutated.passed() ? "passes" : "fails", mutated.worst()));
}

void criterion_2() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    int matched = 0;
    for (int c = 0; c < 100; ++c) {
        const int m = 1 + static_cast<int>(rng() % 14);
        const std::size_t d = 1 + rng() % 5;
        const auto rule = make_lattice(default_generating_vector(d), random_shift(d, rng()), m);
        std::vector<double> f(rule.size());
        for (auto& v : f) v = std::exp(2 * g(rng)) - 1.0;
        const auto post = fast_posterior(make_spectral_cache(f, rule, {1, 1.0, 1.0}));
        matched += post.mean == even_odd_sum(f) / static_cast<double>(f.size());
    }
    report(2, "sample-average identity", matched == 100, fmt("%d/100 bit-identical", matched));
}

void criterion_3() {
    double fft_worst = 0;
    for (int m = 0; m <= 16; ++m) {
        const std::size_t n = std::size_t{1} << m;
        const auto t = fast_transform(std::vector<double>(n, 1.0));
        double dev = std::abs(t[0] - std::complex<double>(static_cast<double>(n), 0.0));
        for (std::size_t k = 1; k < n; ++k) dev = std::max(dev, std::abs(t[k]));
        fft_worst = std::max(fft_worst, dev / static_cast<double>(n));
    }

    double recon_worst = 0;
    for (std::size_t d : {1, 2, 3})
        for (int r : {1, 2})
            for (int m = 2; m <= 6; ++m) {
                const auto rule = make_lattice(default_generating_vector(d), random_shift(d, 100 * d + 10 * r + m), m);
                const KernelParams p{r, 0.5 * max_gamma(r), 1.0};
                const auto ell = gram_eigenvalues(rule, p);
                const auto pts = nodes(rule);
                const std::size_t n = pts.size();
                double scale = 0, dev = 0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        std::complex<long double> s = 0;
                        for (std::size_t k = 0; k < n; ++k) {
                            const long double a = 2.0L * std::numbers::pi_v<long double>
                                                  * static_cast<long double>(((i + n - j) * k) % n) / n;
                            s += static_cast<long double>(ell[k]) * std::complex<long double>(std::cos(a), std::sin(a));
                        }
                        const double c = eval_c0(pts.row(i), pts.row(j), p);
                        dev = std::max(dev, std::abs(static_cast<double>(s.real() / n) - c));
                        scale = std::max(scale, std::abs(c));
                    }
                recon_worst = std::max(recon_worst, dev / scale);
            }

    // Trapezoid rule in x' on 1e4 intervals, per coordinate, for c0_mean.
    double mean_worst = 0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u;
    for (int r = 1; r <= 4; ++r)
        for (int k = 0; k < 5; ++k) {
            const double x = u(rng);
            const KernelParams p{r, max_gamma(r), 1.0};
            const int m = 10000;
            double s = 0;
            for (int i = 0; i <= m; ++i) {
                const double xp[] = {static_cast<double>(i) / m};
                const double xs[] = {x};
                s += (i == 0 || i == m ? 0.5 : 1.0) * eval_c0(xs, xp, p);
            }
            mean_worst = std::max(mean_worst, std::abs(s / m - 1.0));
        }
    report(3, "eigenstructure", fft_worst <= 1e-12 && recon_worst <= 1e-9 && mean_worst <= 1e-6,
           fmt("fft(1) dev %.1e n, C0 reconstruction %.1e, c0 mean dev %.1e", fft_worst, recon_worst, mean_worst));
}

struct Cell {
    int successes = 0;
    int runs = 0;
};

Cell reliability(const IntegrandSpec& f, double eps, int reps) {
    Cell c;
    for (int rep = 0; rep < reps; ++rep) {
        CubatureConfig cfg;
        cfg.tolerance = eps;
        cfg.seed = 5000 + static_cast<std::uint64_t>(rep);
        const auto res = auto_cubature(f.eval, f.dim, cfg);
        c.successes += std::abs(res.estimate - *f.true_value) <= eps;
        ++c.runs;
    }
    return c;
}

void criterion_4() {
    const auto t0 = clock_type::now();
    const std::vector<std::pair<std::string, IntegrandSpec>> fs{{"product_peak d=3", product_peak(3, 1.0)},
                                                                {"bernoulli_native d=2", bernoulli_native(2, 1, {1.0, 1.0})}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, f] : fs)
        for (double eps : {1e-2, 1e-3}) {
            const Cell c = reliability(f, eps, 100);
            ok = ok && c.successes >= 95;
            detail += fmt("%s eps=%g %d/100; ", name.c_str(), eps, c.successes);
        }
    const double elapsed = seconds_since(t0);
    report(4, "stopping-rule reliability", ok && elapsed < 300.0, detail + fmt("%.1f s", elapsed));
}

void criterion_5() {
    const auto f = product_peak(3, 1.0);
    auto g = [&](std::span<const double> x) { return 47.0 * f.eval(x) + 3.0; };
    double est_dev = 0, hw_dev = 0;
    int same_n = 0, cases = 0;
    for (double eps : {1e-2, 1e-3})
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            CubatureConfig cf;
            cf.tolerance = eps;
            cf.seed = seed;
            CubatureConfig cg = cf;
            cg.tolerance = 47.0 * eps;
            const auto a = auto_cubature(f.eval, 3, cf);
            const auto b = auto_cubature(g, 3, cg);
            ++cases;
            same_n += a.n_used == b.n_used;
            est_dev = std::max(est_dev, std::abs(b.estimate - (47.0 * a.estimate + 3.0)) / std::abs(b.estimate));
            hw_dev = std::max(hw_dev, std::abs(b.half_width - 47.0 * a.half_width) / (47.0 * a.half_width));
        }
    report(5, "scale equivariance", same_n == cases && est_dev <= 1e-10 && hw_dev <= 1e-10,
           fmt("n_used equal %d/%d, estimate dev %.1e, half-width dev %.1e (tolerance scaled by 47)", same_n, cases,
               est_dev, hw_dev));
}

void criterion_6() {
    const double q = student_t_quantile(kInfiniteDof, 0.995);
    report(6, "Student-t quantile", std::abs(q - 2.5758) <= 1e-3, fmt("t(inf, 0.995) = %.6f", q));
}

void criterion_7() {
    const AsianOptionParams p;
    const auto file = config_dir() / "asian_benchmark.json";
    std::optional<AsianReference> ref;
    std::size_t points = 0;
    int shifts = 0;
    try {
        ref = find_asian_reference(p, file);
        if (ref) {
            const auto j = read_json(file);
            for (const auto& e : j.at("references"))
                if (e.at("price").get<double>() == ref->price) {
                    points = e.value("points_per_shift", std::size_t{0});
                    shifts = e.value("shifts", 0);
                }
        }
    } catch (const std::exception& e) {
        report(7, "option benchmark", false, std::string("cannot read reference: ") + e.what());
        return;
    }
    if (!ref) {
        report(7, "option benchmark", false, "no reference in " + file.string());
        return;
    }
    const bool ref_ok = ref->standard_error <= 1e-3 && points == (std::size_t{1} << 22) && shifts == 32;
    IntegrandSpec f = asian_option(p);
    f.true_value = ref->price;
    const auto t0 = clock_type::now();
    const Cell c = reliability(f, 1e-2, 100);
    const double elapsed = seconds_since(t0);
    report(7, "option benchmark", ref_ok && c.successes >= 95 && elapsed < 600.0,
           fmt("reference %.6f (se %.1e, 2^%d x %d), %d/100 within 1e-2, %.1f s", ref->price, ref->standard_error,
               static_cast<int>(std::log2(static_cast<double>(std::max<std::size_t>(points, 1)))), shifts,
               c.successes, elapsed));
}

double median_fit_seconds(int m) {
    const std::size_t d = 12;
    const auto rule = make_lattice(default_generating_vector(d), random_shift(d, 8), m);
    const auto f = product_peak(d, 1.0);
    std::vector<double> values(rule.size());
    std::vector<double> x(d);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        rule.node(i, x);
        values[i] = f.eval(x);
    }
    const CubatureConfig cfg;
    std::vector<double> times;
    for (int k = 0; k < 5; ++k) {
        const auto t0 = clock_type::now();
        const auto s = fit_step(values, rule, cfg);
        times.push_back(seconds_since(t0));
        if (!(s.posterior.half_width >= 0.0)) times.back() = INFINITY;
    }
    std::sort(times.begin(), times.end());
    return times[2];
}

void criterion_8() {
    const double small = median_fit_seconds(14);
    const double large = median_fit_seconds(18);
    const double ratio = large / small;
    report(8, "complexity guard", ratio <= 40.0,
           fmt("posterior+EB step %.4f s at 2^14, %.4f s at 2^18, ratio %.1f", small, large, ratio));
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
