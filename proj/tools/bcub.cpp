// bcub: tolerance-sweep experiments and the dense/fast equivalence check.
//
//   bcub run --integrand product_peak --dim 3 --tol 1e-2,1e-3 --reps 100 --seed 0 --out out/
//   bcub verify --max-log2-n 6
//
// Values in --config FILE (JSON) override flags; BCUB_OUT_DIR overrides the
// output directory. Exit codes: 0 ok, 1 success rate below --floor or verify
// failure, 2 usage error or unknown integrand, 3 I/O failure.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcub/equivalence.hpp"
#include "bcub/experiment.hpp"

namespace {

constexpr int kExitFloor = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct RunOptions {
    std::string integrand;
    std::size_t dim = 3;
    std::vector<double> tolerances{1e-1, 1e-2, 1e-3, 1e-4};
    int reps = 100;
    std::uint64_t seed = 0;
    std::string out = "out";
    int r = 1;
    std::string baker = "on";
    std::string path = "cholesky";
    std::string params = "{}";
    std::string config;
    double floor = 0.0;
    int min_log2_n = 8;
    int max_log2_n = 22;
    int threads = 1;
    int jobs = 1;
};

void apply_config(RunOptions& o, const nlohmann::json& j) {
    o.integrand = j.value("integrand", o.integrand);
    o.dim = j.value("dim", o.dim);
    o.tolerances = j.value("tol", o.tolerances);
    o.reps = j.value("reps", o.reps);
    o.seed = j.value("seed", o.seed);
    o.out = j.value("out", o.out);
    o.r = j.value("r", o.r);
    o.baker = j.value("baker", o.baker);
    o.path = j.value("path", o.path);
    if (j.contains("params")) o.params = j.at("params").dump();
    o.floor = j.value("floor", o.floor);
    o.min_log2_n = j.value("min_log2_n", o.min_log2_n);
    o.max_log2_n = j.value("max_log2_n", o.max_log2_n);
    o.threads = j.value("threads", o.threads);
    o.jobs = j.value("jobs", o.jobs);
}

bcub::ExperimentPlan make_plan(const RunOptions& o) {
    bcub::ExperimentPlan plan;
    plan.integrand.name = o.integrand;
    plan.integrand.dim = o.dim;
    try {
        plan.integrand.params = nlohmann::json::parse(o.params);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("--params is not valid JSON: ") + e.what());
    }
    plan.integrand.r = o.r;
    if (o.baker != "on" && o.baker != "off") throw std::invalid_argument("--baker must be on or off");
    plan.integrand.periodization = o.baker == "on" ? bcub::Periodization::baker : bcub::Periodization::none;
    plan.integrand.path = bcub::parse_path(o.path);
    plan.tolerances = o.tolerances;
    plan.replications = o.reps;
    plan.base_seed = o.seed;
    plan.out_dir = o.out;
    if (const char* env = std::getenv("BCUB_OUT_DIR"); env && *env) plan.out_dir = env;
    plan.cubature.r = o.r;
    plan.cubature.min_log2_n = o.min_log2_n;
    plan.cubature.max_log2_n = o.max_log2_n;
    plan.cubature.threads = o.threads;
    plan.success_floor = o.floor;
    plan.jobs = o.jobs;
    return plan;
}

int cmd_run(RunOptions o) {
    try {
        if (!o.config.empty()) apply_config(o, bcub::read_json(o.config));
        const bcub::ExperimentPlan plan = make_plan(o);
        const auto summary = bcub::run_experiment(plan, &std::cout);
        std::cout << "wrote " << (plan.out_dir / "runs.csv").string() << "\n";
        if (summary.below_floor) {
            std::cerr << "success rate below floor " << plan.success_floor << "\n";
            return kExitFloor;
        }
        return 0;
    } catch (const bcub::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad config value: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_verify(int max_log2_n, bool inject, std::uint64_t seed) {
    bcub::EquivalenceOptions opt;
    opt.max_log2_n = max_log2_n;
    opt.seed = seed;
    if (inject) opt.mutation = bcub::Mutation::flip_variance_sign;
    const auto report = bcub::run_equivalence_suite(opt);
    if (inject) std::cout << "mutation: fast posterior variance sign flipped\n";
    bcub::print_report(std::cout, report);
    return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian cubature on rank-1 lattices"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run = app.add_subcommand("run", "tolerance sweep with replications");
    run->add_option("--integrand", ro.integrand, "constant | product_peak | bernoulli_native | asian_option");
    run->add_option("--dim", ro.dim, "dimension");
    run->add_option("--tol", ro.tolerances, "tolerances, comma separated")->delimiter(',');
    run->add_option("--reps", ro.reps, "replications per tolerance");
    run->add_option("--seed", ro.seed, "base seed; replication k uses seed + k");
    run->add_option("--out", ro.out, "output directory");
    run->add_option("--r", ro.r, "kernel smoothness order")->check(CLI::Range(1, 4));
    run->add_option("--baker", ro.baker, "baker periodization for asian_option")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--path", ro.path, "Brownian path construction")
        ->check(CLI::IsMember({"cholesky", "bridge", "pca"}));
    run->add_option("--params", ro.params, "integrand parameters as a JSON object");
    run->add_option("--config", ro.config, "JSON file whose values override the flags");
    run->add_option("--floor", ro.floor, "minimum success rate per tolerance (exit 1 below)");
    run->add_option("--min-log2-n", ro.min_log2_n, "initial lattice size exponent");
    run->add_option("--max-log2-n", ro.max_log2_n, "largest lattice size exponent");
    run->add_option("--threads", ro.threads, "threads for integrand evaluation");
    run->add_option("--jobs", ro.jobs, "replications run concurrently");

    int verify_m = 6;
    bool inject = false;
    std::uint64_t verify_seed = 424242;
    auto* verify = app.add_subcommand("verify", "dense vs fast equivalence suite");
    verify->add_option("--max-log2-n", verify_m, "largest n = 2^m")->check(CLI::Range(2, 9));
    verify->add_option("--seed", verify_seed, "seed for gammas, shifts and data");
    verify->add_flag("--inject-sign-error", inject, "flip the sign of the fast variance (suite must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (*run) {
        if (ro.integrand.empty() && ro.config.empty()) {
            std::cerr << "error: --integrand is required\n";
            return kExitUsage;
        }
        return cmd_run(ro);
    }
    return cmd_verify(verify_m, inject, verify_seed);
}
