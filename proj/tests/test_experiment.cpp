#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bcub/experiment.hpp"

using namespace bcub;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bcub_test_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string s; std::getline(in, s);) lines.push_back(s);
    return lines;
}

std::string drop_last_field(const std::string& line) { return line.substr(0, line.rfind(',')); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BCUB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentPlan small_plan(const std::string& integrand, const fs::path& out) {
    ExperimentPlan plan;
    plan.integrand.name = integrand;
    plan.integrand.dim = 3;
    plan.tolerances = {1e-1, 1e-2};
    plan.replications = 4;
    plan.base_seed = 100;
    plan.out_dir = out;
    return plan;
}

} // namespace

TEST(Experiment, WritesCsvSummaryAndPlots) {
    const auto out = scratch("files");
    const auto s = run_experiment(small_plan("product_peak", out));
    const auto lines = read_lines(out / "runs.csv");
    ASSERT_EQ(lines.size(), 2u * 4u + 1u);
    EXPECT_EQ(lines[0], kCsvHeader);
    EXPECT_EQ(lines[0],
              "integrand,d,epsilon,replication,seed,estimate,true_value,abs_error,half_width,n_used,converged,"
              "theta_r,theta_gamma,wall_seconds");
    EXPECT_EQ(lines[1].rfind("product_peak,3,0.1,0,100,", 0), 0u);
    EXPECT_EQ(lines[8].rfind("product_peak,3,0.01,3,103,", 0), 0u);
    EXPECT_TRUE(fs::exists(out / "summary.json"));
    for (const char* svg : {"error_vs_tolerance.svg", "time_vs_tolerance.svg"}) {
        const auto svg_lines = read_lines(out / svg);
        ASSERT_FALSE(svg_lines.empty());
        EXPECT_NE(svg_lines[0].find("<svg"), std::string::npos);
    }
    const auto j = read_json(out / "summary.json");
    EXPECT_EQ(j.at("tolerances").size(), 2u);
    ASSERT_EQ(s.per_tolerance.size(), 2u);
    EXPECT_EQ(s.per_tolerance[0].runs, 4);
    for (const auto& r : s.runs) EXPECT_TRUE(r.converged);
    fs::remove_all(out);
}

TEST(Experiment, DeterministicApartFromWallTime) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    auto pa = small_plan("bernoulli_native", a);
    auto pb = small_plan("bernoulli_native", b);
    pb.jobs = 3;
    (void)run_experiment(pa);
    (void)run_experiment(pb);
    const auto la = read_lines(a / "runs.csv"), lb = read_lines(b / "runs.csv");
    ASSERT_EQ(la.size(), lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(drop_last_field(la[i]), drop_last_field(lb[i]));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Experiment, ConstantIntegrandUsesInitialSize) {
    const auto out = scratch("const");
    auto plan = small_plan("constant", out);
    plan.tolerances = {1e-1, 1e-4};
    const auto s = run_experiment(plan);
    for (const auto& r : s.runs) {
        EXPECT_EQ(r.n_used, 256u);
        EXPECT_EQ(r.abs_error(), 0.0);
    }
    for (const auto& t : s.per_tolerance) EXPECT_EQ(t.success_rate(), 1.0);
    fs::remove_all(out);
}

TEST(Experiment, RejectsInvalidPlans) {
    auto plan = small_plan("product_peak", scratch("bad"));
    plan.tolerances = {1e-2, 1e-2};
    EXPECT_THROW((void)run_experiment(plan), std::invalid_argument);
    plan.tolerances = {-1.0};
    EXPECT_THROW((void)run_experiment(plan), std::invalid_argument);
    plan.tolerances = {1e-2};
    plan.replications = 0;
    EXPECT_THROW((void)run_experiment(plan), std::invalid_argument);
    plan.replications = 1;
    plan.integrand.name = "nope";
    EXPECT_THROW((void)run_experiment(plan), unknown_integrand_error);
}

TEST(Experiment, UnscoredRunsLeaveTrueValueEmpty) {
    RunRecord r;
    r.integrand = "asian_option";
    r.d = 12;
    r.epsilon = 0.01;
    r.estimate = 1.5;
    const std::string row = csv_row(r);
    EXPECT_NE(row.find(",1.5,,,"), std::string::npos);
}

TEST(Experiment, QuantilesInterpolate) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    EXPECT_EQ(quantile_sorted(v, 0.0), 1.0);
    EXPECT_EQ(quantile_sorted(v, 0.5), 3.0);
    EXPECT_EQ(quantile_sorted(v, 0.125), 1.5);
    EXPECT_EQ(quantile_sorted(v, 1.0), 5.0);
}

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli_codes");
    EXPECT_EQ(run_cli("run --integrand product_peak --dim 2 --tol 0.1 --reps 2 --out " + out.string()), 0);
    EXPECT_EQ(read_lines(out / "runs.csv").size(), 3u);
    EXPECT_EQ(run_cli("run --integrand no_such_thing --dim 2 --out " + out.string()), 2);
    EXPECT_EQ(run_cli("run --integrand product_peak --dim 2 --r 7 --out " + out.string()), 2);
    EXPECT_EQ(run_cli("run --integrand product_peak --dim 2 --tol 0.1 --reps 1 --out /dev/null/sub"), 3);
    EXPECT_EQ(run_cli("run --integrand product_peak --dim 3 --tol 1e-7 --reps 2 --min-log2-n 8 --max-log2-n 8"
                      " --floor 0.5 --out " + out.string()),
              1);
    EXPECT_EQ(run_cli("bogus"), 2);
    fs::remove_all(out);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const auto flag_dir = scratch("cli_flag"), env_dir = scratch("cli_env");
    const std::string cmd = "BCUB_OUT_DIR=" + env_dir.string() + " " + std::string(BCUB_CLI_PATH)
                            + " run --integrand constant --dim 1 --tol 0.1 --reps 1 --out " + flag_dir.string()
                            + " > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(env_dir / "runs.csv"));
    EXPECT_FALSE(fs::exists(flag_dir));
    fs::remove_all(env_dir);
}

TEST(Cli, ConfigOverridesFlags) {
    const auto out = scratch("cli_cfg");
    fs::create_directories(out);
    const auto cfg = out / "plan.json";
    std::ofstream(cfg) << R"({"integrand": "bernoulli_native", "dim": 2, "tol": [0.1, 0.05], "reps": 3,
                            "params": {"coeffs": [0.5, 0.25]}})";
    EXPECT_EQ(run_cli("run --integrand product_peak --dim 4 --tol 0.1 --reps 1 --config " + cfg.string() + " --out "
                      + out.string()),
              0);
    const auto lines = read_lines(out / "runs.csv");
    ASSERT_EQ(lines.size(), 2u * 3u + 1u);
    EXPECT_EQ(lines[1].rfind("bernoulli_native,2,", 0), 0u);
    EXPECT_EQ(run_cli("run --config " + (out / "missing.json").string()), 3);
    std::ofstream(cfg) << R"({"reps": "many"})";
    EXPECT_EQ(run_cli("run --integrand constant --config " + cfg.string() + " --out " + out.string()), 2);
    fs::remove_all(out);
}

TEST(Cli, Verify) {
    EXPECT_EQ(run_cli("verify --max-log2-n 4"), 0);
    EXPECT_EQ(run_cli("verify --max-log2-n 4 --inject-sign-error"), 1);
}
