#pragma once

// Tolerance-sweep experiments: integrand registry, replicated auto_cubature
// runs, CSV traces, a per-tolerance summary and two SVG plots.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "bcub/bayes_fast.hpp"
#include "bcub/integrands.hpp"

#ifndef BCUB_CONFIG_DIR
#define BCUB_CONFIG_DIR "config"
#endif

namespace bcub {

class unknown_integrand_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& integrand_names() {
    static const std::vector<std::string> names{"constant", "product_peak", "bernoulli_native", "asian_option"};
    return names;
}

[[nodiscard]] inline PathConstruction parse_path(const std::string& s) {
    if (s == "cholesky") return PathConstruction::cholesky;
    if (s == "bridge") return PathConstruction::brownian_bridge;
    if (s == "pca") return PathConstruction::pca;
    throw std::invalid_argument("unknown path construction '" + s + "' (cholesky|bridge|pca)");
}

[[nodiscard]] inline std::string to_string(PathConstruction p) {
    switch (p) {
    case PathConstruction::cholesky: return "cholesky";
    case PathConstruction::brownian_bridge: return "bridge";
    case PathConstruction::pca: return "pca";
    }
    return "?";
}

/// Directory holding asian_benchmark.json; BCUB_CONFIG_DIR in the environment wins.
[[nodiscard]] inline std::filesystem::path config_dir() {
    if (const char* env = std::getenv("BCUB_CONFIG_DIR"); env && *env) return env;
    return BCUB_CONFIG_DIR;
}

struct AsianReference {
    double price = 0.0;
    double standard_error = 0.0;
    std::string provenance;
};

[[nodiscard]] inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw io_error("cannot parse " + path.string() + ": " + e.what());
    }
}

[[nodiscard]] inline AsianOptionParams asian_params_from_json(const nlohmann::json& j, AsianOptionParams p = {}) {
    p.s0 = j.value("s0", p.s0);
    p.strike = j.value("strike", p.strike);
    p.rate = j.value("rate", p.rate);
    p.volatility = j.value("volatility", p.volatility);
    p.maturity = j.value("maturity", p.maturity);
    p.n_monitor = j.value("n_monitor", p.n_monitor);
    return p;
}

/// Reference price for the option parameters, if the benchmark file has one.
/// Neither the path construction nor the baker map changes the integral.
[[nodiscard]] inline std::optional<AsianReference> find_asian_reference(const AsianOptionParams& p,
                                                                       const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) return std::nullopt;
    const nlohmann::json j = read_json(file);
    for (const auto& entry : j.value("references", nlohmann::json::array())) {
        const AsianOptionParams q = asian_params_from_json(entry.at("params"));
        if (q.s0 == p.s0 && q.strike == p.strike && q.rate == p.rate && q.volatility == p.volatility
            && q.maturity == p.maturity && q.n_monitor == p.n_monitor)
            return AsianReference{entry.at("price").get<double>(), entry.at("standard_error").get<double>(),
                                  entry.value("provenance", std::string{})};
    }
    return std::nullopt;
}

struct IntegrandRequest {
    std::string name;
    std::size_t dim = 3;
    nlohmann::json params = nlohmann::json::object();
    int r = 1;  // default order for bernoulli_native
    Periodization periodization = Periodization::baker;
    PathConstruction path = PathConstruction::cholesky;
};

[[nodiscard]] inline IntegrandSpec make_integrand(const IntegrandRequest& req) {
    if (req.dim == 0) throw std::invalid_argument("dimension must be positive");
    const auto& p = req.params;
    if (req.name == "constant") return constant_integrand(req.dim, p.value("value", 1.0));
    if (req.name == "product_peak") return product_peak(req.dim, p.value("a", 1.0));
    if (req.name == "bernoulli_native") {
        auto coeffs = p.value("coeffs", std::vector<double>(req.dim, 1.0));
        return bernoulli_native(req.dim, p.value("r", req.r), std::move(coeffs));
    }
    if (req.name == "asian_option") {
        AsianOptionParams ap = asian_params_from_json(p);
        ap.n_monitor = req.dim;
        ap.path = req.path;
        ap.periodization = req.periodization;
        IntegrandSpec s = asian_option(ap);
        if (auto ref = find_asian_reference(ap, config_dir() / "asian_benchmark.json")) {
            s.true_value = ref->price;
            s.provenance = ref->provenance;
        }
        return s;
    }
    std::string known;
    for (const auto& n : integrand_names()) known += (known.empty() ? "" : ", ") + n;
    throw unknown_integrand_error("unknown integrand '" + req.name + "' (known: " + known + ")");
}

struct ExperimentPlan {
    IntegrandRequest integrand;
    std::vector<double> tolerances{1e-1, 1e-2, 1e-3, 1e-4};
    int replications = 100;
    std::uint64_t base_seed = 0;
    std::filesystem::path out_dir = "out";
    CubatureConfig cubature;  // tolerance and seed are set per run
    double success_floor = 0.0;
    int jobs = 1;             // replications run concurrently
};

inline void validate(const ExperimentPlan& plan) {
    if (plan.tolerances.empty()) throw std::invalid_argument("ExperimentPlan: no tolerances");
    for (std::size_t i = 0; i < plan.tolerances.size(); ++i) {
        if (!(plan.tolerances[i] > 0.0)) throw std::invalid_argument("ExperimentPlan: tolerances must be positive");
        for (std::size_t j = 0; j < i; ++j)
            if (plan.tolerances[j] == plan.tolerances[i])
                throw std::invalid_argument("ExperimentPlan: tolerances must be distinct");
    }
    if (plan.replications < 1) throw std::invalid_argument("ExperimentPlan: replications must be >= 1");
    if (!(plan.success_floor >= 0.0 && plan.success_floor <= 1.0))
        throw std::invalid_argument("ExperimentPlan: success floor must lie in [0,1]");
    if (plan.jobs < 1) throw std::invalid_argument("ExperimentPlan: jobs must be >= 1");
}

struct RunRecord {
    std::string integrand;
    std::size_t d = 0;
    double epsilon = 0.0;
    int replication = 0;
    std::uint64_t seed = 0;
    double estimate = 0.0;
    std::optional<double> true_value;
    double half_width = 0.0;
    std::size_t n_used = 0;
    bool converged = false;
    int theta_r = 0;
    double theta_gamma = 0.0;
    double wall_seconds = 0.0;

    [[nodiscard]] std::optional<double> abs_error() const {
        if (!true_value) return std::nullopt;
        return std::abs(estimate - *true_value);
    }
};

struct ToleranceSummary {
    double epsilon = 0.0;
    int runs = 0;
    int scored = 0;       // runs with a known true value
    int successes = 0;    // abs_error <= epsilon
    int converged = 0;
    double median_n = 0.0;
    std::array<double, 5> time_quantiles{};  // min, q25, median, q75, max

    [[nodiscard]] std::optional<double> success_rate() const {
        if (scored == 0) return std::nullopt;
        return static_cast<double>(successes) / scored;
    }
};

struct ExperimentSummary {
    std::vector<ToleranceSummary> per_tolerance;
    std::vector<RunRecord> runs;
    bool below_floor = false;
};

/// Linear-interpolation quantile of sorted data.
[[nodiscard]] inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Shortest round-trip decimal form.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline constexpr const char* kCsvHeader =
    "integrand,d,epsilon,replication,seed,estimate,true_value,abs_error,half_width,n_used,converged,"
    "theta_r,theta_gamma,wall_seconds";

[[nodiscard]] inline std::string csv_row(const RunRecord& r) {
    std::ostringstream os;
    const auto err = r.abs_error();
    os << r.integrand << ',' << r.d << ',' << format_double(r.epsilon) << ',' << r.replication << ',' << r.seed
       << ',' << format_double(r.estimate) << ',' << (r.true_value ? format_double(*r.true_value) : "") << ','
       << (err ? format_double(*err) : "") << ',' << format_double(r.half_width) << ',' << r.n_used << ','
       << (r.converged ? "true" : "false") << ',' << r.theta_r << ',' << format_double(r.theta_gamma) << ','
       << format_double(r.wall_seconds);
    return os.str();
}

[[nodiscard]] inline RunRecord run_once(const IntegrandSpec& f, const std::string& name, const ExperimentPlan& plan,
                                        double eps, int replication) {
    CubatureConfig cfg = plan.cubature;
    cfg.tolerance = eps;
    cfg.seed = plan.base_seed + static_cast<std::uint64_t>(replication);
    const auto start = std::chrono::steady_clock::now();
    const CubatureResult res = auto_cubature(f, f.dim, cfg);
    RunRecord rec;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.integrand = name;
    rec.d = f.dim;
    rec.epsilon = eps;
    rec.replication = replication;
    rec.seed = cfg.seed;
    rec.estimate = res.estimate;
    rec.true_value = f.true_value;
    rec.half_width = res.half_width;
    rec.n_used = res.n_used;
    rec.converged = res.converged;
    rec.theta_r = res.theta_eb.r;
    rec.theta_gamma = res.theta_eb.gamma;
    return rec;
}

[[nodiscard]] inline std::vector<ToleranceSummary> summarize(const std::vector<RunRecord>& runs,
                                                            const std::vector<double>& tolerances) {
    std::vector<ToleranceSummary> out;
    for (double eps : tolerances) {
        ToleranceSummary s;
        s.epsilon = eps;
        std::vector<double> times, ns;
        for (const auto& r : runs) {
            if (r.epsilon != eps) continue;
            ++s.runs;
            s.converged += r.converged;
            if (auto e = r.abs_error()) {
                ++s.scored;
                s.successes += *e <= eps;
            }
            times.push_back(r.wall_seconds);
            ns.push_back(static_cast<double>(r.n_used));
        }
        std::sort(times.begin(), times.end());
        std::sort(ns.begin(), ns.end());
        s.time_quantiles = {quantile_sorted(times, 0.0), quantile_sorted(times, 0.25), quantile_sorted(times, 0.5),
                            quantile_sorted(times, 0.75), quantile_sorted(times, 1.0)};
        s.median_n = quantile_sorted(ns, 0.5);
        out.push_back(s);
    }
    return out;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << text;
    out.close();
    if (!out) throw io_error("write failed for " + path.string());
}

struct LogAxis {
    double lo, hi;        // data range (log10)
    double p0, p1;        // pixel range
    [[nodiscard]] double operator()(double v) const {
        return p0 + (std::log10(v) - lo) / (hi - lo) * (p1 - p0);
    }
};

[[nodiscard]] inline LogAxis log_axis(double vmin, double vmax, double p0, double p1) {
    double lo = std::floor(std::log10(vmin));
    double hi = std::ceil(std::log10(vmax));
    if (hi <= lo) hi = lo + 1;
    return {lo, hi, p0, p1};
}

inline void svg_axes(std::ostringstream& os, const LogAxis& x, const LogAxis& y, const std::string& xlabel,
                     const std::string& ylabel, const std::string& title) {
    os << "<line x1='" << x.p0 << "' y1='" << y.p0 << "' x2='" << x.p1 << "' y2='" << y.p0 << "' stroke='black'/>\n";
    os << "<line x1='" << x.p0 << "' y1='" << y.p0 << "' x2='" << x.p0 << "' y2='" << y.p1 << "' stroke='black'/>\n";
    for (double e = x.lo; e <= x.hi + 1e-9; e += 1) {
        const double px = x(std::pow(10.0, e));
        os << "<line x1='" << px << "' y1='" << y.p0 << "' x2='" << px << "' y2='" << y.p0 + 5 << "' stroke='black'/>\n"
           << "<text x='" << px << "' y='" << y.p0 + 20 << "' font-size='12' text-anchor='middle'>1e" << e
           << "</text>\n";
    }
    for (double e = y.lo; e <= y.hi + 1e-9; e += 1) {
        const double py = y(std::pow(10.0, e));
        os << "<line x1='" << x.p0 - 5 << "' y1='" << py << "' x2='" << x.p0 << "' y2='" << py << "' stroke='black'/>\n"
           << "<line x1='" << x.p0 << "' y1='" << py << "' x2='" << x.p1 << "' y2='" << py
           << "' stroke='#ddd'/>\n"
           << "<text x='" << x.p0 - 8 << "' y='" << py + 4 << "' font-size='12' text-anchor='end'>1e" << e
           << "</text>\n";
    }
    os << "<text x='" << (x.p0 + x.p1) / 2 << "' y='" << y.p0 + 40 << "' font-size='14' text-anchor='middle'>"
       << xlabel << "</text>\n"
       << "<text x='20' y='" << (y.p0 + y.p1) / 2 << "' font-size='14' text-anchor='middle' transform='rotate(-90 20 "
       << (y.p0 + y.p1) / 2 << ")'>" << ylabel << "</text>\n"
       << "<text x='" << (x.p0 + x.p1) / 2 << "' y='20' font-size='15' text-anchor='middle'>" << title << "</text>\n";
}

constexpr double kSvgWidth = 640, kSvgHeight = 480;
constexpr double kLeft = 80, kRight = 610, kTop = 40, kBottom = 420;

} // namespace detail

/// abs_error against epsilon on log-log axes, with the line y = epsilon.
[[nodiscard]] inline std::string error_plot_svg(const std::vector<RunRecord>& runs, const std::string& title) {
    double emin = std::numeric_limits<double>::infinity(), emax = 0;
    double ymin = std::numeric_limits<double>::infinity(), ymax = 0;
    for (const auto& r : runs) {
        emin = std::min(emin, r.epsilon);
        emax = std::max(emax, r.epsilon);
        if (auto e = r.abs_error(); e && *e > 0) {
            ymin = std::min(ymin, *e);
            ymax = std::max(ymax, *e);
        }
    }
    if (!(emin > 0)) emin = emax = 1;
    emin /= 2;
    emax *= 2;
    ymin = std::min(std::isfinite(ymin) ? ymin : emin, emin);
    ymax = std::max(ymax, emax);
    const double floor_val = ymin;  // exact zeros are drawn on the bottom axis
    const auto x = detail::log_axis(emin, emax, detail::kLeft, detail::kRight);
    const auto y = detail::log_axis(ymin, ymax, detail::kBottom, detail::kTop);
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << detail::kSvgWidth << "' height='" << detail::kSvgHeight
       << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
    detail::svg_axes(os, x, y, "tolerance", "absolute error", title);
    const double a = std::pow(10.0, std::max(x.lo, y.lo));
    const double b = std::pow(10.0, std::min(x.hi, y.hi));
    os << "<line x1='" << x(a) << "' y1='" << y(a) << "' x2='" << x(b) << "' y2='" << y(b)
       << "' stroke='red' stroke-dasharray='6,4'/>\n";
    for (const auto& r : runs) {
        const auto e = r.abs_error();
        if (!e) continue;
        const double jitter = 1.0 + 0.15 * ((r.replication % 11) - 5) / 5.0;
        os << "<circle cx='" << x(r.epsilon * jitter) << "' cy='" << y(std::max(*e, floor_val)) << "' r='2.5' fill='"
           << (*e <= r.epsilon ? "#1f77b4" : "#d62728") << "' fill-opacity='0.6'/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Box plot of wall time per tolerance on log-log axes.
[[nodiscard]] inline std::string time_plot_svg(const std::vector<ToleranceSummary>& summary, const std::string& title) {
    double emin = std::numeric_limits<double>::infinity(), emax = 0;
    double tmin = std::numeric_limits<double>::infinity(), tmax = 0;
    for (const auto& s : summary) {
        emin = std::min(emin, s.epsilon);
        emax = std::max(emax, s.epsilon);
        tmin = std::min(tmin, std::max(s.time_quantiles[0], 1e-6));
        tmax = std::max(tmax, std::max(s.time_quantiles[4], 1e-6));
    }
    if (!(emin > 0)) emin = emax = 1;
    if (!std::isfinite(tmin)) tmin = tmax = 1;
    const auto x = detail::log_axis(emin / 2, emax * 2, detail::kLeft, detail::kRight);
    const auto y = detail::log_axis(tmin, tmax, detail::kBottom, detail::kTop);
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << detail::kSvgWidth << "' height='" << detail::kSvgHeight
       << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
    detail::svg_axes(os, x, y, "tolerance", "wall time (s)", title);
    for (const auto& s : summary) {
        if (s.runs == 0) continue;
        const double cx = x(s.epsilon);
        const auto py = [&](double t) { return y(std::max(t, 1e-6)); };
        const auto& q = s.time_quantiles;
        os << "<line x1='" << cx << "' y1='" << py(q[0]) << "' x2='" << cx << "' y2='" << py(q[4])
           << "' stroke='black'/>\n"
           << "<rect x='" << cx - 12 << "' y='" << py(q[3]) << "' width='24' height='"
           << std::max(py(q[1]) - py(q[3]), 1.0) << "' fill='#9ecae1' stroke='black'/>\n"
           << "<line x1='" << cx - 12 << "' y1='" << py(q[2]) << "' x2='" << cx + 12 << "' y2='" << py(q[2])
           << "' stroke='black' stroke-width='2'/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

[[nodiscard]] inline std::string summary_json(const ExperimentPlan& plan, const ExperimentSummary& s) {
    nlohmann::json j;
    j["integrand"] = plan.integrand.name;
    j["d"] = plan.integrand.dim;
    j["replications"] = plan.replications;
    j["base_seed"] = plan.base_seed;
    j["success_floor"] = plan.success_floor;
    j["below_floor"] = s.below_floor;
    for (const auto& t : s.per_tolerance) {
        nlohmann::json row;
        row["epsilon"] = t.epsilon;
        row["runs"] = t.runs;
        row["converged"] = t.converged;
        row["median_n"] = t.median_n;
        if (auto rate = t.success_rate()) row["success_rate"] = *rate;
        else row["success_rate"] = nullptr;
        row["time_seconds"] = {{"min", t.time_quantiles[0]},    {"q25", t.time_quantiles[1]},
                               {"median", t.time_quantiles[2]}, {"q75", t.time_quantiles[3]},
                               {"max", t.time_quantiles[4]}};
        j["tolerances"].push_back(row);
    }
    return j.dump(2) + "\n";
}

[[nodiscard]] inline std::string summary_line(const ToleranceSummary& t) {
    std::ostringstream os;
    os << "eps=" << format_double(t.epsilon) << "  runs=" << t.runs << "  success=";
    if (auto rate = t.success_rate()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *rate);
        os << buf << " (" << t.successes << "/" << t.scored << ")";
    } else {
        os << "n/a (no true value)";
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "  converged=%d  median_n=%.0f  median_time=%.3gs", t.converged, t.median_n,
                  t.time_quantiles[2]);
    os << buf;
    return os.str();
}

/// Runs every (tolerance, replication) pair with seed = base_seed + replication and
/// writes runs.csv, summary.json, error_vs_tolerance.svg and time_vs_tolerance.svg.
inline ExperimentSummary run_experiment(const ExperimentPlan& plan, std::ostream* log = nullptr) {
    validate(plan);
    const IntegrandSpec f = make_integrand(plan.integrand);

    std::vector<std::pair<double, int>> tasks;
    for (double eps : plan.tolerances)
        for (int rep = 0; rep < plan.replications; ++rep) tasks.emplace_back(eps, rep);

    ExperimentSummary summary;
    summary.runs.resize(tasks.size());
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(plan.jobs), tasks.size());
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t)
            summary.runs[t] = run_once(f, plan.integrand.name, plan, tasks[t].first, tasks[t].second);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t t = w; t < tasks.size(); t += workers)
                        summary.runs[t] = run_once(f, plan.integrand.name, plan, tasks[t].first, tasks[t].second);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    summary.per_tolerance = summarize(summary.runs, plan.tolerances);
    for (const auto& t : summary.per_tolerance)
        if (auto rate = t.success_rate(); rate && *rate < plan.success_floor) summary.below_floor = true;

    std::error_code ec;
    std::filesystem::create_directories(plan.out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + plan.out_dir.string() + ": " + ec.message());
    std::string csv = std::string(kCsvHeader) + "\n";
    for (const auto& r : summary.runs) csv += csv_row(r) + "\n";
    detail::write_text(plan.out_dir / "runs.csv", csv);
    detail::write_text(plan.out_dir / "summary.json", summary_json(plan, summary));
    const std::string title = f.description + ", d=" + std::to_string(f.dim);
    detail::write_text(plan.out_dir / "error_vs_tolerance.svg", error_plot_svg(summary.runs, title));
    detail::write_text(plan.out_dir / "time_vs_tolerance.svg", time_plot_svg(summary.per_tolerance, title));

    if (log)
        for (const auto& t : summary.per_tolerance) *log << summary_line(t) << "\n";
    return summary;
}

} // namespace bcub
