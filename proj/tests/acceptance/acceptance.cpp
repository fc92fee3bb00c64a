// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [--jobs N]

#include "lmshoot/parallel.hpp"
#include "lmshoot/report.hpp"
#include "lmshoot/spectrum.hpp"
#include "lmshoot/verify.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

using namespace lmshoot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Eigenvalue oracles
// ---------------------------------------------------------------------------

void criterion_eigen() {
    const auto t0 = Clock::now();
    const IntegratorSettings s;
    double worst_interval = 0.0;
    for (const EigenResult& e : eigenvalues(6, ProblemConfig{1, std::numbers::pi}, s)) {
        const double exact = (e.k - 1.0) * (e.k - 1.0);
        worst_interval = std::max(worst_interval, e.k == 1 ? std::abs(e.lambda) : std::abs(e.lambda - exact) / exact);
    }
    const double j11 = boost::math::cyl_bessel_j_zero(1.0, 1);
    const double disc = eigenvalue(2, ProblemConfig{2, 1.0}, s).lambda;
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::bisect(
        [](double x) { return std::sin(x) - x * std::cos(x); }, std::numbers::pi + 1e-9,
        1.5 * std::numbers::pi - 1e-9, tol, iters);
    const double x = 0.5 * (a + b);
    const double ball = eigenvalue(2, ProblemConfig{3, 1.0}, s).lambda;
    const double elapsed = seconds_since(t0);
    const bool pass = worst_interval < 1e-8 && std::abs(disc - 14.6819706) <= 1e-5 &&
                      std::abs(disc - j11 * j11) <= 1e-5 && std::abs(ball - 20.1907286) <= 1e-5 &&
                      std::abs(ball - x * x) <= 1e-5 && elapsed < 5.0;
    report(1, pass,
           fmt("eigenvalue oracles: interval max rel err %.2e; disc lambda_2 = %.9f (Bessel %.9f); "
               "ball lambda_2 = %.9f (tan x = x: %.9f); %.2f s",
               worst_interval, disc, j11 * j11, ball, x * x, elapsed));
}

// ---------------------------------------------------------------------------
// 2, 4 and part of 7: the seeded invariant suite
// ---------------------------------------------------------------------------

struct SuiteTotals {
    double max_slope = 0.0;
    double worst_gamma_margin = -1.0;  ///< max over cells of max|u'|_osc - gamma
    int slope = 0, gamma = 0, theta = 0, zero_count = 0, drift = 0, agreement = 0;
    double max_drift = 0.0;
    double seconds = 0.0;
};

SuiteTotals run_suite() {
    const VerifyConfig cfg;
    const auto t0 = Clock::now();
    const CheckReport r = check_invariant_suite(cfg);
    SuiteTotals t;
    t.seconds = seconds_since(t0);
    for (const auto& cell : r.measured["cells"]) {
        t.max_slope = std::max(t.max_slope, cell["max_abs_slope"].get<double>());
        if (cell["oscillatory_shots"].get<int>() > 0) {
            t.worst_gamma_margin = std::max(
                t.worst_gamma_margin, cell["max_abs_slope_oscillatory"].get<double>() - cell["gamma"].get<double>());
        }
        const auto& f = cell["failures"];
        t.slope += f["slope"].get<int>();
        t.gamma += f["gamma"].get<int>();
        t.theta += f["theta_monotone"].get<int>();
        t.zero_count += f["zero_count"].get<int>();
        t.drift += f["drift"].get<int>();
        t.agreement += f["agreement"].get<int>();
        if (cell.contains("max_relative_drift")) {
            t.max_drift = std::max(t.max_drift, cell["max_relative_drift"].get<double>());
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// 3. Slow shots near 1 and for large data
// ---------------------------------------------------------------------------

void criterion_slow() {
    bool pass = true;
    std::string detail;
    for (double R : {5.0, 24.0}) {
        VerifyConfig cfg;
        cfg.problem = ProblemConfig{2, R};
        const CheckReport large = check_slow_large_d(cfg);
        const CheckReport near = check_slow_near_one(cfg);
        pass = pass && large.pass && near.pass && near.measured["regime"] == "f1";
        double max_h = 0.0;
        for (const auto& shot : large.measured["shots"]) max_h = std::max(max_h, shot["half_turns"].get<double>());
        detail += fmt("R=%g: max half_turns at d in {1+R, 1+1.5R, 1+2R} = %.6f, delta = %.3g; ", R, max_h,
                      near.measured["delta"].get<double>());
    }
    report(3, pass, "slow shots: " + detail.substr(0, detail.size() - 2));
}

// ---------------------------------------------------------------------------
// 5, 6 and part of 7: threshold radii and the branch pattern at twice them
// ---------------------------------------------------------------------------

struct PatternRun {
    bool pass = false;
    std::string detail;
    double max_aux_deviation = 0.0;
    int branches = 0;
    int scan_records = 0;
    int scan_mismatches = 0;
    double seconds = 0.0;
};

PatternRun pattern_at_twice_threshold(int k, double R_max, int jobs) {
    PatternRun run;
    const auto t0 = Clock::now();
    const IntegratorSettings s;
    ThresholdOptions topt;
    topt.solve.scan.jobs = jobs;
    const ThresholdResult th = estimate_threshold_radius(Nonlinearity::cubic_pinned(), 2, k, R_max, s, topt);

    VerifyConfig cfg;
    cfg.problem = ProblemConfig{2, 2.0 * th.R_star};
    cfg.solve.scan.jobs = jobs;
    cfg.k = k;
    const CheckReport rep = check_theorem_main(cfg);

    // Zero-count pattern of the chain: 1..k then k..1 on each side.
    const Problem p(cfg.f, cfg.problem);
    const SolveResult res = find_solutions(p, s, cfg.solve);
    bool zero_pattern = true;
    std::string zeros_text;
    for (int sign : {-1, 1}) {
        const auto chain = theorem_chain(res, sign, k);
        zero_pattern = zero_pattern && chain.size() == static_cast<std::size_t>(2 * k);
        zeros_text += sign < 0 ? " below (" : " above (";
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const int expected = i < static_cast<std::size_t>(k) ? static_cast<int>(i) + 1 : 2 * k - static_cast<int>(i);
            zero_pattern = zero_pattern && chain[i]->zeros == expected;
            zeros_text += (i ? "," : "") + std::to_string(chain[i]->zeros);
        }
        zeros_text += ")";
    }
    for (const BranchResult& b : res.branches) run.max_aux_deviation = std::max(run.max_aux_deviation, b.aux_deviation);
    for (const SideReport* side : {&res.below, &res.above}) {
        for (const ShotRecord& r : side->scan.records) {
            ++run.scan_records;
            if (r.zeros != r.sign_changes || !r.theta_increasing) ++run.scan_mismatches;
        }
    }
    run.branches = static_cast<int>(res.branches.size());
    run.seconds = seconds_since(t0);
    run.pass = rep.pass && zero_pattern && run.branches >= 4 * k && th.monotone_above();
    std::string rechecks;
    for (const auto& [R, ok] : th.rechecks) rechecks += fmt(" %.4g:%s", R, ok ? "yes" : "no");
    run.detail = fmt("k=%d: empirical R_%d* = %.6f (rechecks%s); at R = %.6f: %d branches, chain zeros%s, "
                     "all branch assertions %s; %.1f s",
                     k, k, th.R_star, rechecks.c_str(), 2.0 * th.R_star, run.branches, zeros_text.c_str(),
                     rep.pass ? "hold" : "FAIL", run.seconds);
    return run;
}

// ---------------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------------

void criterion_determinism(int jobs) {
    VerifyConfig cfg;
    cfg.problem = ProblemConfig{2, 23.0};
    cfg.samples = 40;
    cfg.invariant_radii = {1.0, 5.0};
    auto verify_doc = [&](int j) {
        nlohmann::json checks = nlohmann::json::array();
        VerifyConfig c = cfg;
        c.solve.scan.jobs = j;
        for (const CheckReport& r : run_checks({"all"}, c, j)) checks.push_back(r.to_json());
        return dump_json(checks);
    };
    auto solve_doc = [&](int j) {
        SolveOptions o;
        o.scan.jobs = j;
        const SolveResult res = find_solutions(Problem(cfg.f, cfg.problem), IntegratorSettings{}, o);
        return dump_json(solve_result_to_json(res));
    };
    const std::string v1 = verify_doc(1), v2 = verify_doc(jobs), v3 = verify_doc(jobs);
    const std::string s1 = solve_doc(1), s2 = solve_doc(jobs);
    const bool pass = v1 == v2 && v2 == v3 && s1 == s2;
    report(8, pass,
           fmt("determinism: verify JSON (%zu bytes) identical across 3 runs with 1 and %d workers: %s; "
               "solve JSON (%zu bytes) identical: %s",
               v1.size(), jobs, (v1 == v2 && v2 == v3) ? "yes" : "no", s1.size(), s1 == s2 ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
    int jobs = default_jobs();
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--jobs") == 0) jobs = std::atoi(argv[i + 1]);
    }
    const auto t0 = Clock::now();

    criterion_eigen();

    const SuiteTotals suite = run_suite();
    report(2, suite.slope == 0 && suite.gamma == 0 && suite.seconds < 60.0,
           fmt("velocity bound over 200 seeded shots x N in {1,2,3} x R in {1,5,20}, both systems: "
               "max |u'| = %.17g < 1; max |u'| - gamma on oscillatory auxiliary shots = %.3g <= 1e-9; %.1f s",
               suite.max_slope, suite.worst_gamma_margin, suite.seconds));

    criterion_slow();

    report(4, suite.drift == 0,
           fmt("first integral, N = 1: max relative drift %.3g < 1e-8 over 600 shots (%d violations)",
               suite.max_drift, suite.drift));

    const PatternRun k1 = pattern_at_twice_threshold(1, 20.0, jobs);
    const PatternRun k2 = pattern_at_twice_threshold(2, 40.0, jobs);
    report(5, k1.pass && k2.pass && k1.seconds + k2.seconds < 300.0,
           "branch pattern at twice the empirical threshold; " + k1.detail + "; " + k2.detail);

    const double worst_dev = std::max(k1.max_aux_deviation, k2.max_aux_deviation);
    report(6, worst_dev <= 10.0 * IntegratorSettings{}.rtol && suite.agreement == 0,
           fmt("auxiliary/original agreement: max sup deviation over %d branches %.3g <= %.1e; "
               "oscillatory invariant-suite shots violating it: %d",
               k1.branches + k2.branches, worst_dev, 10.0 * IntegratorSettings{}.rtol, suite.agreement));

    const int records = k1.scan_records + k2.scan_records;
    const int mismatches = k1.scan_mismatches + k2.scan_mismatches;
    report(7, mismatches == 0 && suite.zero_count == 0 && suite.theta == 0,
           fmt("counting consistency: %d scan records and 1800 sampled shots; angle vs sign-change "
               "mismatches or non-increasing angles: %d scan, %d sampled",
               records, mismatches, suite.zero_count + suite.theta));

    criterion_determinism(std::max(2, jobs));

    std::printf("%s: %d of 8 criteria failed; total %.1f s\n", failures ? "FAIL" : "PASS", failures,
                seconds_since(t0));
    return failures ? 1 : 0;
}
