// Command-line front end: solve, scan, eigen, verify, threshold.

#include "lmshoot/config.hpp"
#include "lmshoot/errors.hpp"
#include "lmshoot/report.hpp"
#include "lmshoot/spectrum.hpp"
#include "lmshoot/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace lmshoot;

namespace {

/// Flag values; unset optionals leave the configuration file value in place.
struct Overrides {
    std::string config;
    std::optional<int> N;
    std::optional<double> R;
    std::optional<std::string> f;
    std::optional<std::string> out;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<double> rtol;
    std::optional<double> atol;
    std::optional<int> k;
    std::optional<double> d_lo;
    std::optional<double> d_hi;
    std::optional<int> count;
    std::vector<std::string> checks;
    std::optional<int> samples;
    std::optional<double> R_max;
};

void add_shared_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--N", o.N, "space dimension N >= 1");
    cmd->add_option("--R", o.R, "ball radius R > 0");
    cmd->add_option("--f", o.f, "reaction term: cubic_pinned or power,q=VALUE");
    cmd->add_option("--out", o.out, "output directory ('-' prints to stdout where supported)");
    cmd->add_option("--jobs", o.jobs, "worker threads (default: available parallelism)");
    cmd->add_option("--seed", o.seed, "random seed for sampled checks");
    cmd->add_option("--rtol", o.rtol, "integrator relative tolerance");
    cmd->add_option("--atol", o.atol, "integrator absolute tolerance");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.N) cfg.problem.dimension = *o.N;
    if (o.R) cfg.problem.radius = *o.R;
    if (o.f) cfg.nonlinearity = parse_nonlinearity_flag(*o.f);
    if (o.out) cfg.out = *o.out;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.seed) cfg.seed = *o.seed;
    if (o.rtol) cfg.integrator.rtol = *o.rtol;
    if (o.atol) cfg.integrator.atol = *o.atol;
    if (o.k) cfg.k = *o.k;
    if (o.d_lo) cfg.scan_d_lo = *o.d_lo;
    if (o.d_hi) cfg.scan_d_hi = *o.d_hi;
    if (o.count) cfg.eigen_count = *o.count;
    if (!o.checks.empty()) cfg.checks = o.checks;
    if (o.samples) cfg.samples = *o.samples;
    if (o.R_max) cfg.threshold_R_max = *o.R_max;
    cfg.solve.scan.jobs = cfg.jobs;
    cfg.validate();
    return cfg;
}

bool to_stdout(const RunConfig& cfg) { return cfg.out == "-"; }

fs::path output_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out);
    fs::create_directories(dir);
    return dir;
}

/// JSON to stdout or <out>/name.
void emit_json(const RunConfig& cfg, const std::string& name, const nlohmann::json& doc) {
    if (to_stdout(cfg)) {
        std::cout << dump_json(doc);
        return;
    }
    const fs::path path = output_dir(cfg) / name;
    write_file(path, dump_json(doc));
    std::cout << "wrote " << path.string() << "\n";
}

int cmd_solve(const RunConfig& cfg) {
    if (to_stdout(cfg)) throw ValidationError("solve writes several files; --out must be a directory");
    const Problem p(cfg.nonlinearity.build(), cfg.problem);
    const SolveResult res = find_solutions(p, cfg.integrator, cfg.solve);

    std::vector<ShotRecord> records = res.below.scan.records;
    records.insert(records.end(), res.above.scan.records.begin(), res.above.scan.records.end());
    std::ostringstream scan_csv;
    write_scan_csv(scan_csv, records);
    nlohmann::json branches = nlohmann::json::array();
    for (const BranchResult& b : res.branches) branches.push_back(branch_to_json(b));

    const fs::path dir = output_dir(cfg);
    for (const BranchResult& b : res.branches) {
        std::ostringstream csv;
        write_trajectory_csv(csv, b.trajectory);
        write_file(dir / branch_file_name(b), csv.str());
    }
    write_file(dir / "scan.csv", scan_csv.str());
    write_file(dir / "branches.json", dump_json(branches));

    std::cout << branch_table(res);
    for (const RootFailure& f : res.failures) {
        std::cout << "  unresolved bracket [" << f.d_lo << ", " << f.d_hi << "] level " << f.level << ": "
                  << f.reason << "\n";
    }
    std::cout << "wrote " << res.branches.size() << " branch file(s), scan.csv and branches.json to "
              << dir.string() << "\n";
    return 0;
}

int cmd_scan(const RunConfig& cfg) {
    const Problem p(cfg.nonlinearity.build(), cfg.problem);
    std::vector<ShotRecord> records;
    auto run = [&](double lo, double hi, const ScanOptions& o) {
        const ScanResult s = scan(p, cfg.integrator, lo, hi, o);
        records.insert(records.end(), s.records.begin(), s.records.end());
    };
    ScanOptions opts = cfg.solve.scan;
    if (cfg.scan_d_lo) {
        // A range through d = 1 is split around the guard band.
        const double lo = *cfg.scan_d_lo, hi = *cfg.scan_d_hi, g = opts.guard;
        if (lo < 1.0 - g) run(lo, std::min(hi, 1.0 - g), opts);
        if (hi > 1.0 + g) run(std::max(lo, 1.0 + g), hi, opts);
        if (records.empty()) throw ValidationError("scan range lies inside the guard band around d = 1");
    } else {
        for (Side side : {Side::below_one, Side::above_one}) {
            ScanOptions o = opts;
            o.spacing = ScanSpacing::hybrid;
            o.log_anchor = side == Side::below_one ? 0.0 : 1.0;
            const auto [lo, hi] = side_interval(p, cfg.integrator, side, o);
            run(lo, hi, o);
        }
    }
    std::ostringstream csv;
    write_scan_csv(csv, records);
    if (to_stdout(cfg)) {
        std::cout << csv.str();
        return 0;
    }
    const fs::path path = output_dir(cfg) / "scan.csv";
    write_file(path, csv.str());
    std::cout << "wrote " << records.size() << " shots to " << path.string() << "\n";
    return 0;
}

int cmd_eigen(const RunConfig& cfg) {
    emit_json(cfg, "eigen.json", eigen_to_json(eigenvalues(cfg.eigen_count, cfg.problem, cfg.integrator)));
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    const std::vector<CheckReport> reports = run_checks(cfg.checks, cfg.verify_config(), cfg.jobs);
    nlohmann::json checks = nlohmann::json::array();
    bool all = true;
    for (const CheckReport& r : reports) {
        checks.push_back(r.to_json());
        all = all && r.pass;
    }
    emit_json(cfg, "verify.json", {{"config", cfg.to_json()}, {"checks", checks}, {"pass", all}});
    for (const CheckReport& r : reports) {
        (to_stdout(cfg) ? std::cerr : std::cout) << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
    }
    return all ? 0 : 2;
}

int cmd_threshold(const RunConfig& cfg) {
    ThresholdOptions opts;
    opts.solve = cfg.solve;
    opts.rel_width = cfg.threshold_rel_width;
    const ThresholdResult t = estimate_threshold_radius(cfg.nonlinearity.build(), cfg.problem.dimension,
                                                        cfg.k, cfg.threshold_R_max, cfg.integrator, opts);
    nlohmann::json doc = threshold_to_json(t);
    doc["f"] = cfg.nonlinearity.to_json();
    doc["N"] = cfg.problem.dimension;
    doc["R_max"] = cfg.threshold_R_max;
    emit_json(cfg, "threshold.json", doc);
    char line[160];
    std::snprintf(line, sizeof line, "k = %d: pattern present at R = %.6f, absent at R = %.6f (%d solves)\n", t.k,
                  t.R_star, t.R_below, t.evaluations);
    (to_stdout(cfg) ? std::cerr : std::cout) << line;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial Neumann problems with the Minkowski curvature operator, solved by shooting"};
    app.require_subcommand(1);
    Overrides o;

    CLI::App* solve = app.add_subcommand("solve", "find every branch and write branches.json, scan.csv, branch_*.csv");
    CLI::App* scan_cmd = app.add_subcommand("scan", "half-turn profile over d as scan.csv");
    CLI::App* eigen = app.add_subcommand("eigen", "radial Neumann eigenvalues as eigen.json");
    CLI::App* verify = app.add_subcommand("verify", "run the verification checks into verify.json");
    CLI::App* threshold = app.add_subcommand("threshold", "empirical threshold radius for k oscillation levels");
    for (CLI::App* cmd : {solve, scan_cmd, eigen, verify, threshold}) add_shared_flags(cmd, o);
    scan_cmd->add_option("--d-lo", o.d_lo, "lower end of the scanned datum range");
    scan_cmd->add_option("--d-hi", o.d_hi, "upper end of the scanned datum range");
    eigen->add_option("--count", o.count, "number of eigenvalues (k = 1..count)");
    verify->add_option("--check", o.checks, "check name or 'all' (repeatable)");
    verify->add_option("--k", o.k, "branch level for the theorem check");
    verify->add_option("--samples", o.samples, "shots per (N, R) cell of the invariant suite");
    threshold->add_option("--k", o.k, "number of oscillation levels");
    threshold->add_option("--R-max", o.R_max, "upper end of the radius search");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (solve->parsed()) return cmd_solve(cfg);
        if (scan_cmd->parsed()) return cmd_scan(cfg);
        if (eigen->parsed()) return cmd_eigen(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
        return cmd_threshold(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
