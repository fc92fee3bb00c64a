#include "lmshoot/config.hpp"

#include "lmshoot/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace lmshoot {

namespace {

using nlohmann::json;

/// Object reader that rejects keys nobody asked for.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ValidationError("'" + path_ + "' must be a JSON object");
    }

    template <typename T>
    void read(const char* key, T& target) {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end()) return;
        try {
            target = it->template get<T>();
        } catch (const json::exception&) {
            throw ValidationError("'" + where(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void read(const char* key, std::optional<T>& target) {
        T value{};
        seen_.insert(key);
        if (!node_.contains(key)) return;
        read(key, value);
        target = value;
    }

    const json* child(const char* key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) throw ValidationError("unknown configuration key '" + where(key) + "'");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

Nonlinearity NonlinearitySpec::build() const {
    if (kind == "cubic_pinned") return Nonlinearity::cubic_pinned();
    if (kind == "power") return Nonlinearity::power(q);
    throw ValidationError("unknown nonlinearity kind '" + kind + "' (expected cubic_pinned or power)");
}

json NonlinearitySpec::to_json() const {
    if (kind == "power") return {{"kind", kind}, {"q", q}};
    return {{"kind", kind}};
}

NonlinearitySpec parse_nonlinearity_flag(const std::string& text) {
    NonlinearitySpec spec;
    const std::size_t comma = text.find(',');
    spec.kind = text.substr(0, comma);
    if (comma == std::string::npos) return spec;
    const std::string param = text.substr(comma + 1);
    require(param.rfind("q=", 0) == 0, "expected NAME or NAME,q=VALUE, got '" + text + "'");
    try {
        std::size_t used = 0;
        spec.q = std::stod(param.substr(2), &used);
        require(used == param.size() - 2, "malformed q in '" + text + "'");
    } catch (const std::logic_error&) {
        throw ValidationError("malformed q in '" + text + "'");
    }
    return spec;
}

void RunConfig::validate() const {
    problem.validate();
    (void)nonlinearity.build();
    integrator.validate(problem.radius);
    require(integrator.max_steps > 0, "integrator.max_steps must be positive");
    const ScanOptions& s = solve.scan;
    require(s.initial_points >= 2, "scan.initial_points must be at least 2");
    require(finite_positive(s.resolution_fraction) && s.resolution_fraction < 1.0,
            "scan.resolution_fraction must lie in (0, 1)");
    require(finite_positive(s.guard) && s.guard < 0.5, "scan.guard must lie in (0, 0.5)");
    require(finite_positive(solve.root_rel_tol), "solve.root_rel_tol must be positive");
    require(solve.max_root_iterations > 0, "solve.max_root_iterations must be positive");
    require(finite_positive(solve.residual_tol), "solve.residual_tol must be positive");
    require(k >= 1, "k must be at least 1");
    require(!out.empty(), "out must be a directory name");
    if (scan_d_lo || scan_d_hi) {
        require(scan_d_lo && scan_d_hi, "scan range needs both d_lo and d_hi");
        require(std::isfinite(*scan_d_lo) && *scan_d_lo >= 0.0 && *scan_d_hi > *scan_d_lo &&
                    std::isfinite(*scan_d_hi),
                "scan range must satisfy 0 <= d_lo < d_hi");
    }
    require(eigen_count >= 1 && eigen_count <= 100, "eigen.count must lie in [1, 100]");
    require(!checks.empty(), "verify.checks must not be empty");
    for (const std::string& c : checks) {
        bool known = c == "all";
        for (const std::string& n : check_names()) known = known || c == n;
        require(known, "unknown check '" + c + "'");
    }
    require(samples >= 1, "verify.samples must be at least 1");
    require(!invariant_dimensions.empty() && !invariant_radii.empty(),
            "verify invariant grid must not be empty");
    for (int n : invariant_dimensions) require(n >= 1, "verify.dimensions must be >= 1");
    for (double r : invariant_radii) require(finite_positive(r), "verify.radii must be positive");
    require(finite_positive(threshold_R_max), "threshold.R_max must be positive");
    require(finite_positive(threshold_rel_width) && threshold_rel_width < 1.0,
            "threshold.rel_width must lie in (0, 1)");
}

json RunConfig::to_json() const {
    json scan_range = nullptr;
    if (scan_d_lo && scan_d_hi) scan_range = {{"d_lo", *scan_d_lo}, {"d_hi", *scan_d_hi}};
    return {
        {"problem", {{"N", problem.dimension}, {"R", problem.radius}}},
        {"nonlinearity", nonlinearity.to_json()},
        {"integrator",
         {{"rtol", integrator.rtol},
          {"atol", integrator.atol},
          {"r_start", integrator.resolved_r_start(problem.radius)},
          {"dense_stride", integrator.resolved_stride(problem.radius)},
          {"max_steps", integrator.max_steps}}},
        {"scan",
         {{"initial_points", solve.scan.initial_points},
          {"resolution_fraction", solve.scan.resolution_fraction},
          {"guard", solve.scan.guard},
          {"range", scan_range}}},
        {"solve",
         {{"root_rel_tol", solve.root_rel_tol},
          {"max_root_iterations", solve.max_root_iterations},
          {"residual_tol", solve.residual_tol}}},
        {"k", k},
        {"seed", seed},
        {"eigen", {{"count", eigen_count}}},
        {"verify",
         {{"checks", checks},
          {"samples", samples},
          {"dimensions", invariant_dimensions},
          {"radii", invariant_radii}}},
        {"threshold", {{"R_max", threshold_R_max}, {"rel_width", threshold_rel_width}}},
    };
}

VerifyConfig RunConfig::verify_config() const {
    VerifyConfig v;
    v.f = nonlinearity.build();
    v.problem = problem;
    v.integrator = integrator;
    v.solve = solve;
    v.k = k;
    v.samples = samples;
    v.seed = seed;
    v.invariant_dimensions = invariant_dimensions;
    v.invariant_radii = invariant_radii;
    return v;
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig cfg;
    Section root(doc, "");
    if (const json* node = root.child("problem")) {
        Section s(*node, "problem");
        s.read("N", cfg.problem.dimension);
        s.read("R", cfg.problem.radius);
        s.finish();
    }
    if (const json* node = root.child("nonlinearity")) {
        Section s(*node, "nonlinearity");
        s.read("kind", cfg.nonlinearity.kind);
        s.read("q", cfg.nonlinearity.q);
        s.finish();
    }
    if (const json* node = root.child("integrator")) {
        Section s(*node, "integrator");
        s.read("rtol", cfg.integrator.rtol);
        s.read("atol", cfg.integrator.atol);
        s.read("r_start", cfg.integrator.r_start);
        s.read("dense_stride", cfg.integrator.dense_stride);
        s.read("max_steps", cfg.integrator.max_steps);
        s.finish();
    }
    if (const json* node = root.child("scan")) {
        Section s(*node, "scan");
        s.read("initial_points", cfg.solve.scan.initial_points);
        s.read("resolution_fraction", cfg.solve.scan.resolution_fraction);
        s.read("guard", cfg.solve.scan.guard);
        s.read("d_lo", cfg.scan_d_lo);
        s.read("d_hi", cfg.scan_d_hi);
        s.finish();
    }
    if (const json* node = root.child("solve")) {
        Section s(*node, "solve");
        s.read("root_rel_tol", cfg.solve.root_rel_tol);
        s.read("max_root_iterations", cfg.solve.max_root_iterations);
        s.read("residual_tol", cfg.solve.residual_tol);
        s.finish();
    }
    if (const json* node = root.child("eigen")) {
        Section s(*node, "eigen");
        s.read("count", cfg.eigen_count);
        s.finish();
    }
    if (const json* node = root.child("verify")) {
        Section s(*node, "verify");
        s.read("checks", cfg.checks);
        s.read("samples", cfg.samples);
        s.read("dimensions", cfg.invariant_dimensions);
        s.read("radii", cfg.invariant_radii);
        s.finish();
    }
    if (const json* node = root.child("threshold")) {
        Section s(*node, "threshold");
        s.read("R_max", cfg.threshold_R_max);
        s.read("rel_width", cfg.threshold_rel_width);
        s.finish();
    }
    root.read("k", cfg.k);
    root.read("out", cfg.out);
    root.read("seed", cfg.seed);
    root.read("jobs", cfg.jobs);
    root.finish();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(doc);
}

}  // namespace lmshoot
