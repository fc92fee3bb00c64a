#pragma once

// Run configuration shared by every CLI command: a JSON document with flag
// overrides, validated in full before anything is computed or written.

#include "lmshoot/shooter.hpp"
#include "lmshoot/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lmshoot {

/// Built-in reaction term selector: {"kind": "cubic_pinned"} or {"kind": "power", "q": 4.0}.
struct NonlinearitySpec {
    std::string kind = "cubic_pinned";
    double q = 4.0;

    /// Throws ValidationError for an unknown kind or q <= 2.
    Nonlinearity build() const;
    nlohmann::json to_json() const;
};

/// Parses the flag form "cubic_pinned" or "power,q=4".
NonlinearitySpec parse_nonlinearity_flag(const std::string& text);

struct RunConfig {
    ProblemConfig problem{2, 24.0};
    NonlinearitySpec nonlinearity{};
    IntegratorSettings integrator{};
    SolveOptions solve{};
    int k = 1;                          ///< branch level for verify
    std::string out = "out";
    std::uint64_t seed = 20240601;
    int jobs = 0;                       ///< <= 0: available parallelism
    std::optional<double> scan_d_lo;    ///< scan command range; default: both side intervals
    std::optional<double> scan_d_hi;
    int eigen_count = 5;
    std::vector<std::string> checks{"all"};
    int samples = 200;
    std::vector<int> invariant_dimensions{1, 2, 3};
    std::vector<double> invariant_radii{1.0, 5.0, 20.0};
    double threshold_R_max = 20.0;
    double threshold_rel_width = 1e-3;

    /// Throws ValidationError on the first inconsistent value.
    void validate() const;
    /// The fully resolved configuration (echoed into outputs for reproducibility).
    nlohmann::json to_json() const;
    VerifyConfig verify_config() const;
};

/// Reads a configuration document. Unknown keys at any level and values of the
/// wrong type throw ValidationError.
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Reads and parses a JSON file; I/O and syntax errors throw ValidationError.
RunConfig load_run_config(const std::string& path);

}  // namespace lmshoot
