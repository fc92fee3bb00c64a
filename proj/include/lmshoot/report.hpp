#pragma once

// Serialized forms of solver results: JSON documents, CSV tables and the
// human-readable branch table printed by the CLI.

#include "lmshoot/shooter.hpp"
#include "lmshoot/spectrum.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lmshoot {

nlohmann::json branch_to_json(const BranchResult& b);

/// Branches, rejected candidates, root failures and the per-side peak data.
nlohmann::json solve_result_to_json(const SolveResult& res);

/// [{k, lambda, residual}, ...]
nlohmann::json eigen_to_json(const std::vector<EigenResult>& eigen);

nlohmann::json threshold_to_json(const ThresholdResult& t);

/// Header d,half_turns,v_R,zeros; 17 significant digits.
void write_scan_csv(std::ostream& out, const std::vector<ShotRecord>& records);

/// Fixed-width table: label, d, zeros, residual, min u.
std::string branch_table(const SolveResult& res);

/// "branch_+1.csv", "branch_-2.csv", ...
std::string branch_file_name(const BranchResult& b);

/// Indented JSON with a trailing newline; identical input gives identical bytes.
std::string dump_json(const nlohmann::json& doc);

/// Writes `text` to `path` through a temporary sibling and a rename, so a
/// failed run never leaves a truncated file behind.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lmshoot
