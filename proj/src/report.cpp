#include "lmshoot/report.hpp"

#include "lmshoot/errors.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lmshoot {

using nlohmann::json;

json branch_to_json(const BranchResult& b) {
    return {{"label", b.label()},
            {"sign", b.sign},
            {"index", b.index},
            {"d", b.d_star},
            {"d_exact", to_decimal(b.d_exact)},
            {"extended_precision", b.extended_precision},
            {"zeros", b.zeros},
            {"residual", b.residual},
            {"max_abs_v", b.max_abs_v},
            {"min_u", b.min_u},
            {"aux_deviation", b.aux_deviation},
            {"iterations", b.iterations},
            {"trajectory_file", branch_file_name(b)}};
}

json solve_result_to_json(const SolveResult& res) {
    json branches = json::array();
    for (const BranchResult& b : res.branches) branches.push_back(branch_to_json(b));
    json rejected = json::array();
    for (const BranchResult& b : res.rejected) {
        json j = branch_to_json(b);
        j.erase("trajectory_file");
        rejected.push_back(j);
    }
    json failures = json::array();
    for (const RootFailure& f : res.failures) {
        failures.push_back({{"d_lo", f.d_lo}, {"d_hi", f.d_hi}, {"level", f.level}, {"reason", f.reason}});
    }
    auto side = [](const SideReport& s) {
        return json{{"side", std::string(to_string(s.side))},
                    {"d_lo", s.d_lo},
                    {"d_hi", s.d_hi},
                    {"peak_d", s.peak.d_star},
                    {"peak_half_turns", s.peak.half_turns_max},
                    {"guard_slow", s.guard_slow},
                    {"scan_records", s.scan.records.size()},
                    {"scan_brackets", s.scan.brackets.size()}};
    };
    return {{"branches", branches},
            {"rejected", rejected},
            {"failures", failures},
            {"sides", {side(res.below), side(res.above)}}};
}

json eigen_to_json(const std::vector<EigenResult>& eigen) {
    json out = json::array();
    for (const EigenResult& e : eigen) {
        out.push_back({{"k", e.k}, {"lambda", e.lambda}, {"residual", e.angle_residual}});
    }
    return out;
}

json threshold_to_json(const ThresholdResult& t) {
    json rechecks = json::array();
    for (const auto& [R, ok] : t.rechecks) rechecks.push_back({{"R", R}, {"pattern", ok}});
    return {{"k", t.k},
            {"R_star", t.R_star},
            {"R_below", t.R_below},
            {"evaluations", t.evaluations},
            {"rechecks", rechecks},
            {"monotone_above", t.monotone_above()},
            {"empirical", true}};
}

void write_scan_csv(std::ostream& out, const std::vector<ShotRecord>& records) {
    out << "d,half_turns,v_R,zeros\n";
    char buf[128];
    for (const ShotRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", r.d, r.half_turns, r.v_R, r.zeros);
        out << buf;
    }
}

std::string branch_table(const SolveResult& res) {
    std::ostringstream out;
    if (res.branches.empty()) {
        out << "no branches found: no shot completes a half-turn around u = 1 "
               "(the radius is below the oscillation threshold)\n";
    } else {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-6s %-24s %5s %12s %12s\n", "label", "d", "zeros", "residual",
                      "min_u");
        out << buf;
        for (const BranchResult& b : res.branches) {
            std::snprintf(buf, sizeof buf, "%-6s %-24.17g %5d %12.3e %12.3e\n", b.label().c_str(),
                          b.d_star, b.zeros, b.residual, b.min_u);
            out << buf;
        }
    }
    if (!res.failures.empty()) out << res.failures.size() << " bracket(s) did not converge\n";
    if (!res.rejected.empty()) out << res.rejected.size() << " non-positive candidate(s) rejected\n";
    return out.str();
}

std::string branch_file_name(const BranchResult& b) { return "branch_" + b.label() + ".csv"; }

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out.flush()) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace lmshoot
