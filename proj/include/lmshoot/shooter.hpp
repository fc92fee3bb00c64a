#pragma once

#include "lmshoot/extended.hpp"
#include "lmshoot/integrator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lmshoot {

// =============================================================================
// Shot summaries and scans
// =============================================================================

/// Summary of one shot.
struct ShotRecord {
    double d = 0.0;
    double half_turns = 0.0;
    double v_R = 0.0;
    double u_R = 0.0;
    int zeros = 0;          ///< from the angle
    int sign_changes = 0;   ///< of u - 1 on the dense nodes
    bool theta_increasing = true;
    double max_abs_slope = 0.0;
    ShootingSystem system = ShootingSystem::auxiliary;
};

ShotRecord summarize(const Trajectory& traj);

/// Integrate and summarize.
ShotRecord shoot(const Problem& p, double d, const IntegratorSettings& settings,
                 ShootingSystem system = ShootingSystem::auxiliary);

enum class ScanSpacing {
    uniform,
    /// Half the points uniform, half log-spaced in |d - anchor|; resolves the
    /// exponentially thin flank near d = 0 and the slow neighbourhood of d = 1.
    hybrid,
};

struct ScanOptions {
    int initial_points = 200;
    double resolution_fraction = 1e-4;  ///< stop refining below this fraction of the width
    double guard = 1e-6;                ///< half-width of the excluded band around d = 1
    ScanSpacing spacing = ScanSpacing::uniform;
    double log_anchor = 0.0;            ///< for hybrid spacing
    ShootingSystem system = ShootingSystem::auxiliary;
    int jobs = 1;
};

/// Adjacent scan records between which floor(half_turns) changes, i.e. v(R)
/// changes sign at least once.
struct Bracket {
    ShotRecord lo;
    ShotRecord hi;
};

struct ScanResult {
    std::vector<ShotRecord> records;  ///< strictly increasing in d
    std::vector<Bracket> brackets;
    std::vector<ShotRecord> local_maxima;
};

/// Shoots an initial grid on [d_lo, d_hi] and bisects adjacent pairs whose
/// half-turn counts differ by >= 1 or whose v(R) signs differ, until the pair
/// width falls below the resolution. Throws ValidationError if the interval is
/// empty, negative or intersects the guard band around 1.
ScanResult scan(const Problem& p, const IntegratorSettings& settings, double d_lo, double d_hi,
                const ScanOptions& options);

// =============================================================================
// Peaks, branches and thresholds
// =============================================================================

enum class Side { below_one, above_one };

std::string_view to_string(Side side);

struct PeakResult {
    Side side = Side::below_one;
    double d_star = 0.0;
    double half_turns_max = 0.0;
    /// max < 1: no shot on this side completes a half-turn.
    bool flat() const noexcept { return half_turns_max < 1.0; }
};

struct SolveOptions {
    ScanOptions scan{};
    double root_rel_tol = 4e-16;   ///< bracket width for the root solve, relative to d
    int max_root_iterations = 200;
    double residual_tol = 1e-9;    ///< |v(R)| acceptance, absolute and relative to max |v|
    /// Brackets that shrink to this many ulps without meeting the residual are
    /// re-solved in extended precision (built-in reaction terms only).
    double extended_trigger_ulps = 64.0;
    int max_extended_iterations = 400;
};

/// Scan interval for one side: (d_floor, 1 - guard) or (1 + guard, 1 + R).
/// d_floor starts at `guard` and is divided by 1e4 until the shot from it makes
/// less than one half-turn (continuity with the zero solution).
std::pair<double, double> side_interval(const Problem& p, const IntegratorSettings& settings,
                                        Side side, const ScanOptions& options);

PeakResult find_peak(const Problem& p, const IntegratorSettings& settings, Side side,
                     const SolveOptions& options = {});

/// A converged Neumann solution u'(R) = 0.
struct BranchResult {
    int sign = 1;              ///< +1: u(0) > 1, -1: u(0) < 1
    int index = 0;             ///< j, 1-based order in d on its side
    double d_star = 0.0;       ///< u(0), rounded to double
    Extended d_exact = 0;      ///< u(0) in full precision; orders branches that share d_star
    bool extended_precision = false;  ///< located by the extended-precision polish
    int zeros = 0;
    double residual = 0.0;     ///< |v(R)| of the original-system shot
    double max_abs_v = 0.0;
    double min_u = 0.0;
    double aux_deviation = 0.0;  ///< sup |(u,v)_aux - (u,v)_orig| over the dense nodes
    int iterations = 0;
    Trajectory trajectory;     ///< original system

    std::string label() const;  ///< e.g. "+3" or "-1"
};

struct RootFailure {
    double d_lo = 0.0;
    double d_hi = 0.0;
    int level = 0;
    std::string reason;
};

struct SideReport {
    Side side = Side::below_one;
    double d_lo = 0.0;
    double d_hi = 0.0;
    PeakResult peak;
    bool guard_slow = true;   ///< half_turns < 1 at the guard edge next to d = 1
    ScanResult scan;
};

struct SolveResult {
    std::vector<BranchResult> branches;  ///< sorted by d
    std::vector<RootFailure> failures;
    std::vector<BranchResult> rejected;  ///< converged but not positive
    SideReport below;
    SideReport above;

    std::vector<const BranchResult*> side_branches(int sign) const;
};

/// Locates every branch detectable at scan resolution on both sides of d = 1.
SolveResult find_solutions(const Problem& p, const IntegratorSettings& settings,
                           const SolveOptions& options = {});

/// Representatives d_1 < ... < d_k < peak < d_{k+1} < ... < d_{2k} on one side:
/// first crossings of levels 1..k left of the peak, last crossings of levels k..1
/// right of it. Empty when the pattern is incomplete.
std::vector<const BranchResult*> theorem_chain(const SolveResult& result, int sign, int k);

/// True when both sides carry the full 2k-chain with zero counts 1..k, k..1.
bool matches_theorem_pattern(const SolveResult& result, int k);

struct ThresholdOptions {
    SolveOptions solve{};
    double rel_width = 1e-3;
    double R_min = 1e-2;
    std::vector<double> recheck_factors{1.1, 1.5, 2.0};
};

struct ThresholdResult {
    int k = 1;
    double R_star = 0.0;   ///< smallest radius where the pattern was observed
    double R_below = 0.0;  ///< largest radius where it was not
    int evaluations = 0;
    std::vector<std::pair<double, bool>> rechecks;
    bool monotone_above() const;
};

/// Bisection in R on matches_theorem_pattern(find_solutions(.), k). Throws
/// NumericalError if the pattern is absent at R_max.
ThresholdResult estimate_threshold_radius(const Nonlinearity& f, int dimension, int k,
                                          double R_max, const IntegratorSettings& settings,
                                          const ThresholdOptions& options = {});

}  // namespace lmshoot
