#include "lmshoot/shooter.hpp"

#include "lmshoot/errors.hpp"
#include "lmshoot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <boost/math/constants/constants.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <limits>

namespace lmshoot {

namespace {

constexpr double kSmallestFloor = 1e-290;
constexpr double kFloorDivisor = 1e4;
constexpr double kExtremumMargin = 1e-9;
constexpr double kGoldenRelTol = 1e-7;
// |v(R)| / u(R) accepted at the turning point of an extended-precision root.
constexpr double kTurningRelTol = 1e-8;

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

int level_of(const ShotRecord& r) { return static_cast<int>(std::floor(r.half_turns)); }

std::vector<ShotRecord> shoot_all(const Problem& p, const IntegratorSettings& settings,
                                  const std::vector<double>& ds, ShootingSystem system, int jobs) {
    std::vector<ShotRecord> out(ds.size());
    parallel_for(ds.size(), jobs, [&](std::size_t i) { out[i] = shoot(p, ds[i], settings, system); });
    return out;
}

// Geometry of a scan: where to put points, how to split pairs, when to stop.
struct ScanGeometry {
    double d_lo, d_hi;
    ScanSpacing spacing;
    double anchor;
    double resolution_fraction;

    bool logarithmic(double a, double b) const {
        return spacing == ScanSpacing::hybrid && a - anchor > 0.0 && (b - anchor) > 2.0 * (a - anchor);
    }
    double midpoint(double a, double b) const {
        if (logarithmic(a, b)) return anchor + std::sqrt((a - anchor) * (b - anchor));
        return 0.5 * (a + b);
    }
    double resolution(double a) const {
        const double width = d_hi - d_lo;
        if (spacing == ScanSpacing::hybrid) {
            return resolution_fraction * std::min(width, std::abs(a - anchor));
        }
        return resolution_fraction * width;
    }

    std::vector<double> grid(int points) const {
        std::vector<double> ds;
        const int n = std::max(points, 2);
        if (spacing == ScanSpacing::uniform || d_lo - anchor <= 0.0) {
            for (int i = 0; i < n; ++i) ds.push_back(d_lo + (d_hi - d_lo) * i / (n - 1));
        } else {
            const int n_log = n / 2;
            const int n_uni = n - n_log;
            const double la = std::log(d_lo - anchor);
            const double lb = std::log(d_hi - anchor);
            for (int i = 0; i < n_log; ++i) {
                ds.push_back(anchor + std::exp(la + (lb - la) * i / std::max(1, n_log - 1)));
            }
            for (int i = 0; i < n_uni; ++i) {
                ds.push_back(d_lo + (d_hi - d_lo) * i / std::max(1, n_uni - 1));
            }
        }
        ds.front() = d_lo;
        ds.back() = d_hi;
        for (double& d : ds) d = std::clamp(d, d_lo, d_hi);
        std::sort(ds.begin(), ds.end());
        ds.erase(std::unique(ds.begin(), ds.end(),
                             [](double a, double b) { return b - a <= 1e-14 * std::abs(b); }),
                 ds.end());
        return ds;
    }
};

void insert_sorted(std::vector<ShotRecord>& records, std::vector<ShotRecord> extra) {
    records.insert(records.end(), extra.begin(), extra.end());
    std::sort(records.begin(), records.end(),
              [](const ShotRecord& a, const ShotRecord& b) { return a.d < b.d; });
    records.erase(std::unique(records.begin(), records.end(),
                              [](const ShotRecord& a, const ShotRecord& b) { return a.d == b.d; }),
                  records.end());
}

std::vector<Bracket> detect_brackets(const std::vector<ShotRecord>& records) {
    std::vector<Bracket> out;
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        if (level_of(records[i]) != level_of(records[i + 1])) {
            out.push_back({records[i], records[i + 1]});
        }
    }
    return out;
}

std::vector<std::size_t> extremum_indices(const std::vector<ShotRecord>& records, bool maxima) {
    std::vector<std::size_t> out;
    const double s = maxima ? 1.0 : -1.0;
    for (std::size_t i = 1; i + 1 < records.size(); ++i) {
        const double h = s * records[i].half_turns;
        if (h > s * records[i - 1].half_turns + kExtremumMargin &&
            h > s * records[i + 1].half_turns + kExtremumMargin) {
            out.push_back(i);
        }
    }
    return out;
}

// Golden-section search for an extremum of half_turns on [a, b], in log(d - anchor)
// when the interval spans more than a factor two there.
ShotRecord refine_extremum(const Problem& p, const IntegratorSettings& settings,
                           const ScanGeometry& geo, ShootingSystem system, double a, double b,
                           bool maximize) {
    const bool logarithmic = geo.logarithmic(a, b);
    auto to_d = [&](double t) { return logarithmic ? geo.anchor + std::exp(t) : t; };
    double lo = logarithmic ? std::log(a - geo.anchor) : a;
    double hi = logarithmic ? std::log(b - geo.anchor) : b;
    const double s = maximize ? 1.0 : -1.0;
    auto eval = [&](double t) { return shoot(p, to_d(t), settings, system); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    ShotRecord rc = eval(c);
    ShotRecord rd = eval(d);
    const double scale = std::max(std::abs(lo), std::abs(hi));
    while (hi - lo > kGoldenRelTol * std::max(scale, 1e-300)) {
        if (s * rc.half_turns >= s * rd.half_turns) {
            hi = d;
            d = c;
            rd = rc;
            c = hi - inv_phi * (hi - lo);
            rc = eval(c);
        } else {
            lo = c;
            c = d;
            rc = rd;
            d = lo + inv_phi * (hi - lo);
            rd = eval(d);
        }
    }
    return s * rc.half_turns >= s * rd.half_turns ? rc : rd;
}

struct RootOutcome {
    bool converged = false;
    double d = 0.0;
    int iterations = 0;
    std::string reason;
    double a = 0.0, b = 0.0;  ///< final bracket
};

// Illinois-modified regula falsi with a bisection fallback (geometric when the
// bracket spans more than a factor two). g(a) and g(b) must have opposite signs.
template <typename G>
RootOutcome solve_root(G&& g, double a, double fa, double b, double fb, double rel_tol,
                       int max_iterations) {
    RootOutcome out;
    if (sign_of(fa) * sign_of(fb) > 0) {
        out.reason = "endpoints do not bracket a sign change";
        return out;
    }
    if (fa == 0.0 || fb == 0.0) {
        out.converged = true;
        out.d = fa == 0.0 ? a : b;
        return out;
    }
    int retained = 0;  // +1: a kept twice, -1: b kept twice
    double width_before = b - a;
    for (int it = 1; it <= max_iterations; ++it) {
        out.iterations = it;
        if (b - a <= rel_tol * std::max(std::abs(a), std::abs(b)) ||
            b - a <= std::numeric_limits<double>::denorm_min()) {
            out.converged = true;
            break;
        }
        double c;
        const bool force_bisect = (it % 4 == 0) && (b - a) > 0.5 * width_before;
        if (it % 4 == 0) width_before = b - a;
        if (a > 0.0 && b > 2.0 * a) {
            c = std::sqrt(a * b);
        } else if (force_bisect) {
            c = 0.5 * (a + b);
        } else {
            c = (a * fb - b * fa) / (fb - fa);
            if (!(c > a && c < b)) c = 0.5 * (a + b);
        }
        if (!(c > a && c < b)) {
            out.converged = true;
            break;
        }
        const double fc = g(c);
        if (fc == 0.0) {
            out.converged = true;
            out.d = c;
            return out;
        }
        if (sign_of(fc) == sign_of(fb)) {
            b = c;
            fb = fc;
            if (retained == 1) fa *= 0.5;
            retained = 1;
        } else {
            a = c;
            fa = fc;
            if (retained == -1) fb *= 0.5;
            retained = -1;
        }
    }
    if (!out.converged) out.reason = "root solve hit the iteration limit";
    out.d = std::abs(fa) <= std::abs(fb) ? a : b;
    out.a = a;
    out.b = b;
    return out;
}

// ---- extended-precision polish ----------------------------------------------

const Extended kPiExt = boost::math::constants::pi<Extended>();

struct ExtendedEval {
    Extended d;
    Extended g;  ///< half_turns - level
    Extended v_R;
    Extended u_R;
};

// Half-turns minus `level`, with the fractional part near an integer taken
// from the end state in full precision: the double winding alone cannot tell
// h = 1 - 1e-30 from h = 1.
ExtendedEval evaluate_extended(const Problem& p, const IntegratorSettings& settings,
                               ShootingSystem system, const Extended& d, int level) {
    const ExtendedShot shot = integrate_shoot_extended(p, d, settings, system);
    const double h = half_turns(shot.trajectory);
    const double nearest = std::round(h);
    Extended frac = h - nearest;
    if (std::abs(h - nearest) < 0.25) {
        // Reference direction theta_0 + nearest * pi is (+-1, 0).
        const double axis = (d > 1 ? 1.0 : -1.0) * (std::fmod(nearest, 2.0) == 0.0 ? 1.0 : -1.0);
        const Extended x = axis * (shot.u_R - 1);
        const Extended y = axis * (-shot.v_R);
        frac = atan2(y, x) / kPiExt;
    }
    return {d, Extended(nearest - level) + frac, shot.v_R, shot.u_R};
}

struct ExtendedRoot {
    bool converged = false;
    Extended d = 0;
    int iterations = 0;
    std::string reason;
};

// TOMS 748 on h - level in extended precision, stopped as soon as a shot meets
// |v(R)| < v_target. The scan bracket bounds a geometric widening of the double
// bracket first: rounding in the double shots moves the root by a few ulps.
ExtendedRoot solve_root_extended(const Problem& p, const IntegratorSettings& settings,
                                 ShootingSystem system, double lo, double hi, double outer_lo,
                                 double outer_hi, int level, double v_target, int max_iterations) {
    ExtendedRoot out;
    ExtendedEval a = evaluate_extended(p, settings, system, Extended(lo), level);
    ExtendedEval b = evaluate_extended(p, settings, system, Extended(hi), level);
    for (double grow = 4.0 * (hi - lo); a.g * b.g > 0; grow *= 4.0) {
        if (lo <= outer_lo && hi >= outer_hi) break;
        if (lo > outer_lo) {
            lo = std::max(outer_lo, lo - grow);
            a = evaluate_extended(p, settings, system, Extended(lo), level);
        }
        if (a.g * b.g <= 0) break;
        if (hi < outer_hi) {
            hi = std::min(outer_hi, hi + grow);
            b = evaluate_extended(p, settings, system, Extended(hi), level);
        }
    }
    if (a.g * b.g > 0) {
        out.reason = "extended-precision ends do not bracket the level";
        return out;
    }

    // Near the saddle every shot has |v(R)| below an absolute target, including
    // shots that already crossed u = 0; the turning point u'(R) = 0 of a genuine
    // solution is recognised by |v(R)| small relative to u(R) as well.
    auto meets = [&](const ExtendedEval& e) {
        return e.u_R > 0 && abs(e.v_R) < v_target && abs(e.v_R) < kTurningRelTol * e.u_R;
    };
    auto score = [](const ExtendedEval& e) { return abs(e.v_R) / (abs(e.u_R) < 1 ? abs(e.u_R) : Extended(1)); };
    std::optional<ExtendedEval> best;
    auto consider = [&](const ExtendedEval& e) {
        if (abs(e.g) < 0.25 && e.u_R > 0 && (!best || score(e) < score(*best))) best = e;
    };
    consider(a);
    consider(b);
    auto g = [&](const Extended& d) {
        const ExtendedEval e = evaluate_extended(p, settings, system, d, level);
        consider(e);
        return e.g;
    };
    const Extended floor_width = Extended(hi) * 16 * std::numeric_limits<Extended>::epsilon();
    auto done = [&](const Extended& x, const Extended& y) {
        return (best && meets(*best)) || abs(y - x) <= floor_width;
    };
    auto iterations = static_cast<std::uintmax_t>(max_iterations);
    if (!best || !meets(*best)) {
        boost::math::tools::toms748_solve(g, a.d, b.d, a.g, b.g, done, iterations);
    } else {
        iterations = 0;
    }
    out.iterations = static_cast<int>(iterations);
    out.converged = best && meets(*best);
    if (best) out.d = best->d;
    if (!out.converged) out.reason = "extended-precision root solve did not reach the residual";
    return out;
}

double sup_deviation(const Trajectory& a, const Trajectory& b) {
    double dev = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        dev = std::max({dev, std::abs(a.u[i] - b.u[i]), std::abs(a.v[i] - b.v[i])});
    }
    return dev;
}

}  // namespace

// -----------------------------------------------------------------------------

ShotRecord summarize(const Trajectory& traj) {
    ShotRecord rec;
    rec.d = traj.d;
    rec.system = traj.system;
    rec.u_R = traj.u.back();
    rec.v_R = traj.v.back();
    rec.max_abs_slope = traj.max_abs_slope;
    if (traj.constant()) {
        rec.half_turns = std::numeric_limits<double>::quiet_NaN();
        return rec;
    }
    rec.half_turns = half_turns(traj);
    rec.zeros = count_zeros(traj);
    rec.sign_changes = count_sign_changes(traj);
    if (!traj.stationary()) {
        for (std::size_t i = 1; i < traj.size(); ++i) {
            if (!(traj.winding[i] > traj.winding[i - 1])) {
                rec.theta_increasing = false;
                break;
            }
        }
    }
    return rec;
}

ShotRecord shoot(const Problem& p, double d, const IntegratorSettings& settings,
                 ShootingSystem system) {
    return summarize(integrate_shoot(p, d, settings, system));
}

ScanResult scan(const Problem& p, const IntegratorSettings& settings, double d_lo, double d_hi,
                const ScanOptions& options) {
    if (!std::isfinite(d_lo) || !std::isfinite(d_hi) || d_lo < 0.0 || !(d_lo < d_hi)) {
        throw ValidationError("scan needs 0 <= d_lo < d_hi");
    }
    const double g = options.guard;
    const double slack = 1e-15;
    if (d_lo < 1.0 + g - slack && d_hi > 1.0 - g + slack) {
        throw ValidationError("scan interval must exclude the guard band (1 - " + std::to_string(g) +
                              ", 1 + " + std::to_string(g) + ")");
    }
    if (options.initial_points < 2) throw ValidationError("scan needs at least 2 initial points");

    const ScanGeometry geo{d_lo, d_hi, options.spacing, options.log_anchor,
                           options.resolution_fraction};
    ScanResult res;
    res.records = shoot_all(p, settings, geo.grid(options.initial_points), options.system,
                            options.jobs);
    for (;;) {
        std::vector<double> mids;
        for (std::size_t i = 0; i + 1 < res.records.size(); ++i) {
            const ShotRecord& a = res.records[i];
            const ShotRecord& b = res.records[i + 1];
            const bool jump = std::abs(a.half_turns - b.half_turns) >= 1.0;
            const bool flip = sign_of(a.v_R) != sign_of(b.v_R);
            if ((jump || flip) && b.d - a.d > geo.resolution(a.d)) {
                mids.push_back(geo.midpoint(a.d, b.d));
            }
        }
        if (mids.empty()) break;
        insert_sorted(res.records, shoot_all(p, settings, mids, options.system, options.jobs));
    }
    res.brackets = detect_brackets(res.records);
    for (std::size_t i : extremum_indices(res.records, true)) res.local_maxima.push_back(res.records[i]);
    return res;
}

std::string_view to_string(Side side) { return side == Side::below_one ? "below_one" : "above_one"; }

std::pair<double, double> side_interval(const Problem& p, const IntegratorSettings& settings,
                                        Side side, const ScanOptions& options) {
    const double g = options.guard;
    if (side == Side::above_one) return {1.0 + g, 1.0 + p.config.radius};
    double floor_d = g;
    while (shoot(p, floor_d, settings, options.system).half_turns >= 1.0) {
        floor_d /= kFloorDivisor;
        if (floor_d < kSmallestFloor) {
            throw NumericalError("no datum near 0 with less than one half-turn down to 1e-290");
        }
    }
    return {floor_d, 1.0 - g};
}

namespace {

ScanOptions side_scan_options(const ScanOptions& base, Side side) {
    ScanOptions o = base;
    o.spacing = ScanSpacing::hybrid;
    o.log_anchor = side == Side::below_one ? 0.0 : 1.0;
    return o;
}

// Scans one side and inserts golden-section refinements of every interior
// extremum of the half-turn profile; returns the refined global maximum.
SideReport scan_side(const Problem& p, const IntegratorSettings& settings, Side side,
                     const SolveOptions& options) {
    SideReport rep;
    rep.side = side;
    const ScanOptions so = side_scan_options(options.scan, side);
    std::tie(rep.d_lo, rep.d_hi) = side_interval(p, settings, side, so);
    rep.scan = scan(p, settings, rep.d_lo, rep.d_hi, so);
    const ScanGeometry geo{rep.d_lo, rep.d_hi, so.spacing, so.log_anchor, so.resolution_fraction};

    auto& recs = rep.scan.records;
    struct Task {
        double a, b;
        bool maximize;
    };
    std::vector<Task> tasks;
    for (bool maximize : {true, false}) {
        for (std::size_t i : extremum_indices(recs, maximize)) {
            tasks.push_back({recs[i - 1].d, recs[i + 1].d, maximize});
        }
    }
    // The global maximum may sit at an end of the interval.
    const auto best = std::max_element(recs.begin(), recs.end(), [](const auto& x, const auto& y) {
        return x.half_turns < y.half_turns;
    });
    const std::size_t bi = static_cast<std::size_t>(best - recs.begin());
    if (bi == 0 || bi + 1 == recs.size()) {
        tasks.push_back({recs[bi == 0 ? 0 : bi - 1].d, recs[bi == 0 ? 1 : bi].d, true});
    }
    std::vector<ShotRecord> refined(tasks.size());
    parallel_for(tasks.size(), so.jobs, [&](std::size_t i) {
        refined[i] = refine_extremum(p, settings, geo, so.system, tasks[i].a, tasks[i].b,
                                     tasks[i].maximize);
    });
    rep.scan.local_maxima.clear();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].maximize) rep.scan.local_maxima.push_back(refined[i]);
    }
    insert_sorted(recs, refined);
    rep.scan.brackets = detect_brackets(recs);

    const auto peak = std::max_element(recs.begin(), recs.end(), [](const auto& x, const auto& y) {
        return x.half_turns < y.half_turns;
    });
    rep.peak.side = side;
    rep.peak.d_star = peak->d;
    rep.peak.half_turns_max = peak->half_turns;
    const ShotRecord& edge = side == Side::below_one ? recs.back() : recs.front();
    rep.guard_slow = edge.half_turns < 1.0;
    return rep;
}

}  // namespace

PeakResult find_peak(const Problem& p, const IntegratorSettings& settings, Side side,
                     const SolveOptions& options) {
    return scan_side(p, settings, side, options).peak;
}

std::string BranchResult::label() const {
    return (sign > 0 ? "+" : "-") + std::to_string(index);
}

std::vector<const BranchResult*> SolveResult::side_branches(int sign) const {
    std::vector<const BranchResult*> out;
    for (const auto& b : branches) {
        if (b.sign == sign) out.push_back(&b);
    }
    return out;
}

SolveResult find_solutions(const Problem& p, const IntegratorSettings& settings,
                           const SolveOptions& options) {
    SolveResult result;
    result.below = scan_side(p, settings, Side::below_one, options);
    result.above = scan_side(p, settings, Side::above_one, options);

    struct Task {
        Bracket bracket;
        int level;
        bool on_v;  // single-level bracket: solve v(R) = 0, else half_turns = level
    };
    std::vector<Task> tasks;
    for (const SideReport* side : {&result.below, &result.above}) {
        for (const Bracket& br : side->scan.brackets) {
            const int la = level_of(br.lo);
            const int lb = level_of(br.hi);
            const bool single = std::abs(la - lb) == 1;
            for (int m = std::min(la, lb) + 1; m <= std::max(la, lb); ++m) {
                tasks.push_back({br, m, single});
            }
        }
    }

    const ShootingSystem system = options.scan.system;
    struct Outcome {
        std::optional<BranchResult> branch;
        std::optional<RootFailure> failure;
    };
    std::vector<Outcome> outcomes(tasks.size());
    parallel_for(tasks.size(), options.scan.jobs, [&](std::size_t i) {
        const Task& t = tasks[i];
        auto g = [&](double d) {
            const ShotRecord r = shoot(p, d, settings, system);
            return t.on_v ? r.v_R : r.half_turns - t.level;
        };
        const double fa = t.on_v ? t.bracket.lo.v_R : t.bracket.lo.half_turns - t.level;
        const double fb = t.on_v ? t.bracket.hi.v_R : t.bracket.hi.half_turns - t.level;
        const RootOutcome root = solve_root(g, t.bracket.lo.d, fa, t.bracket.hi.d, fb,
                                            options.root_rel_tol, options.max_root_iterations);
        RootFailure fail{t.bracket.lo.d, t.bracket.hi.d, t.level, root.reason};

        BranchResult b;
        std::string residual_note;
        auto accept = [&](const BranchResult& br) {
            return br.residual < options.residual_tol * std::min(1.0, br.max_abs_v);
        };
        if (root.converged) {
            b.d_star = root.d;
            b.d_exact = root.d;
            b.iterations = root.iterations;
            b.trajectory = integrate_shoot(p, root.d, settings, ShootingSystem::original);
            const Trajectory aux = integrate_shoot(p, root.d, settings, ShootingSystem::auxiliary);
            b.aux_deviation = sup_deviation(b.trajectory, aux);
            b.residual = std::abs(b.trajectory.v.back());
            b.max_abs_v = b.trajectory.max_abs_v;
            residual_note = "residual |v(R)| = " + std::to_string(b.residual) + " above tolerance";
        }
        const double ulp_width =
            options.extended_trigger_ulps *
            (std::nextafter(root.b, std::numeric_limits<double>::infinity()) - root.b);
        const bool narrow = root.b > root.a && root.b - root.a <= ulp_width;
        if ((!root.converged || !accept(b)) && narrow && supports_extended(p.f)) {
            // The root is finer than the double grid in d: polish in extended precision.
            const double target = 0.01 * options.residual_tol * std::min(1.0, root.converged ? b.max_abs_v : 1.0);
            const ExtendedRoot deep = solve_root_extended(
                p, settings, system, root.a, root.b, t.bracket.lo.d, t.bracket.hi.d, t.level,
                target, options.max_extended_iterations);
            if (deep.converged) {
                const ExtendedShot orig =
                    integrate_shoot_extended(p, deep.d, settings, ShootingSystem::original);
                const ExtendedShot aux =
                    integrate_shoot_extended(p, deep.d, settings, ShootingSystem::auxiliary);
                b = BranchResult{};
                b.d_exact = deep.d;
                b.d_star = static_cast<double>(deep.d);
                b.extended_precision = true;
                b.iterations = root.iterations + deep.iterations;
                b.trajectory = orig.trajectory;
                b.aux_deviation = std::max(sup_deviation(orig.trajectory, aux.trajectory),
                                           static_cast<double>(abs(orig.v_R - aux.v_R)));
                b.residual = static_cast<double>(abs(orig.v_R));
                b.max_abs_v = b.trajectory.max_abs_v;
            } else {
                fail.reason = deep.reason;
                outcomes[i].failure = fail;
                return;
            }
        } else if (!root.converged) {
            outcomes[i].failure = fail;
            return;
        }
        b.sign = b.d_star > 1.0 ? 1 : -1;
        b.zeros = count_zeros(b.trajectory);
        b.min_u = *std::min_element(b.trajectory.u.begin(), b.trajectory.u.end());
        if (!accept(b)) {
            fail.reason = "residual |v(R)| = " + std::to_string(b.residual) + " above tolerance";
            outcomes[i].failure = fail;
            return;
        }
        outcomes[i].branch = std::move(b);
    });

    std::vector<BranchResult> accepted;
    for (auto& o : outcomes) {
        if (o.failure) result.failures.push_back(*o.failure);
        if (!o.branch) continue;
        if (o.branch->min_u > 0.0) {
            accepted.push_back(std::move(*o.branch));
        } else {
            result.rejected.push_back(std::move(*o.branch));
        }
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const BranchResult& a, const BranchResult& b) { return a.d_exact < b.d_exact; });
    for (auto& b : accepted) {
        if (!result.branches.empty()) {
            const BranchResult& prev = result.branches.back();
            // Extended-precision roots are told apart by their zero counts; double
            // roots by separation in d.
            const bool same = (b.extended_precision || prev.extended_precision)
                                  ? b.zeros == prev.zeros &&
                                        b.d_exact - prev.d_exact <=
                                            1e3 * std::numeric_limits<Extended>::epsilon() * b.d_exact
                                  : b.d_star - prev.d_star <=
                                        10.0 * options.root_rel_tol * std::max(b.d_star, prev.d_star);
            if (same) continue;
        }
        result.branches.push_back(std::move(b));
    }
    int below = 0;
    int above = 0;
    for (auto& b : result.branches) b.index = b.sign > 0 ? ++above : ++below;
    return result;
}

std::vector<const BranchResult*> theorem_chain(const SolveResult& result, int sign, int k) {
    const double peak = (sign > 0 ? result.above : result.below).peak.d_star;
    const auto side = result.side_branches(sign);
    std::vector<const BranchResult*> rising(static_cast<std::size_t>(k), nullptr);
    std::vector<const BranchResult*> falling(static_cast<std::size_t>(k), nullptr);
    for (const BranchResult* b : side) {
        if (b->zeros < 1 || b->zeros > k) continue;
        auto& slot = (b->d_star < peak ? rising : falling)[static_cast<std::size_t>(b->zeros - 1)];
        if (b->d_star < peak) {
            if (!slot || b->d_exact < slot->d_exact) slot = b;
        } else if (!slot || b->d_exact > slot->d_exact) {
            slot = b;
        }
    }
    std::vector<const BranchResult*> chain;
    for (const BranchResult* b : rising) chain.push_back(b);
    for (auto it = falling.rbegin(); it != falling.rend(); ++it) chain.push_back(*it);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (!chain[i] || (i > 0 && !(chain[i - 1]->d_exact < chain[i]->d_exact))) return {};
    }
    return chain;
}

bool matches_theorem_pattern(const SolveResult& result, int k) {
    return !theorem_chain(result, -1, k).empty() && !theorem_chain(result, +1, k).empty();
}

bool ThresholdResult::monotone_above() const {
    return std::all_of(rechecks.begin(), rechecks.end(), [](const auto& c) { return c.second; });
}

ThresholdResult estimate_threshold_radius(const Nonlinearity& f, int dimension, int k,
                                          double R_max, const IntegratorSettings& settings,
                                          const ThresholdOptions& options) {
    if (k < 1) throw ValidationError("threshold search needs k >= 1");
    if (!std::isfinite(R_max) || !(R_max > options.R_min)) {
        throw ValidationError("threshold search needs R_max > R_min");
    }
    ThresholdResult res;
    res.k = k;
    auto predicate = [&](double R) {
        ++res.evaluations;
        const Problem p(f, ProblemConfig{dimension, R});
        return matches_theorem_pattern(find_solutions(p, settings, options.solve), k);
    };
    if (!predicate(R_max)) {
        throw NumericalError("pattern for k = " + std::to_string(k) + " not found at R_max = " +
                             std::to_string(R_max) + "; search window exhausted");
    }
    double hi = R_max;
    double lo = 0.5 * R_max;
    while (predicate(lo)) {
        hi = lo;
        lo *= 0.5;
        if (lo < options.R_min) {
            throw NumericalError("pattern persists below R_min; no threshold in the window");
        }
    }
    while (hi - lo > options.rel_width * hi) {
        const double mid = 0.5 * (lo + hi);
        (predicate(mid) ? hi : lo) = mid;
    }
    res.R_star = hi;
    res.R_below = lo;
    for (double factor : options.recheck_factors) {
        const double R = factor * hi;
        res.rechecks.emplace_back(R, predicate(R));
    }
    return res;
}

}  // namespace lmshoot
