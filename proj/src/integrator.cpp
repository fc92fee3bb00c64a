#include "lmshoot/integrator.hpp"

#include "lmshoot/errors.hpp"
#include "lmshoot/extended.hpp"

#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <type_traits>

namespace lmshoot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRhoFloor = 1e-14;
constexpr double kExtendedAtolScale = 1e-20;
// Interior interpolation points per accepted step used only for unwrapping.
constexpr std::array<double, 3> kUnwrapFractions{0.25, 0.5, 0.75};

// Accumulates the clockwise angle of (u, v) about (1, 0). Each increment is the
// signed angle between consecutive position vectors, which stays accurate for
// increments far below the ulp of theta itself.
class AngleTracker {
public:
    void reset(double u, double v) {
        x_ = u - 1.0;
        y_ = -v;
        winding_ = 0.0;
    }
    double feed(double u, double v) {
        const double x = u - 1.0;
        const double y = -v;
        winding_ += std::atan2(x_ * y - y_ * x, x_ * x + y_ * y);
        x_ = x;
        y_ = y;
        return winding_;
    }
    double winding() const noexcept { return winding_; }

private:
    double x_ = 0.0, y_ = 0.0, winding_ = 0.0;
};

double initial_angle(double d) { return d < 1.0 ? kPi : 0.0; }

void check_radius(double r) {
    if (!(r > 0.0)) {
        throw DomainError("shooting system is singular at r = 0; use taylor_start");
    }
}

double adaptive_simpson(const Nonlinearity& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f_hat(f, lm);
    const double frm = f_hat(f, rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

void fill_constant(Trajectory& t, double d, std::size_t nodes, double radius, bool polar) {
    t.r.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        t.r[i] = radius * static_cast<double>(i) / static_cast<double>(nodes - 1);
    }
    t.u.assign(nodes, d);
    t.v.assign(nodes, 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.theta.assign(nodes, polar ? initial_angle(d) : nan);
    t.rho.assign(nodes, polar ? std::abs(d - 1.0) : nan);
    t.winding.assign(nodes, polar ? 0.0 : nan);
}

}  // namespace

std::string_view to_string(ShootingSystem system) {
    return system == ShootingSystem::original ? "original" : "auxiliary";
}

Problem::Problem(Nonlinearity f_, ProblemConfig config_)
    : f(std::move(f_)), config(config_), trunc(build_truncation(f, config)) {}

void IntegratorSettings::validate(double radius) const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("rtol and atol must be > 0");
    const double rs = resolved_r_start(radius);
    if (!(rs > 0.0 && rs < radius)) throw ValidationError("r_start must lie in (0, R)");
    const double stride = resolved_stride(radius);
    if (!(stride > 0.0 && stride <= radius)) throw ValidationError("dense_stride must lie in (0, R]");
    if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
}

State<2> rhs_original(const Problem& p, double r, double u, double v) {
    check_radius(r);
    const double w = radial_weight(r, p.config.dimension);
    return {phi_inv(v / w), -w * f_hat(p.f, u)};
}

State<2> rhs_auxiliary(const Problem& p, double r, double u, double v) {
    check_radius(r);
    const double w = radial_weight(r, p.config.dimension);
    return {phi_tilde_inv(p.trunc, v / w), -w * f_tilde(p.f, p.trunc, u)};
}

State<2> taylor_start(const Problem& p, double d, double r_start, ShootingSystem system) {
    const int n = p.config.dimension;
    const double f0 = system == ShootingSystem::auxiliary ? f_tilde(p.f, p.trunc, d) : f_hat(p.f, d);
    const double a = f0 / n;
    // Leading order v = -a r^N gives u' = -phi^{-1}(a r); integrating that exactly
    // keeps |u'| < 1 even when a r_start is not small. Agrees with
    // d - a r^2 / 2 up to O(a^3 r^4).
    const double ar = a * r_start;
    const double drop = a == 0.0 ? 0.0 : r_start * ar / (std::hypot(1.0, ar) + 1.0);
    return {d - drop, -a * radial_weight(r_start, n) * r_start};
}

namespace {

// Reaction term and curvature pieces in the working precision of a shot. The
// double overloads are the public model functions; the Extended ones repeat the
// closed forms.
double rhs_f(const Problem& p, bool aux, double u) {
    return aux ? f_tilde(p.f, p.trunc, u) : f_hat(p.f, u);
}
double rhs_phi_inv(const Problem& p, bool aux, double t) {
    return aux ? phi_tilde_inv(p.trunc, t) : phi_inv(t);
}
double root_of(double x) { return std::sqrt(x); }

Extended f_hat_ext(const Nonlinearity& f, const Extended& s) {
    if (s < 0) return Extended(0);
    switch (f.kind()) {
    case NonlinearityKind::cubic_pinned: {
        const Extended t = s - 1;
        return s * t * t * t;
    }
    case NonlinearityKind::power:
        return pow(s, Extended(f.exponent()) - 1) - s;
    case NonlinearityKind::custom:
        break;
    }
    throw ValidationError("reaction term '" + f.describe() + "' has no extended-precision form");
}
Extended rhs_f(const Problem& p, bool aux, const Extended& u) {
    if (!aux) return f_hat_ext(p.f, u);
    const Extended a = abs(u);
    if (a <= p.trunc.inner_cutoff) return f_hat_ext(p.f, u);
    if (a >= p.trunc.outer_cutoff) return Extended(0);
    const Extended taper = (Extended(p.trunc.outer_cutoff) - a) /
                           (Extended(p.trunc.outer_cutoff) - Extended(p.trunc.inner_cutoff));
    return f_hat_ext(p.f, u) * taper;
}
Extended rhs_phi_inv(const Problem& p, bool aux, const Extended& t) {
    const Extended a = abs(t);
    if (!aux || a <= p.trunc.phi_at_gamma) return t / sqrt(1 + t * t);
    const Extended gamma = 1 - Extended(p.trunc.one_minus_gamma);
    const Extended out = gamma + (a - p.trunc.phi_at_gamma) / Extended(p.trunc.phi_slope);
    return t < 0 ? Extended(-out) : out;
}
Extended root_of(const Extended& x) { return sqrt(x); }

template <typename T>
T weight_of(const T& r, int dimension) {
    T w = 1;
    for (int i = 1; i < dimension; ++i) w *= r;
    return w;
}

template <typename T>
State<2, T> rhs_generic(const Problem& p, bool aux, const T& r, const State<2, T>& y) {
    if constexpr (std::is_same_v<T, double>) {
        return aux ? rhs_auxiliary(p, r, y[0], y[1]) : rhs_original(p, r, y[0], y[1]);
    }
    if (!(r > 0)) throw DomainError("shooting system is singular at r = 0; use taylor_start");
    const T w = weight_of(r, p.config.dimension);
    return {rhs_phi_inv(p, aux, T(y[1] / w)), T(-w * rhs_f(p, aux, y[0]))};
}

template <typename T>
State<2, T> taylor_generic(const Problem& p, bool aux, const T& d, const T& r_start) {
    if constexpr (std::is_same_v<T, double>) {
        return taylor_start(p, d, r_start, aux ? ShootingSystem::auxiliary : ShootingSystem::original);
    }
    const int n = p.config.dimension;
    const T a = rhs_f(p, aux, d) / n;
    const T ar = a * r_start;
    const T drop = a == 0 ? T(0) : T(r_start * ar / (root_of(T(1 + ar * ar)) + 1));
    return {T(d - drop), T(-a * weight_of(r_start, n) * r_start)};
}

// One shot in working precision T. The angle bookkeeping and the stored
// trajectory are double; only the state propagation uses T.
template <typename T>
Trajectory shoot_core(const Problem& p, const T& d, const IntegratorSettings& settings,
                      ShootingSystem system, double atol_scale, State<2, T>* end_state) {
    const double d_dbl = static_cast<double>(d);
    if (!std::isfinite(d_dbl) || d < 0) {
        throw ValidationError("initial datum d must be finite and >= 0, got " + std::to_string(d_dbl));
    }
    const double radius = p.config.radius;
    settings.validate(radius);

    Trajectory t;
    t.d = d_dbl;
    t.system = system;
    const auto intervals = static_cast<std::size_t>(
        std::max(1.0, std::round(radius / settings.resolved_stride(radius))));
    const std::size_t nodes = intervals + 1;
    if (d == 1 || d == 0) {
        fill_constant(t, d_dbl, nodes, radius, d != 1);
        if (end_state) *end_state = {d, T(0)};
        return t;
    }

    t.r.reserve(nodes);
    t.u.reserve(nodes);
    t.v.reserve(nodes);
    t.theta.reserve(nodes);
    t.rho.reserve(nodes);
    t.winding.reserve(nodes);

    const double theta0 = initial_angle(d_dbl);
    AngleTracker tracker;
    tracker.reset(d_dbl, 0.0);
    auto node_r = [&](std::size_t i) {
        return i == intervals ? radius
                              : radius * static_cast<double>(i) / static_cast<double>(intervals);
    };
    auto dbl = [](const T& x) { return static_cast<double>(x); };
    std::size_t next = 0;
    auto record = [&](double r, double u, double v, double winding) {
        const double rho = std::hypot(u - 1.0, v);
        if (rho < kRhoFloor) {
            throw NumericalError("shot from d = " + std::to_string(d_dbl) +
                                 " passes within 1e-14 of the equilibrium at r = " +
                                 std::to_string(r));
        }
        t.r.push_back(r);
        t.u.push_back(u);
        t.v.push_back(v);
        t.theta.push_back(theta0 + winding);
        t.rho.push_back(rho);
        t.winding.push_back(winding);
        t.max_abs_v = std::max(t.max_abs_v, std::abs(v));
    };
    auto feed = [&](const State<2, T>& y) { return tracker.feed(dbl(y[0]), dbl(y[1])); };

    const bool aux = system == ShootingSystem::auxiliary;
    const T r_start = settings.resolved_r_start(radius);
    record(0.0, d_dbl, 0.0, 0.0);
    next = 1;
    while (next < nodes && node_r(next) < r_start) {
        const State<2, T> y = taylor_generic(p, aux, d, T(node_r(next)));
        record(node_r(next), dbl(y[0]), dbl(y[1]), feed(y));
        ++next;
    }
    const State<2, T> y_start = taylor_generic(p, aux, d, r_start);
    feed(y_start);

    auto slope = [&](const T& r, const T& v) {
        return std::abs(dbl(rhs_phi_inv(p, aux, T(v / weight_of(r, p.config.dimension)))));
    };
    t.max_abs_slope = slope(r_start, y_start[1]);

    StepControl ctl;
    ctl.rtol = settings.rtol;
    // Shots from tiny d grow like d e^r before reaching O(1); the absolute
    // tolerance follows the datum so the early phase is resolved relatively.
    ctl.atol = settings.atol * std::min(1.0, d_dbl) * atol_scale;
    ctl.max_steps = settings.max_steps;

    auto rhs = [&](const T& r, const State<2, T>& y) { return rhs_generic(p, aux, r, y); };
    auto on_step = [&](const AcceptedStep<2, T>& step) {
        const T h = step.x1 - step.x0;
        std::size_t frac = 0;
        for (;;) {
            const T r_frac = frac < kUnwrapFractions.size()
                                 ? T(step.x0 + kUnwrapFractions[frac] * h)
                                 : step.x1;
            const bool node_first = next < nodes && node_r(next) <= r_frac;
            if (node_first) {
                const T r = node_r(next);
                const State<2, T> y = r >= step.x1 ? step.y1 : step.interpolate(r);
                record(node_r(next), dbl(y[0]), dbl(y[1]), feed(y));
                t.max_abs_slope = std::max(t.max_abs_slope, slope(r, y[1]));
                ++next;
                continue;
            }
            if (frac == kUnwrapFractions.size()) break;
            feed(step.interpolate(r_frac));
            ++frac;
        }
        feed(step.y1);
        t.max_abs_slope = std::max(t.max_abs_slope, slope(step.x1, step.y1[1]));
        if (end_state) *end_state = step.y1;
    };

    // u = 0 is a kink of f_hat in both systems; the taper corners 1+R and 2+R are
    // kinks of f_tilde. Steps are made to end on them.
    const T inner = p.trunc.inner_cutoff, outer = p.trunc.outer_cutoff;
    auto surfaces = [&](const State<2, T>& y) -> std::array<T, 3> {
        if (!aux) return {y[0], T(1), T(1)};
        return {y[0], T(y[0] - inner), T(y[0] - outer)};
    };

    const IntegrationStats stats =
        integrate_dopri5<2, T>(rhs, r_start, y_start, T(radius), ctl, on_step, surfaces);
    t.steps = stats.accepted;
    if (t.r.size() != nodes) {
        throw NumericalError("dense output incomplete: " + std::to_string(t.r.size()) + " of " +
                             std::to_string(nodes) + " nodes");
    }
    return t;
}

}  // namespace

Trajectory integrate_shoot(const Problem& p, double d, const IntegratorSettings& settings,
                           ShootingSystem system) {
    return shoot_core<double>(p, d, settings, system, 1.0, nullptr);
}

bool supports_extended(const Nonlinearity& f) { return f.kind() != NonlinearityKind::custom; }

ExtendedShot integrate_shoot_extended(const Problem& p, const Extended& d,
                                      const IntegratorSettings& settings, ShootingSystem system) {
    if (!supports_extended(p.f)) {
        throw ValidationError("reaction term '" + p.f.describe() +
                              "' has no extended-precision form");
    }
    ExtendedShot shot;
    State<2, Extended> end{};
    // Extended shots are only needed for trajectories that linger next to the
    // saddle (0, 0), where u and v are far below atol; control relative error there.
    shot.trajectory = shoot_core<Extended>(p, d, settings, system, kExtendedAtolScale, &end);
    shot.u_R = end[0];
    shot.v_R = end[1];
    return shot;
}

std::string to_decimal(const Extended& x) {
    return x.str(std::numeric_limits<Extended>::digits10 + 2, std::ios_base::scientific);
}

void polar_unwrap(Trajectory& traj) {
    if (traj.constant()) {
        throw DomainError("polar coordinates are undefined for the equilibrium shot d = 1");
    }
    const std::size_t n = traj.size();
    traj.theta.resize(n);
    traj.rho.resize(n);
    traj.winding.resize(n);
    const double theta0 = initial_angle(traj.d);
    AngleTracker tracker;
    tracker.reset(traj.u.front(), traj.v.front());
    for (std::size_t i = 0; i < n; ++i) {
        const double w = i == 0 ? 0.0 : tracker.feed(traj.u[i], traj.v[i]);
        traj.rho[i] = std::hypot(traj.u[i] - 1.0, traj.v[i]);
        if (traj.rho[i] < kRhoFloor) {
            throw NumericalError("rho below 1e-14 at r = " + std::to_string(traj.r[i]));
        }
        traj.winding[i] = w;
        traj.theta[i] = theta0 + w;
    }
}

int count_zeros(const Trajectory& traj) {
    const double x = half_turns(traj) - 0.5;
    return x <= 0.0 ? 0 : static_cast<int>(std::ceil(x));
}

int count_sign_changes(const Trajectory& traj) {
    int changes = 0;
    int last = 0;
    for (double u : traj.u) {
        const int s = u > 1.0 ? 1 : (u < 1.0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

double half_turns(const Trajectory& traj) {
    if (traj.constant()) {
        throw DomainError("half-turns are undefined for the equilibrium shot d = 1");
    }
    // The accumulated winding carries the rounding of every increment; snap it to
    // the branch of the exact final polar angle nearest to it so that a trajectory
    // ending just short of a half-turn boundary is not counted across it.
    const double w = traj.winding.back();
    const double delta = std::atan2(-traj.v.back(), traj.u.back() - 1.0) - initial_angle(traj.d);
    const double turns = std::round((w - delta) / (2.0 * kPi));
    return (delta + 2.0 * kPi * turns) / kPi;
}

double theta_rate(const Problem& p, ShootingSystem system, double r, double u, double v) {
    const auto [du, dv] =
        system == ShootingSystem::auxiliary ? rhs_auxiliary(p, r, u, v) : rhs_original(p, r, u, v);
    const double x = u - 1.0;
    // theta' for x = rho cos(theta), v = -rho sin(theta)
    return (du * v - dv * x) / (x * x + v * v);
}

double primitive_f(const Nonlinearity& f, double u) {
    const double s = std::max(u, 0.0);  // f_hat vanishes below zero
    switch (f.kind()) {
    case NonlinearityKind::cubic_pinned: {
        const double t = s - 1.0;
        const double t4 = t * t * t * t;
        return t4 * t / 5.0 + t4 / 4.0;
    }
    case NonlinearityKind::power: {
        const double q = f.exponent();
        return (std::pow(s, q) - 1.0) / q - (s * s - 1.0) / 2.0;
    }
    case NonlinearityKind::custom:
        break;
    }
    const double a = 1.0;
    const double b = s;
    if (a == b) return 0.0;
    const double fa = f_hat(f, a);
    const double fb = f_hat(f, b);
    const double fm = f_hat(f, 0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, 1e-13, 40);
}

std::vector<double> first_integral(const Problem& p, const Trajectory& traj) {
    std::vector<double> e(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        e[i] = std::sqrt(1.0 + traj.v[i] * traj.v[i]) + primitive_f(p.f, traj.u[i]);
    }
    return e;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "r,u,v,theta,rho\n";
    char buf[160];
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.r[i], traj.u[i],
                      traj.v[i], traj.theta[i], traj.rho[i]);
        out << buf;
    }
}

}  // namespace lmshoot
