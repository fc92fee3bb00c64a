#pragma once

#include "lmshoot/dopri5.hpp"
#include "lmshoot/model.hpp"

#include <iosfwd>
#include <string_view>
#include <vector>

namespace lmshoot {

/// Which Cauchy problem is integrated: the original Minkowski system or its
/// globally Lipschitz truncation (f_tilde, phi_tilde).
enum class ShootingSystem { original, auxiliary };

std::string_view to_string(ShootingSystem system);

/// A reaction term on a fixed ball, with the truncation constants precomputed.
struct Problem {
    Problem(Nonlinearity f, ProblemConfig config);

    Nonlinearity f;
    ProblemConfig config;
    TruncationData trunc;
};

struct IntegratorSettings {
    double rtol = 1e-10;
    double atol = 1e-12;
    double r_start = 0.0;       ///< Taylor start radius; 0 selects 1e-6 R
    double dense_stride = 0.0;  ///< output spacing; 0 selects R / 2000
    long long max_steps = 10'000'000;

    double resolved_r_start(double radius) const { return r_start > 0.0 ? r_start : 1e-6 * radius; }
    double resolved_stride(double radius) const {
        return dense_stride > 0.0 ? dense_stride : radius / 2000.0;
    }
    /// Throws ValidationError unless 0 < r_start < R and rtol, atol > 0.
    void validate(double radius) const;
};

/// Dense output of one shot from u(0) = d, v(0) = 0.
///
/// `theta` is the clockwise polar angle of (u, v) about the equilibrium (1, 0),
/// unwrapped continuously; `winding` holds theta - theta(0) accumulated from
/// zero so that tiny early increments stay representable. For d = 1 the polar
/// arrays are NaN (the shot sits on the equilibrium).
struct Trajectory {
    double d = 0.0;
    ShootingSystem system = ShootingSystem::original;
    std::vector<double> r, u, v, theta, rho, winding;
    double max_abs_slope = 0.0;  ///< sup |u'| over accepted steps and dense nodes
    double max_abs_v = 0.0;
    long long steps = 0;

    bool constant() const noexcept { return d == 1.0; }
    /// Exact equilibrium of the integrated system (d = 1, or v vanishing identically,
    /// e.g. d = 0 or an auxiliary shot from d >= 2 + R where f_tilde vanishes).
    bool stationary() const noexcept { return constant() || max_abs_v == 0.0; }
    std::size_t size() const noexcept { return r.size(); }
};

/// (u', v') of the original system at r > 0. Throws DomainError at r <= 0.
State<2> rhs_original(const Problem& p, double r, double u, double v);

/// (u', v') of the auxiliary system at r > 0. Throws DomainError at r <= 0.
State<2> rhs_auxiliary(const Problem& p, double r, double u, double v);

/// Series start near the singular point, with a = f(d) / N for the reaction term
/// of `system` (f_hat or f_tilde):
///   v = -a r^N,   u = d - (sqrt(1 + a^2 r^2) - 1) / a  (= d - a r^2 / 2 + O(a^3 r^4)).
/// The u expansion integrates u' = -phi^{-1}(a r) exactly, so |u'| < 1 holds even
/// when f(d) r is not small.
State<2> taylor_start(const Problem& p, double d, double r_start,
                      ShootingSystem system = ShootingSystem::original);

/// Integrates the chosen system over [0, R] from (d, 0). Throws ValidationError
/// for d < 0 and NumericalError on step exhaustion or degenerate polar data.
Trajectory integrate_shoot(const Problem& p, double d, const IntegratorSettings& settings,
                           ShootingSystem system = ShootingSystem::auxiliary);

/// Recomputes theta, rho and winding from the stored (u, v) nodes. Requires the
/// dense stride to resolve the rotation (less than pi between nodes).
void polar_unwrap(Trajectory& traj);

/// Zeros of u - 1 in (0, R) counted from the angle: crossings of pi/2 + k pi.
int count_zeros(const Trajectory& traj);

/// Sign changes of u - 1 on the dense nodes.
int count_sign_changes(const Trajectory& traj);

/// (theta(R) - theta(0)) / pi.
double half_turns(const Trajectory& traj);

/// Right-hand side of the angle equation for the chosen system (used as a cross-check
/// of the unwrapped angle).
double theta_rate(const Problem& p, ShootingSystem system, double r, double u, double v);

/// F(u) = integral of f_hat from 1 to u. Closed forms for the built-ins, adaptive
/// Simpson quadrature for custom kinds.
double primitive_f(const Nonlinearity& f, double u);

/// sqrt(1 + v^2) + F(u) on every node; conserved when N = 1.
std::vector<double> first_integral(const Problem& p, const Trajectory& traj);

/// CSV with header r,u,v,theta,rho; 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace lmshoot
