#pragma once

#include <cmath>
#include <functional>
#include <string>

namespace lmshoot {

// =============================================================================
// Reaction term
// =============================================================================

enum class NonlinearityKind { cubic_pinned, power, custom };

/// Reaction term f on [0, inf) with an equilibrium at s = 1.
///
/// Built-ins:
///   cubic_pinned   f(s) = s (s - 1)^3          (f'(1) = 0)
///   power(q)       f(s) = s^(q-1) - s, q > 2   (f'(1) = q - 2)
///
/// Every instance is validated on construction by dense sampling: f(0) = f(1) = 0,
/// f < 0 on (0,1) and f > 0 on (1, inf). Invalid input throws ValidationError.
class Nonlinearity {
public:
    using Fn = std::function<double(double)>;

    static Nonlinearity cubic_pinned();
    static Nonlinearity power(double q);
    /// Custom reaction term. The derivative must be analytic; it is used for
    /// diagnostics only (f'(1) regime report) and is never differentiated numerically.
    static Nonlinearity custom(std::string name, Fn f, Fn df);

    NonlinearityKind kind() const noexcept { return kind_; }
    double exponent() const noexcept { return q_; }
    const std::string& name() const noexcept { return name_; }

    /// f(s) for s >= 0.
    double value(double s) const {
        switch (kind_) {
        case NonlinearityKind::cubic_pinned: {
            const double t = s - 1.0;
            return s * t * t * t;
        }
        case NonlinearityKind::power:
            return std::pow(s, q_ - 1.0) - s;
        case NonlinearityKind::custom:
            break;
        }
        return f_(s);
    }

    double derivative(double s) const;

    /// Human-readable tag, e.g. "cubic_pinned" or "power(q=4)".
    std::string describe() const;

private:
    Nonlinearity(NonlinearityKind kind, double q, std::string name, Fn f, Fn df);
    void validate() const;

    NonlinearityKind kind_;
    double q_ = 0.0;
    std::string name_;
    Fn f_;
    Fn df_;
};

/// Trivial continuous extension: f(s) for s >= 0, zero below.
inline double f_hat(const Nonlinearity& f, double s) { return s < 0.0 ? 0.0 : f.value(s); }

// =============================================================================
// Curvature operator
// =============================================================================

/// phi(s) = s / sqrt(1 - s^2). Throws DomainError for |s| >= 1.
double phi(double s);

/// phi^{-1}(t) = t / sqrt(1 + t^2). For |t| beyond ~7e7 the quotient rounds to
/// +-1; the result is then rounded toward zero instead, so |phi^{-1}(t)| < 1 holds
/// in floating point as well.
inline double phi_inv(double t) {
    const double s = t / std::hypot(1.0, t);
    return std::abs(s) < 1.0 ? s : std::copysign(1.0 - 0x1.0p-53, t);
}

// =============================================================================
// Ball and truncated problem
// =============================================================================

struct ProblemConfig {
    int dimension = 1;   ///< N >= 1
    double radius = 1.0; ///< R > 0

    /// Throws ValidationError unless N >= 1 and R is finite and positive.
    void validate() const;
};

/// r^(N-1) with integer exponent.
inline double radial_weight(double r, int dimension) {
    double w = 1.0;
    for (int i = 1; i < dimension; ++i) w *= r;
    return w;
}

/// Constants of the globally Lipschitz auxiliary problem.
///
/// f_tilde equals f_hat on |s| <= 1+R, vanishes for |s| >= 2+R and is bridged by a
/// linear taper in between. phi_tilde equals phi on [-gamma, gamma] and continues
/// linearly with slope phi'(gamma) outside.
struct TruncationData {
    double sup_f = 0.0;           ///< M = max |f_tilde|
    double gamma = 0.0;           ///< phi^{-1}(M R)
    double one_minus_gamma = 1.0; ///< 1 - gamma without cancellation (gamma rounds to 1 for large M R)
    double phi_at_gamma = 0.0;    ///< phi(gamma) = M R
    double phi_slope = 1.0;       ///< phi'(gamma) = (1 + M^2 R^2)^{3/2}
    double inner_cutoff = 0.0;    ///< 1 + R
    double outer_cutoff = 0.0;    ///< 2 + R
};

/// Grid scan (10^4 points) of |f_hat| on [0, 2+R] refined by golden section.
TruncationData build_truncation(const Nonlinearity& f, const ProblemConfig& config);

double f_tilde(const Nonlinearity& f, const TruncationData& trunc, double s);
double phi_tilde(const TruncationData& trunc, double s);
double phi_tilde_inv(const TruncationData& trunc, double t);

}  // namespace lmshoot
