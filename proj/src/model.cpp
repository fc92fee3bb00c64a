#include "lmshoot/model.hpp"

#include "lmshoot/errors.hpp"

#include <algorithm>
#include <sstream>

namespace lmshoot {

namespace {

constexpr int kSignSamples = 4000;
constexpr double kSignSampleUpper = 64.0;
constexpr int kSupGridPoints = 10000;

// Golden-section maximization of g on [a, b].
template <typename G>
double golden_max(G&& g, double a, double b, double rel_tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c);
    double gd = g(d);
    while (b - a > rel_tol * std::max(1.0, std::abs(b))) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    return std::max({g(a), g(b), gc, gd});
}

}  // namespace

Nonlinearity::Nonlinearity(NonlinearityKind kind, double q, std::string name, Fn f, Fn df)
    : kind_(kind), q_(q), name_(std::move(name)), f_(std::move(f)), df_(std::move(df)) {
    validate();
}

Nonlinearity Nonlinearity::cubic_pinned() {
    return Nonlinearity(NonlinearityKind::cubic_pinned, 0.0, "cubic_pinned", {}, {});
}

Nonlinearity Nonlinearity::power(double q) {
    if (!std::isfinite(q) || q <= 2.0) {
        throw ValidationError("power nonlinearity requires q > 2, got q = " + std::to_string(q));
    }
    return Nonlinearity(NonlinearityKind::power, q, "power", {}, {});
}

Nonlinearity Nonlinearity::custom(std::string name, Fn f, Fn df) {
    if (!f || !df) throw ValidationError("custom nonlinearity needs both f and f'");
    return Nonlinearity(NonlinearityKind::custom, 0.0, std::move(name), std::move(f), std::move(df));
}

double Nonlinearity::derivative(double s) const {
    switch (kind_) {
    case NonlinearityKind::cubic_pinned: {
        // d/ds [s (s-1)^3] = (s-1)^2 (4s - 1)
        const double t = s - 1.0;
        return t * t * (4.0 * s - 1.0);
    }
    case NonlinearityKind::power:
        return (q_ - 1.0) * std::pow(s, q_ - 2.0) - 1.0;
    case NonlinearityKind::custom:
        break;
    }
    return df_(s);
}

std::string Nonlinearity::describe() const {
    switch (kind_) {
    case NonlinearityKind::cubic_pinned:
        return "cubic_pinned";
    case NonlinearityKind::power: {
        std::ostringstream os;
        os << "power(q=" << q_ << ")";
        return os.str();
    }
    case NonlinearityKind::custom:
        break;
    }
    return "custom(" + name_ + ")";
}

void Nonlinearity::validate() const {
    const std::string tag = describe();
    if (std::abs(value(0.0)) > 1e-12) throw ValidationError(tag + ": f(0) must vanish");
    if (std::abs(value(1.0)) > 1e-12) throw ValidationError(tag + ": f(1) must vanish");
    for (int i = 1; i < kSignSamples; ++i) {
        const double s = static_cast<double>(i) / kSignSamples;
        if (!(value(s) < 0.0)) {
            throw ValidationError(tag + ": f must be negative on (0,1), fails at s = " +
                                  std::to_string(s));
        }
    }
    // Geometric spacing above 1 resolves the neighbourhood of the equilibrium.
    const double ratio = std::pow(kSignSampleUpper, 1.0 / kSignSamples);
    double s = 1.0 + 1e-3;
    for (int i = 0; i < kSignSamples; ++i, s *= ratio) {
        if (!(value(s) > 0.0)) {
            throw ValidationError(tag + ": f must be positive on (1,inf), fails at s = " +
                                  std::to_string(s));
        }
    }
}

double phi(double s) {
    if (!(std::abs(s) < 1.0)) {
        throw DomainError("phi(s) requires |s| < 1, got s = " + std::to_string(s));
    }
    return s / std::sqrt((1.0 - s) * (1.0 + s));
}

void ProblemConfig::validate() const {
    if (dimension < 1) {
        throw ValidationError("dimension N must be >= 1, got " + std::to_string(dimension));
    }
    if (!std::isfinite(radius) || radius <= 0.0) {
        throw ValidationError("radius R must be finite and > 0, got " + std::to_string(radius));
    }
}

TruncationData build_truncation(const Nonlinearity& f, const ProblemConfig& config) {
    config.validate();
    const double R = config.radius;
    TruncationData t;
    t.inner_cutoff = 1.0 + R;
    t.outer_cutoff = 2.0 + R;

    auto abs_f = [&](double s) { return std::abs(f_hat(f, s)); };
    const double h = t.outer_cutoff / kSupGridPoints;
    int best = 0;
    double best_val = 0.0;
    for (int i = 0; i <= kSupGridPoints; ++i) {
        const double v = abs_f(i * h);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double lo = std::max(0.0, (best - 1) * h);
    const double hi = std::min(t.outer_cutoff, (best + 1) * h);
    t.sup_f = std::max(best_val, golden_max(abs_f, lo, hi, 1e-12));

    const double mr = t.sup_f * R;
    const double root = std::hypot(1.0, mr);
    t.phi_at_gamma = mr;
    t.gamma = mr / root;
    // 1 - t/sqrt(1+t^2) = 1 / (sqrt(1+t^2) (sqrt(1+t^2) + t))
    t.one_minus_gamma = 1.0 / (root * (root + mr));
    t.phi_slope = root * root * root;
    return t;
}

double f_tilde(const Nonlinearity& f, const TruncationData& trunc, double s) {
    const double a = std::abs(s);
    if (a <= trunc.inner_cutoff) return f_hat(f, s);
    if (a >= trunc.outer_cutoff) return 0.0;
    const double taper = (trunc.outer_cutoff - a) / (trunc.outer_cutoff - trunc.inner_cutoff);
    return f_hat(f, s) * taper;
}

double phi_tilde(const TruncationData& trunc, double s) {
    const double a = std::abs(s);
    if (a <= trunc.gamma && a < 1.0) return phi(s);
    return std::copysign(trunc.phi_slope * (a - trunc.gamma) + trunc.phi_at_gamma, s);
}

double phi_tilde_inv(const TruncationData& trunc, double t) {
    const double a = std::abs(t);
    if (a <= trunc.phi_at_gamma) return phi_inv(t);
    return std::copysign(trunc.gamma + (a - trunc.phi_at_gamma) / trunc.phi_slope, t);
}

}  // namespace lmshoot
