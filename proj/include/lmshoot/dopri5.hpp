#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta pair with PI step-size control and
// the classical fourth-order continuous extension (Hairer, Norsett & Wanner,
// "Solving ODEs I", routine DOPRI5).

#include "lmshoot/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

namespace lmshoot {

/// Fixed-size state vector; `T` is double except for the extended-precision polish.
template <std::size_t Dim, typename T = double>
using State = std::array<T, Dim>;

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_max = 0.0;       ///< 0 means unbounded (|x_end - x0|)
    long long max_steps = 10'000'000;
};

/// One accepted step with its dense-output polynomial.
template <std::size_t Dim, typename T = double>
struct AcceptedStep {
    T x0 = 0.0;
    T x1 = 0.0;
    State<Dim, T> y0{};
    State<Dim, T> y1{};
    std::array<State<Dim, T>, 5> cont{};

    State<Dim, T> interpolate(const T& x) const {
        const T h = x1 - x0;
        const T s = (x - x0) / h;
        const T s1 = 1.0 - s;
        State<Dim, T> y{};
        for (std::size_t i = 0; i < Dim; ++i) {
            y[i] = cont[0][i] +
                   s * (cont[1][i] + s1 * (cont[2][i] + s * (cont[3][i] + s1 * cont[4][i])));
        }
        return y;
    }
};

struct IntegrationStats {
    long long accepted = 0;
    long long rejected = 0;
    long long evaluations = 0;
};

namespace dopri5_detail {

/// Butcher tableau, error weights and dense-output weights, each rounded once
/// from the exact rational in the working precision.
template <typename T>
struct Tableau {
    T c2, c3, c4, c5;
    T a21, a31, a32, a41, a42, a43, a51, a52, a53, a54;
    T a61, a62, a63, a64, a65, a71, a73, a74, a75, a76;
    T e1, e3, e4, e5, e6, e7;
    T d1, d3, d4, d5, d6, d7;

    static const Tableau& get() {
        static const Tableau tab = [] {
            auto q = [](double num, double den) { return T(num) / T(den); };
            Tableau t;
            t.c2 = q(1, 5); t.c3 = q(3, 10); t.c4 = q(4, 5); t.c5 = q(8, 9);
            t.a21 = q(1, 5);
            t.a31 = q(3, 40); t.a32 = q(9, 40);
            t.a41 = q(44, 45); t.a42 = q(-56, 15); t.a43 = q(32, 9);
            t.a51 = q(19372, 6561); t.a52 = q(-25360, 2187); t.a53 = q(64448, 6561);
            t.a54 = q(-212, 729);
            t.a61 = q(9017, 3168); t.a62 = q(-355, 33); t.a63 = q(46732, 5247);
            t.a64 = q(49, 176); t.a65 = q(-5103, 18656);
            t.a71 = q(35, 384); t.a73 = q(500, 1113); t.a74 = q(125, 192);
            t.a75 = q(-2187, 6784); t.a76 = q(11, 84);
            t.e1 = q(71, 57600); t.e3 = q(-71, 16695); t.e4 = q(71, 1920);
            t.e5 = q(-17253, 339200); t.e6 = q(22, 525); t.e7 = q(-1, 40);
            t.d1 = q(-12715105075.0, 11282082432.0);
            t.d3 = q(87487479700.0, 32700410799.0);
            t.d4 = q(-10690763975.0, 1880347072.0);
            t.d5 = q(701980252875.0, 199316789632.0);
            t.d6 = q(-1453857185.0, 822651844.0);
            t.d7 = q(69997945.0, 29380423.0);
            return t;
        }();
        return tab;
    }
};

}  // namespace dopri5_detail

/// No discontinuity surfaces.
struct NoSurfaces {
    template <typename Y>
    std::array<double, 0> operator()(const Y&) const {
        return {};
    }
};

/// Integrates y' = rhs(x, y) from x0 to x_end (x_end > x0), calling
/// `on_step(const AcceptedStep<Dim, T>&)` after every accepted step. Throws
/// NumericalError when the step budget is exhausted or the step size underflows.
///
/// `surfaces(y)` returns an array of functions whose zero sets are the places
/// where rhs loses smoothness (kinks of a piecewise definition). The embedded
/// error estimate is unreliable on a step that straddles such a kink, so a step
/// that crosses one is redone to end on the crossing, located on the dense
/// output; the following step then starts on the kink and sees one smooth piece.
///
/// The state, the abscissae and the stages are carried in `T`; the error norm and
/// the step-size factors are evaluated in double, which is all the controller needs.
template <std::size_t Dim, typename T, typename Rhs, typename Observer, typename Surfaces = NoSurfaces>
IntegrationStats integrate_dopri5(Rhs&& rhs, T x0, State<Dim, T> y0, T x_end,
                                  const StepControl& ctl, Observer&& on_step,
                                  Surfaces&& surfaces = {}) {
    const auto& tb = dopri5_detail::Tableau<T>::get();
    auto dbl = [](const T& a) { return static_cast<double>(a); };
    IntegrationStats stats;
    const T span = x_end - x0;
    const T h_max = ctl.h_max > 0.0 ? T(ctl.h_max) : span;

    auto scale = [&](const State<Dim, T>& a, const State<Dim, T>& b, std::size_t i) {
        return ctl.atol + ctl.rtol * std::max(std::abs(dbl(a[i])), std::abs(dbl(b[i])));
    };
    auto axpy = [](State<Dim, T>& out, const State<Dim, T>& y, const T& h,
                   std::initializer_list<std::pair<const T*, const State<Dim, T>*>> terms) {
        for (std::size_t i = 0; i < Dim; ++i) {
            T acc = 0.0;
            for (const auto& [c, k] : terms) acc += *c * (*k)[i];
            out[i] = y[i] + h * acc;
        }
    };

    State<Dim, T> k1 = rhs(x0, y0);
    ++stats.evaluations;

    // Initial step guess (HNW "hinit").
    T h;
    {
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const double sk = ctl.atol + ctl.rtol * std::abs(dbl(y0[i]));
            dnf += (dbl(k1[i]) / sk) * (dbl(k1[i]) / sk);
            dny += (dbl(y0[i]) / sk) * (dbl(y0[i]) / sk);
        }
        double h0 = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h0 = std::min(h0, dbl(h_max));
        State<Dim, T> y1;
        for (std::size_t i = 0; i < Dim; ++i) y1[i] = y0[i] + T(h0) * k1[i];
        const State<Dim, T> f1 = rhs(x0 + T(h0), y1);
        ++stats.evaluations;
        double der2 = 0.0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const double sk = ctl.atol + ctl.rtol * std::abs(dbl(y0[i]));
            const double df = dbl(f1[i] - k1[i]) / sk;
            der2 += df * df;
        }
        der2 = std::sqrt(der2) / h0;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h0) * 1e-3)
                                         : std::pow(0.01 / der12, 1.0 / 5.0);
        h = T(std::min({100.0 * std::abs(h0), h1, dbl(h_max)}));
    }

    constexpr double safe = 0.9, facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0, beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;
    double facold = 1e-4;
    bool last_rejected = false;

    // Fraction of the step at which the dense output first crosses a surface
    // (>= 1 when it does not). Crossings closer than kMinCrossingFraction to the
    // start are what is left over from a landing and are stepped through.
    constexpr double kMinCrossingFraction = 1e-6;
    auto first_crossing = [&](const AcceptedStep<Dim, T>& st) {
        const auto g0 = surfaces(st.y0);
        const auto g1 = surfaces(st.y1);
        double best = 2.0;
        for (std::size_t j = 0; j < g0.size(); ++j) {
            if (!(dbl(g0[j]) * dbl(g1[j]) < 0.0)) continue;
            const bool neg0 = dbl(g0[j]) < 0.0;
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const auto gm = surfaces(st.interpolate(st.x0 + T(mid) * (st.x1 - st.x0)));
                ((dbl(gm[j]) < 0.0) == neg0 ? lo : hi) = mid;
            }
            best = std::min(best, hi);
        }
        return best;
    };
    bool landing = false;
    T h_resume = 0.0;

    T x = x0;
    State<Dim, T> y = y0;
    AcceptedStep<Dim, T> step;
    State<Dim, T> k2, k3, k4, k5, k6, k7, ys, y1;
    for (;;) {
        if (stats.accepted + stats.rejected >= ctl.max_steps) {
            throw NumericalError("integrator exhausted max_steps = " +
                                 std::to_string(ctl.max_steps) + " at x = " + std::to_string(dbl(x)));
        }
        if (x + 1.01 * h >= x_end) h = x_end - x;
        if (!(dbl(h) > 1e-15 * std::max(1.0, std::abs(dbl(x))))) {
            throw NumericalError("step size underflow at x = " + std::to_string(dbl(x)));
        }

        axpy(ys, y, h, {{&tb.a21, &k1}});
        k2 = rhs(x + tb.c2 * h, ys);
        axpy(ys, y, h, {{&tb.a31, &k1}, {&tb.a32, &k2}});
        k3 = rhs(x + tb.c3 * h, ys);
        axpy(ys, y, h, {{&tb.a41, &k1}, {&tb.a42, &k2}, {&tb.a43, &k3}});
        k4 = rhs(x + tb.c4 * h, ys);
        axpy(ys, y, h, {{&tb.a51, &k1}, {&tb.a52, &k2}, {&tb.a53, &k3}, {&tb.a54, &k4}});
        k5 = rhs(x + tb.c5 * h, ys);
        axpy(ys, y, h,
             {{&tb.a61, &k1}, {&tb.a62, &k2}, {&tb.a63, &k3}, {&tb.a64, &k4}, {&tb.a65, &k5}});
        const T xph = (h == x_end - x) ? x_end : x + h;
        k6 = rhs(xph, ys);
        axpy(y1, y, h,
             {{&tb.a71, &k1}, {&tb.a73, &k3}, {&tb.a74, &k4}, {&tb.a75, &k5}, {&tb.a76, &k6}});
        k7 = rhs(xph, y1);
        stats.evaluations += 6;

        double err = 0.0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const T e = h * (tb.e1 * k1[i] + tb.e3 * k3[i] + tb.e4 * k4[i] + tb.e5 * k5[i] +
                             tb.e6 * k6[i] + tb.e7 * k7[i]);
            const double r = dbl(e) / scale(y, y1, i);
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(Dim));
        if (!std::isfinite(err)) err = 1e10;

        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        T h_new = h / fac;

        if (err <= 1.0) {
            step.x0 = x;
            step.x1 = xph;
            step.y0 = y;
            step.y1 = y1;
            for (std::size_t i = 0; i < Dim; ++i) {
                const T ydiff = y1[i] - y[i];
                const T bspl = h * k1[i] - ydiff;
                step.cont[0][i] = y[i];
                step.cont[1][i] = ydiff;
                step.cont[2][i] = bspl;
                step.cont[3][i] = ydiff - h * k7[i] - bspl;
                step.cont[4][i] = h * (tb.d1 * k1[i] + tb.d3 * k3[i] + tb.d4 * k4[i] +
                                       tb.d5 * k5[i] + tb.d6 * k6[i] + tb.d7 * k7[i]);
            }
            if (!landing) {
                const double s = first_crossing(step);
                if (s > kMinCrossingFraction && s < 1.0) {
                    h_resume = h;
                    h = h * T(s);
                    landing = true;
                    ++stats.rejected;
                    continue;
                }
            }
            const bool was_landing = landing;
            landing = false;
            facold = std::max(err, 1e-4);
            ++stats.accepted;
            on_step(static_cast<const AcceptedStep<Dim, T>&>(step));
            k1 = k7;
            y = y1;
            x = xph;
            if (x >= x_end) break;
            if (was_landing) h_new = h_resume;  // the shortened step says nothing about h
            if (h_new > h_max) h_new = h_max;
            if (last_rejected && h_new > h) h_new = h;
            last_rejected = false;
        } else {
            h_new = h / std::min(facc1, fac11 / safe);
            last_rejected = true;
            landing = false;
            ++stats.rejected;
        }
        h = h_new;
    }
    return stats;
}

}  // namespace lmshoot
