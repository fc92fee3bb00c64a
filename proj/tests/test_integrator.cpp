#include "lmshoot/errors.hpp"
#include "lmshoot/extended.hpp"
#include "lmshoot/integrator.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace lmshoot;

namespace {

Problem cubic_problem(int n, double radius) { return Problem(Nonlinearity::cubic_pinned(), ProblemConfig{n, radius}); }

double max_relative_drift(const Problem& p, const Trajectory& t) {
    const std::vector<double> e = first_integral(p, t);
    double drift = 0.0;
    for (double x : e) drift = std::max(drift, std::abs(x - e.front()));
    return drift / std::abs(e.front());
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
    double dist = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dist = std::max({dist, std::abs(a.u[i] - b.u[i]), std::abs(a.v[i] - b.v[i])});
    }
    return dist;
}

}  // namespace

TEST_CASE("original right-hand side") {
    const Problem p = cubic_problem(2, 5.0);
    auto y = rhs_original(p, 1.0, 1.0, 0.0);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    y = rhs_original(p, 1.0, 2.0, 0.0);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == -2.0);
    y = rhs_original(p, 2.0, 0.5, 1.0);
    CHECK(y[0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(y[0] == doctest::Approx(0.4472135).epsilon(1e-7));
    CHECK(y[1] == doctest::Approx(0.125).epsilon(1e-15));
    CHECK_THROWS_AS(rhs_original(p, 0.0, 2.0, 0.0), DomainError);
    CHECK_THROWS_AS(rhs_auxiliary(p, 0.0, 2.0, 0.0), DomainError);
}

TEST_CASE("auxiliary right-hand side") {
    const double R = 1.0;
    const Problem p = cubic_problem(2, R);
    auto y = rhs_auxiliary(p, 1.0, 1.0, 0.0);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    // u = R + 2 is an equilibrium of the auxiliary system.
    y = rhs_auxiliary(p, 1.0, R + 2.0, 0.0);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    // Agreement with the original system while |v / r^{N-1}| <= M R.
    for (double v : {-23.0, -1.0, 0.0, 0.01, 5.0, 24.0}) {
        const auto a = rhs_auxiliary(p, 1.0, 2.0, v);
        const auto o = rhs_original(p, 1.0, 2.0, v);
        CHECK(a[0] == o[0]);
        CHECK(a[1] == o[1]);
    }
    // Beyond M R the auxiliary curvature continues linearly and no longer bounds u'.
    const double mr = p.trunc.phi_at_gamma;
    CHECK(rhs_auxiliary(p, 1.0, 2.0, mr + 1.0)[0] ==
          doctest::Approx(p.trunc.gamma + 1.0 / p.trunc.phi_slope).epsilon(1e-15));
}

TEST_CASE("Taylor start values") {
    const Problem p = cubic_problem(2, 5.0);
    auto y = taylor_start(p, 1.0, 1e-3);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.0);
    y = taylor_start(p, 0.0, 1e-3);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    y = taylor_start(p, 2.0, 1e-3);
    CHECK(y[0] == doctest::Approx(2.0 - 5e-7).epsilon(1e-13));
    CHECK(y[1] == doctest::Approx(-1e-6).epsilon(1e-13));
}

TEST_CASE("Taylor start error decays with the fourth power of the radius") {
    const Problem p = cubic_problem(2, 1.0);
    IntegratorSettings ref;
    ref.rtol = 1e-14;
    ref.atol = 1e-16;
    ref.r_start = 1e-7;
    ref.dense_stride = 0.005;
    const Trajectory t = integrate_shoot(p, 2.0, ref, ShootingSystem::original);
    double prev_u = 0.0, prev_v = 0.0;
    for (int node : {16, 8, 4, 2}) {
        const auto y = taylor_start(p, 2.0, t.r[node]);
        const double eu = std::abs(y[0] - t.u[node]);
        const double ev = std::abs(y[1] - t.v[node]);
        if (prev_u > 0.0) {
            CHECK(prev_u / eu == doctest::Approx(16.0).epsilon(0.05));
            CHECK(prev_v / ev == doctest::Approx(16.0).epsilon(0.05));
        }
        prev_u = eu;
        prev_v = ev;
    }
}

TEST_CASE("constant shots") {
    const Problem p = cubic_problem(2, 3.0);
    const Trajectory one = integrate_shoot(p, 1.0, IntegratorSettings{});
    CHECK(one.constant());
    CHECK(std::all_of(one.u.begin(), one.u.end(), [](double u) { return u == 1.0; }));
    CHECK(std::all_of(one.v.begin(), one.v.end(), [](double v) { return v == 0.0; }));
    const Trajectory zero = integrate_shoot(p, 0.0, IntegratorSettings{});
    CHECK(std::all_of(zero.u.begin(), zero.u.end(), [](double u) { return u == 0.0; }));
    CHECK(half_turns(zero) == 0.0);
    CHECK(zero.stationary());
    // d >= 2 + R is an equilibrium of the auxiliary system.
    const Trajectory frozen = integrate_shoot(p, 6.0, IntegratorSettings{}, ShootingSystem::auxiliary);
    CHECK(frozen.stationary());
    CHECK(frozen.u.back() == 6.0);
    CHECK_THROWS_AS(integrate_shoot(p, -0.1, IntegratorSettings{}), ValidationError);
}

TEST_CASE("settings are validated") {
    const Problem p = cubic_problem(1, 2.0);
    IntegratorSettings s;
    s.rtol = 0.0;
    CHECK_THROWS_AS(integrate_shoot(p, 0.5, s), ValidationError);
    s = IntegratorSettings{};
    s.r_start = 3.0;
    CHECK_THROWS_AS(integrate_shoot(p, 0.5, s), ValidationError);
    s = IntegratorSettings{};
    s.max_steps = 3;
    CHECK_THROWS_AS(integrate_shoot(p, 0.5, s), NumericalError);
}

TEST_CASE("large datum stays above one and keeps v away from zero") {
    const double R = 1.0;
    const Problem p = cubic_problem(2, R);
    const Trajectory t = integrate_shoot(p, 1.0 + R, IntegratorSettings{}, ShootingSystem::original);
    CHECK(*std::min_element(t.u.begin(), t.u.end()) >= 1.0);
    CHECK(t.v.back() != 0.0);
    CHECK(half_turns(t) < 1.0);
}

TEST_CASE("initial angle and trajectory invariants") {
    const Problem p = cubic_problem(2, 10.0);
    for (double d : {0.5, 2.0, 0.01, 1.3}) {
        const Trajectory t = integrate_shoot(p, d, IntegratorSettings{});
        CHECK(t.theta.front() == (d < 1.0 ? std::numbers::pi : 0.0));
        CHECK(t.u.front() == d);
        CHECK(t.v.front() == 0.0);
        for (std::size_t i = 1; i < t.size(); ++i) {
            CHECK(t.theta[i] > t.theta[i - 1]);
            CHECK(std::abs(t.u[i] - t.u[i - 1]) < t.r[i] - t.r[i - 1]);
            const double rho2 = (t.u[i] - 1.0) * (t.u[i] - 1.0) + t.v[i] * t.v[i];
            CHECK(rho2 == doctest::Approx(t.rho[i] * t.rho[i]).epsilon(1e-10));
        }
        CHECK(t.max_abs_slope < 1.0);
        CHECK(count_zeros(t) == count_sign_changes(t));
    }
}

TEST_CASE("polar_unwrap reproduces the recorded angle") {
    const Problem p = cubic_problem(2, 10.0);
    Trajectory t = integrate_shoot(p, 1.5, IntegratorSettings{});
    const std::vector<double> theta = t.theta;
    polar_unwrap(t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.theta[i] == doctest::Approx(theta[i]).epsilon(1e-9));
    Trajectory c = integrate_shoot(p, 1.0, IntegratorSettings{});
    CHECK_THROWS_AS(polar_unwrap(c), DomainError);
}

TEST_CASE("unwrapped angle matches the angle equation") {
    const Problem p = cubic_problem(2, 10.0);
    for (double d : {0.3, 1.5, 2.2}) {
        const Trajectory t = integrate_shoot(p, d, IntegratorSettings{});
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            if (t.rho[i] <= 1e-3) continue;
            const double numeric = (t.theta[i + 1] - t.theta[i - 1]) / (t.r[i + 1] - t.r[i - 1]);
            const double exact = theta_rate(p, ShootingSystem::auxiliary, t.r[i], t.u[i], t.v[i]);
            CHECK(std::abs(numeric - exact) <= 1e-4 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("zero counting from the angle") {
    const Problem p = cubic_problem(2, 23.0);
    // d near 1 and d >= 1 + R make less than one half-turn.
    for (double d : {1.0 - 1e-6, 1.0 + 1e-6, 24.0, 40.0}) {
        const Trajectory t = integrate_shoot(p, d, IntegratorSettings{});
        CHECK(half_turns(t) < 1.0);
        CHECK(count_zeros(t) <= 1);
    }
    const Trajectory t = integrate_shoot(p, 2.0, IntegratorSettings{});
    CHECK(count_zeros(t) == static_cast<int>(std::ceil(half_turns(t) - 0.5)));
}

TEST_CASE("a shot ending just short of a half-turn is not counted across it") {
    // u approaches 1 from above without crossing it, so the angle ends a few ulps
    // below pi / 2; the summed increments alone round past it.
    const double R = 41.4453125;
    const Trajectory t = integrate_shoot(cubic_problem(2, R), 1.0 + R, IntegratorSettings{});
    CHECK(t.u.back() > 1.0);
    CHECK(half_turns(t) < 0.5);
    CHECK(count_zeros(t) == 0);
    CHECK(count_sign_changes(t) == 0);
}

TEST_CASE("primitive of the reaction term") {
    const Nonlinearity f = Nonlinearity::cubic_pinned();
    const Nonlinearity g = Nonlinearity::custom(
        "cubic-copy", [](double s) { return s * (s - 1.0) * (s - 1.0) * (s - 1.0); },
        [](double s) { return (s - 1.0) * (s - 1.0) * (4.0 * s - 1.0); });
    for (double u : {0.0, 0.3, 1.0, 1.7, 3.5}) {
        const double x = u - 1.0;
        const double closed = std::pow(x, 5) / 5.0 + std::pow(x, 4) / 4.0;
        CHECK(primitive_f(f, u) == doctest::Approx(closed).epsilon(1e-14));
        CHECK(primitive_f(g, u) == doctest::Approx(closed).epsilon(1e-10));
    }
    // f_hat vanishes below zero, so F is flat there.
    CHECK(primitive_f(f, -2.0) == doctest::Approx(primitive_f(f, 0.0)).epsilon(1e-15));
}

TEST_CASE("first integral is conserved in one dimension") {
    const Problem p = cubic_problem(1, 20.0);
    for (double d : {1e-9, 0.2, 0.9, 1.2, 2.3, 2.90015, 3.84365, 11.0, 41.0}) {
        const Trajectory t = integrate_shoot(p, d, IntegratorSettings{}, ShootingSystem::original);
        CHECK(max_relative_drift(p, t) < 1e-8);
    }
}

TEST_CASE("steps land on the kink of f_hat at u = 0") {
    // This shot dives below u = 0; a step straddling the kink used to break the
    // first integral at the 1e-6 level.
    const Problem p = cubic_problem(1, 5.0);
    const Trajectory t = integrate_shoot(p, 3.84365, IntegratorSettings{}, ShootingSystem::original);
    CHECK(*std::min_element(t.u.begin(), t.u.end()) < 0.0);
    CHECK(max_relative_drift(p, t) < 1e-8);
}

TEST_CASE("continuous dependence on the datum") {
    const Problem p = cubic_problem(2, 10.0);
    const double d = 1.7;
    const Trajectory base = integrate_shoot(p, d, IntegratorSettings{});
    double prev = 1e300;
    for (double delta = 1e-2; delta >= 1e-6; delta *= 0.5) {
        const double dist = sup_distance(base, integrate_shoot(p, d + delta, IntegratorSettings{}));
        CHECK(dist < prev);
        prev = dist;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("self-convergence of the terminal angle") {
    const Problem p = cubic_problem(2, 10.0);
    IntegratorSettings coarse;
    IntegratorSettings fine;
    fine.rtol = coarse.rtol / 2.0;
    fine.atol = coarse.atol / 2.0;
    for (double d : {0.05, 0.6, 1.4, 2.2}) {
        const double a = integrate_shoot(p, d, coarse).theta.back();
        const double b = integrate_shoot(p, d, fine).theta.back();
        CHECK(std::abs(a - b) < 10.0 * coarse.rtol * std::abs(a));
    }
}

TEST_CASE("auxiliary and original systems agree on oscillatory shots") {
    const Problem p = cubic_problem(2, 10.0);
    const IntegratorSettings s;
    for (double d : {0.05, 0.1, 0.5, 2.0}) {
        const Trajectory aux = integrate_shoot(p, d, s, ShootingSystem::auxiliary);
        const Trajectory orig = integrate_shoot(p, d, s, ShootingSystem::original);
        REQUIRE(count_zeros(aux) >= 1);
        CHECK(sup_distance(aux, orig) <= 10.0 * s.rtol);
        CHECK(aux.max_abs_slope <= p.trunc.gamma + 1e-9);
    }
}

TEST_CASE("trajectory CSV export") {
    const Problem p = cubic_problem(1, 1.0);
    IntegratorSettings s;
    s.dense_stride = 0.25;
    const Trajectory t = integrate_shoot(p, 0.5, s);
    std::ostringstream out;
    write_trajectory_csv(out, t);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,u,v,theta,rho");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    CHECK(out.str().find("0.5,0,3.1415926535897931,0.5") != std::string::npos);
}

TEST_CASE("extended-precision shots agree with double shots") {
    const Problem p = cubic_problem(2, 8.0);
    const IntegratorSettings s;
    for (double d : {0.3, 1.8}) {
        const Trajectory dbl = integrate_shoot(p, d, s, ShootingSystem::auxiliary);
        const ExtendedShot ext = integrate_shoot_extended(p, Extended(d), s, ShootingSystem::auxiliary);
        CHECK(static_cast<double>(ext.u_R) == doctest::Approx(dbl.u.back()).epsilon(1e-8));
        CHECK(static_cast<double>(ext.v_R) == doctest::Approx(dbl.v.back()).epsilon(1e-7));
        CHECK(count_zeros(ext.trajectory) == count_zeros(dbl));
    }
    CHECK(to_decimal(Extended(0.5)).rfind("5.0000", 0) == 0);
    const Problem custom(Nonlinearity::custom(
                             "c", [](double x) { return x * (x - 1.0); }, [](double x) { return 2.0 * x - 1.0; }),
                         ProblemConfig{1, 1.0});
    CHECK_FALSE(supports_extended(custom.f));
    CHECK_THROWS_AS(integrate_shoot_extended(custom, Extended(0.5), s), ValidationError);
}
