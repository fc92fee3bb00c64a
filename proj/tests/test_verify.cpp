#include "lmshoot/errors.hpp"
#include "lmshoot/verify.hpp"

#include <doctest.h>

using namespace lmshoot;

namespace {

VerifyConfig small_config() {
    VerifyConfig cfg;
    cfg.problem = ProblemConfig{2, 23.0};
    cfg.samples = 20;
    cfg.invariant_radii = {1.0, 5.0};
    return cfg;
}

}  // namespace

TEST_CASE("unit_interval draws reproducible values in [0, 1)") {
    std::mt19937_64 a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = unit_interval(a);
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(x == unit_interval(b));
    }
    std::mt19937_64 c(20240601);
    CHECK(unit_interval(c) == static_cast<double>(std::mt19937_64(20240601)() >> 11) * 0x1.0p-53);
}

TEST_CASE("slow shots near the equilibrium") {
    const CheckReport r = check_slow_near_one(small_config());
    CHECK(r.pass);
    CHECK(r.measured["regime"] == "f1");
    CHECK(r.measured["delta"].get<double>() >= 1e-8);
    CHECK(r.measured["f_prime_at_1"].get<double>() == 0.0);
}

TEST_CASE("power nonlinearity above the second eigenvalue reports the other regime") {
    VerifyConfig cfg = small_config();
    cfg.f = Nonlinearity::power(4.0);
    cfg.problem = ProblemConfig{2, 10.0};
    const CheckReport r = check_slow_near_one(cfg);
    CHECK(r.measured["regime"] == "f1_prime");
    CHECK(r.measured["f_prime_at_1"].get<double>() > r.measured["lambda_2"].get<double>());
    CHECK(r.measured["trace"].size() > 10);
}

TEST_CASE("large data are slow") {
    const CheckReport r = check_slow_large_d(small_config());
    CHECK(r.pass);
    REQUIRE(r.measured["shots"].size() == 3);
    for (const auto& shot : r.measured["shots"]) {
        CHECK(shot["half_turns"].get<double>() < 1.0);
        CHECK(shot["min_u"].get<double>() >= 1.0);
    }
}

TEST_CASE("theorem check above and below the threshold") {
    const CheckReport above = check_theorem_main(small_config());
    CHECK(above.pass);
    CHECK(above.measured["pattern"] == true);
    CHECK(above.measured["chain_below_one"].size() == 2);

    VerifyConfig small = small_config();
    small.problem.radius = 1.0;
    const CheckReport below = check_theorem_main(small);
    CHECK_FALSE(below.pass);
    CHECK(below.measured["branch_count"] == 0);
}

TEST_CASE("invariant suite is deterministic for a fixed seed") {
    const VerifyConfig cfg = small_config();
    const CheckReport a = check_invariant_suite(cfg);
    const CheckReport b = check_invariant_suite(cfg);
    CHECK(a.pass);
    CHECK(a.to_json().dump() == b.to_json().dump());
    VerifyConfig other = cfg;
    other.seed = 1;
    CHECK(check_invariant_suite(other).to_json().dump() != a.to_json().dump());
}

TEST_CASE("run_checks selects, sorts and validates names") {
    VerifyConfig cfg = small_config();
    const auto reports = run_checks({"slow_near_one", "slow_large_d"}, cfg, 2);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].name == "slow_large_d");
    CHECK(reports[1].name == "slow_near_one");
    CHECK_THROWS_AS(run_checks({"nope"}, cfg), ValidationError);
    CHECK(check_names().size() == 4);
    const auto report_json = reports[0].to_json();
    for (const char* key : {"name", "parameters", "pass", "measured", "tolerances"}) CHECK(report_json.contains(key));
}
