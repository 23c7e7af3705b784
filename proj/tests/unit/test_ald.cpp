#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qlab/ald.hpp"
#include "qlab/quadrature.hpp"
#include "qlab/rng.hpp"

using namespace qlab;

TEST_CASE("tau level rejects endpoints") {
    CHECK_THROWS_AS(TauLevel(0.0), std::invalid_argument);
    CHECK_THROWS_AS(TauLevel(1.0), std::invalid_argument);
    CHECK_THROWS_AS(TauLevel(-0.2), std::invalid_argument);
    CHECK(TauLevel(0.3).value() == 0.3);
    CHECK(TauLevel(0.3).min_side() == 0.3);
    CHECK(TauLevel(0.8).min_side() == doctest::Approx(0.2));
}

TEST_CASE("check loss hand values") {
    CHECK(check_loss(0.0, TauLevel(0.5)) == 0.0);
    CHECK(check_loss(2.0, TauLevel(0.25)) == doctest::Approx(0.5));
    CHECK(check_loss(-2.0, TauLevel(0.25)) == doctest::Approx(1.5));
}

TEST_CASE("check loss is nonnegative, vanishes only at zero, and is convex") {
    Rng rng(314159);
    for (int i = 0; i < 100000; ++i) {
        const TauLevel tau(rng.uniform(1e-3, 1.0 - 1e-3));
        const double u = rng.uniform(-60.0, 60.0);
        const double r = check_loss(u, tau);
        CHECK(r >= 0.0);
        if (u != 0.0) CHECK(r > 0.0);
        // midpoint convexity against a second point
        const double v = rng.uniform(-60.0, 60.0);
        const double mid = check_loss(0.5 * (u + v), tau);
        CHECK(mid <= 0.5 * check_loss(u, tau) + 0.5 * check_loss(v, tau) + 1e-12);
    }
    CHECK(check_loss(0.0, TauLevel(0.123)) == 0.0);
}

TEST_CASE("ald log pdf hand values") {
    CHECK(ald_log_pdf(0.0, AldModel(0.0, TauLevel(0.5))) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-12));
    CHECK(ald_log_pdf(1.0, AldModel(0.0, TauLevel(0.5))) ==
          doctest::Approx(std::log(0.25) - 0.5).epsilon(1e-12));
    // rho_0.9(-1) = (-1)(0.9 - 1) = 0.1: the light side of an asymmetric level
    CHECK(ald_log_pdf(-1.0, AldModel(0.0, TauLevel(0.9))) ==
          doctest::Approx(std::log(0.09) - 0.1).epsilon(1e-12));
    CHECK(ald_log_pdf(1.0, AldModel(0.0, TauLevel(0.9))) ==
          doctest::Approx(std::log(0.09) - 0.9).epsilon(1e-12));
}

TEST_CASE("ald density integrates to one across locations and levels") {
    for (double location : {-3.0, 0.0, 1.7}) {
        for (double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
            const AldModel model(location, TauLevel(tau));
            // exponential tails: the integrand falls below 1e-16 of its peak
            // once the check loss passes 37
            const double lo = location - 38.0 / (1.0 - tau);
            const double hi = location + 38.0 / tau;
            const double split[] = {location};
            const auto est = integrate(
                [&](double y) { return std::exp(ald_log_pdf(y, model)); }, lo, hi, split, {});
            CHECK(est.converged);
            CHECK(est.value == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("log ratio hand values and equivalence with the pdf difference") {
    const TauLevel half(0.5);
    CHECK(ald_log_ratio(5.0, 1.0, 1.0, TauLevel(0.3)) == 0.0);
    CHECK(ald_log_ratio(10.0, 1.0, 0.0, half) == doctest::Approx(0.5));
    CHECK(ald_log_ratio(-10.0, 1.0, 0.0, half) == doctest::Approx(-0.5));

    Rng rng(99);
    for (int i = 0; i < 20000; ++i) {
        const TauLevel tau(rng.uniform(1e-3, 1.0 - 1e-3));
        const double y = rng.uniform(-20.0, 20.0);
        const double t = rng.uniform(-10.0, 10.0);
        const double ts = rng.uniform(-10.0, 10.0);
        const double direct = ald_log_pdf(y, AldModel(t, tau)) - ald_log_pdf(y, AldModel(ts, tau));
        CHECK(ald_log_ratio(y, t, ts, tau) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("log ratio magnitude never exceeds the location gap") {
    Rng rng(2024);
    int violations = 0;
    for (int i = 0; i < 100000; ++i) {
        const TauLevel tau(rng.uniform(1e-3, 1.0 - 1e-3));
        const double y = rng.uniform(-100.0, 100.0);
        const double t = rng.uniform(-100.0, 100.0);
        const double ts = rng.uniform(-100.0, 100.0);
        if (std::abs(ald_log_ratio(y, t, ts, tau)) > std::abs(t - ts)) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("log ratio envelope: bound holds, equality attained") {
    const TauLevel half(0.5);
    SUBCASE("degenerate point") {
        const auto e = ald_log_ratio_envelope(0.0, 0.0, 0.0, half);
        CHECK(e.value == 0.0);
        CHECK(e.bound == 0.0);
    }
    SUBCASE("interior point sits exactly on the envelope") {
        // between theta0 and t on the cheap side the inequality is tight
        const auto e = ald_log_ratio_envelope(1.0, 3.0, 0.0, half);
        CHECK(e.bound == doctest::Approx(-0.5));
        CHECK(e.value <= e.bound);
        CHECK(e.value == doctest::Approx(e.bound));
    }
    SUBCASE("hand value") {
        const auto e = ald_log_ratio_envelope(-2.0, -4.0, 0.0, TauLevel(0.25));
        CHECK(e.bound == doctest::Approx(1.0));
        CHECK(e.value <= e.bound);
    }
    SUBCASE("bound over random quadruples") {
        Rng rng(7);
        int violations = 0;
        for (int i = 0; i < 100000; ++i) {
            const TauLevel tau(rng.uniform(1e-3, 1.0 - 1e-3));
            const double y = rng.uniform(-100.0, 100.0);
            const double t = rng.uniform(-100.0, 100.0);
            const double theta0 = rng.uniform(-100.0, 100.0);
            const auto e = ald_log_ratio_envelope(y, t, theta0, tau);
            // equality is attained on a region, so allow rounding at the
            // scale of the envelope's two addends
            const double slack = 1e-15 * (1.0 + std::abs(t - theta0) + std::abs(y - theta0));
            if (e.value > e.bound + slack) ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("ald cdf and quantile are inverse") {
    const AldModel model(1.3, TauLevel(0.7));
    for (double u : {0.001, 0.1, 0.5, 0.7, 0.9, 0.999})
        CHECK(ald_cdf(ald_quantile(u, model), model) == doctest::Approx(u).epsilon(1e-12));
    CHECK(ald_cdf(model.location, model) == doctest::Approx(0.7));
}

TEST_CASE("ald sampling recovers the quantile at the location") {
    SUBCASE("median at tau one half") {
        auto draws = ald_sample(AldModel(0.0, TauLevel(0.5)), 11, 1000000);
        std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
        CHECK(std::abs(draws[draws.size() / 2]) < 0.01);
    }
    SUBCASE("lower quartile at tau one quarter") {
        auto draws = ald_sample(AldModel(2.0, TauLevel(0.25)), 12, 1000000);
        const std::size_t k = draws.size() / 4;
        std::nth_element(draws.begin(), draws.begin() + k, draws.end());
        CHECK(std::abs(draws[k] - 2.0) < 0.01);
    }
    SUBCASE("count zero yields empty") {
        CHECK(ald_sample(AldModel(0.0, TauLevel(0.5)), 13, 0).empty());
    }
}
