#include <doctest.h>

#include <cmath>

#include "qlab/quadrature.hpp"

using namespace qlab;

TEST_CASE("polynomial and gaussian integrals") {
    const auto sq = integrate([](double x) { return x * x; }, 0.0, 1.0);
    CHECK(sq.converged);
    CHECK(sq.value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    const auto gauss = integrate(
        [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }, -8.5, 8.5);
    CHECK(gauss.converged);
    CHECK(gauss.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("kinks on panel boundaries are integrated exactly") {
    const double split[] = {0.0};
    const auto est = integrate([](double x) { return std::abs(x); }, -1.0, 1.0, split, {});
    CHECK(est.converged);
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(est.segments == 2); // no refinement needed once the kink is a cut
}

TEST_CASE("kinks off panel boundaries still converge, just slower") {
    const auto est = integrate([](double x) { return std::abs(x - 0.3333); }, -1.0, 1.0);
    CHECK(est.converged);
    CHECK(est.value ==
          doctest::Approx(0.5 * (1.3333 * 1.3333 + 0.6667 * 0.6667)).epsilon(1e-9));
}

TEST_CASE("budget exhaustion reports non-convergence") {
    QuadratureOptions opts;
    opts.max_segments = 4;
    opts.rel_tol = 1e-14;
    opts.abs_tol = 1e-16;
    const auto est = integrate([](double x) { return std::sin(500.0 * x) * x; }, 0.0, 20.0, opts);
    CHECK(!est.converged);
}

TEST_CASE("degenerate interval") {
    const auto est = integrate([](double x) { return x; }, 2.0, 2.0);
    CHECK(est.converged);
    CHECK(est.value == 0.0);
}
