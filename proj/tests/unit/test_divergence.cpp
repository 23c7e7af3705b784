#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "qlab/divergence.hpp"
#include "qlab/quadrature.hpp"
#include "qlab/rng.hpp"

using namespace qlab;

namespace {

const TrueDensity kShipped[] = {
    TrueDensity::gaussian(0.0, 1.0),
    TrueDensity::student_t(3.0),
    TrueDensity::mixture(0.6, -1.0, 1.0, 1.5, 0.8),
    TrueDensity::skewed(0.0, 1.0, 2.0),
};

// Independent route for the divergence gap: differentiating the expected
// check loss in the location gives F(t) - tau, so
// E log(f_{t*}/f_t) = integral_{t*}^{t} (F(s) - tau) ds for any anchor t*.
double gap_cdf_oracle(const TrueDensity& dist, double t, double t_star, double tau) {
    const double lo = std::min(t, t_star), hi = std::max(t, t_star);
    const auto est = integrate([&](double s) { return dist.cdf(s) - tau; }, lo, hi,
                               QuadratureOptions{1e-12, 1e-14, 4000});
    REQUIRE(est.converged);
    return t >= t_star ? est.value : -est.value;
}

// mean and 3-standard-error band of f(Y) over Monte Carlo draws
std::pair<double, double> mc_mean_3se(const TrueDensity& dist, std::size_t n, std::uint64_t seed,
                                      const std::function<double(double)>& f) {
    Rng rng(seed);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = f(dist.sample(rng));
        const double d = v - mean;
        mean += d / static_cast<double>(i);
        m2 += d * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, 3.0 * std::sqrt(var / static_cast<double>(n))};
}

} // namespace

TEST_CASE("working-model divergence at the gaussian median") {
    // E log p0 - E log f_0 = -log sqrt(2 pi e) - (log 1/4 - sqrt(2/pi)/2)
    const double expected =
        -0.5 * std::log(2.0 * M_PI) - 0.5 - (std::log(0.25) - 0.5 * std::sqrt(2.0 / M_PI));
    CHECK(kl_to_working(TrueDensity::gaussian(0.0, 1.0), 0.0, TauLevel(0.5)) ==
          doctest::Approx(expected).epsilon(1e-8));
    CHECK(expected == doctest::Approx(0.366298).epsilon(1e-5));
}

TEST_CASE("divergence differences equal the gap") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    const double lhs = kl_to_working(g, 1.0, half) - kl_to_working(g, 0.0, half);
    CHECK(lhs == doctest::Approx(kl_gap(g, 1.0, 0.0, half)).epsilon(1e-8));
}

TEST_CASE("grid argmin of the divergence sits at the tau-quantile") {
    for (const auto& dist : kShipped) {
        for (double tau : {0.25, 0.5, 0.75}) {
            const double q = tau_quantile(dist, TauLevel(tau));
            double best_t = 0.0, best_v = 1e300;
            const double step = 0.01;
            for (double t = q - 0.5; t <= q + 0.5; t += step) {
                const double v = kl_to_working(dist, t, TauLevel(tau));
                if (v < best_v) {
                    best_v = v;
                    best_t = t;
                }
            }
            CHECK(std::abs(best_t - q) <= step + 1e-12);
        }
    }
}

TEST_CASE("gap hand properties and the cdf-integral oracle") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    CHECK(kl_gap(g, 0.7, 0.7, half) == 0.0);
    CHECK(kl_gap(g, 1.0, 0.0, half) ==
          doctest::Approx(kl_gap(g, -1.0, 0.0, half)).epsilon(1e-8));
    CHECK(kl_gap(g, 1.0, 0.0, half) >= delta_lower_bound(g, 0.0, 1.0));

    Rng rng(77);
    for (const auto& dist : kShipped) {
        for (double tau : {0.25, 0.5, 0.75}) {
            const double q = tau_quantile(dist, TauLevel(tau));
            for (int k = 0; k < 4; ++k) {
                const double t = q + rng.uniform(-2.5, 2.5);
                CHECK(kl_gap(dist, t, q, TauLevel(tau)) ==
                      doctest::Approx(gap_cdf_oracle(dist, t, q, tau)).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("half-window lower bound hand values") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    // 0.5 * (Phi(1/2) - Phi(0)) = 0.5 * 0.19146...
    CHECK(delta_lower_bound(g, 0.0, 1.0) == doctest::Approx(0.0957306).epsilon(1e-5));
    CHECK(delta_lower_bound(g, 0.0, 1e-9) == doctest::Approx(0.0).epsilon(1e-9));
    const auto t3 = TrueDensity::student_t(3.0);
    CHECK(delta_lower_bound(t3, 0.0, 0.5) ==
          doctest::Approx(0.25 * (t3.cdf(0.25) - t3.cdf(0.0))).epsilon(1e-12));
}

TEST_CASE("affinity endpoints and bounds") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    CHECK(alpha_affinity(g, 1.3, 1.3, 0.7, half) == 1.0);
    const double a = alpha_affinity(g, 2.0, 0.0, 1.0, half);
    CHECK(a > std::exp(-2.0));
    CHECK(a < 1.0);
}

TEST_CASE("affinity against Monte Carlo at ten million draws") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    const double quad = alpha_affinity(g, 0.5, 0.0, 0.5, half);
    const auto [mean, band] = mc_mean_3se(g, 10000000, 123, [&](double y) {
        return std::exp(0.5 * ald_log_ratio(y, 0.5, 0.0, half));
    });
    CHECK(std::abs(quad - mean) < band);
}

TEST_CASE("gap against Monte Carlo for the mixture") {
    const auto mix = TrueDensity::mixture(0.6, -1.0, 1.0, 1.5, 0.8);
    const TauLevel tau(0.25);
    const double q = tau_quantile(mix, tau);
    const double quad = kl_gap(mix, q + 1.2, q, tau);
    const auto [mean, band] = mc_mean_3se(mix, 10000000, 321, [&](double y) {
        return ald_log_ratio(y, q, q + 1.2, tau);
    });
    CHECK(std::abs(quad - mean) < band);
}

TEST_CASE("g ladder: monotone in shrinking alpha, capped by the gap") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    const double gap = kl_gap(g, 1.0, 0.0, half);
    double prev = -1e300;
    for (double alpha : kAlphaGrid) {
        const double val = g_alpha(g, 1.0, 0.0, alpha, half);
        CHECK(val >= prev - 1e-9);
        CHECK(val <= gap + 1e-9);
        prev = val;
    }
    CHECK(std::abs(prev - gap) < 0.01); // alpha = 1e-3 sits within 0.01 of the limit
    CHECK(g_alpha(g, 0.4, 0.4, 0.25, half) == 0.0);
    // consistency with the affinity route at moderate alpha
    const double via_affinity = (1.0 - alpha_affinity(g, 1.0, 0.0, 0.5, half)) / 0.5;
    CHECK(g_alpha(g, 1.0, 0.0, 0.5, half) == doctest::Approx(via_affinity).epsilon(1e-8));
}

TEST_CASE("alpha search honors its target") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    const double gap = kl_gap(g, 1.5, 0.0, half);
    const auto easy = find_alpha_exceeding(g, 1.5, 0.0, half, 0.5 * gap);
    REQUIRE(easy.has_value());
    CHECK(g_alpha(g, 1.5, 0.0, *easy, half) > 0.5 * gap);
    CHECK(!find_alpha_exceeding(g, 1.5, 0.0, half, gap + 0.1).has_value());
}

TEST_CASE("tail affinity audit: gaussian is certified end to end") {
    const auto g = TrueDensity::gaussian(0.0, 1.0);
    const TauLevel half(0.5);
    const double delta1 = std::sqrt(2.0 / M_PI);
    const double boundary = 3.0 * delta1 / 0.5;
    const auto rep = tail_affinity_audit(g, 0.0, half, boundary, 64);
    CHECK(rep.delta1 == doctest::Approx(delta1).epsilon(1e-9));
    CHECK(rep.boundary == doctest::Approx(4.787).epsilon(1e-3));
    CHECK(rep.analytic_tail_available);
    CHECK(rep.exp_moment == doctest::Approx(2.0 * std::exp(0.5) * 0.8413447460685429)
                                .epsilon(1e-8));
    CHECK(rep.grid_pass);
    CHECK(rep.max_affinity < rep.threshold);
    CHECK(rep.complete);
}

TEST_CASE("tail affinity audit: heavy tails restrict the claim to the grid") {
    const auto t3 = TrueDensity::student_t(3.0);
    const TauLevel half(0.5);
    const double delta1 = 2.0 * std::sqrt(3.0) / M_PI;
    const auto rep = tail_affinity_audit(t3, 0.0, half, 3.0 * delta1 / 0.5, 64);
    CHECK(!rep.analytic_tail_available);
    CHECK(rep.grid_pass);
    CHECK(!rep.complete);
    CHECK(!rep.note.empty());
}
