#include "qlab/divergence.hpp"

#include <algorithm>
#include <cmath>

namespace qlab {

double kl_to_working(const TrueDensity& dist, double t, TauLevel tau) {
    const AldModel model(t, tau);
    const double kinks[] = {t};
    return expect(
        dist, [&](double y) { return dist.log_pdf(y) - ald_log_pdf(y, model); }, kinks);
}

double kl_gap(const TrueDensity& dist, double t, double t_star, TauLevel tau) {
    if (t == t_star) return 0.0;
    const double kinks[] = {t, t_star};
    return expect(
        dist, [&](double y) { return ald_log_ratio(y, t_star, t, tau); }, kinks);
}

double delta_lower_bound(const TrueDensity& dist, double theta0, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("delta_lower_bound: eps must be positive");
    const double at = dist.cdf(theta0);
    const double up = dist.cdf(theta0 + 0.5 * eps) - at;
    const double down = at - dist.cdf(theta0 - 0.5 * eps);
    return 0.5 * eps * std::min(up, down);
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0,1]");
}

} // namespace

double alpha_affinity(const TrueDensity& dist, double t, double t_prime, double alpha,
                      TauLevel tau) {
    check_alpha(alpha);
    if (t == t_prime) return 1.0;
    const double kinks[] = {t, t_prime};
    return expect(
        dist, [&](double y) { return std::exp(alpha * ald_log_ratio(y, t, t_prime, tau)); },
        kinks);
}

double g_alpha(const TrueDensity& dist, double t, double t_prime, double alpha, TauLevel tau) {
    check_alpha(alpha);
    if (t == t_prime) return 0.0;
    const double kinks[] = {t, t_prime};
    // (1 - E exp(alpha L))/alpha == -E[expm1(alpha L)]/alpha, without the
    // 1 - (1 + O(alpha)) cancellation.
    const double m = expect(
        dist, [&](double y) { return std::expm1(alpha * ald_log_ratio(y, t, t_prime, tau)); },
        kinks);
    return -m / alpha;
}

std::optional<double> find_alpha_exceeding(const TrueDensity& dist, double t, double t_star,
                                           TauLevel tau, double target) {
    for (double alpha : kAlphaGrid)
        if (g_alpha(dist, t, t_star, alpha, tau) > target) return alpha;
    return std::nullopt;
}

TailAffinityReport tail_affinity_audit(const TrueDensity& dist, double theta_star, TauLevel tau,
                                       double boundary, int grid_points_per_side) {
    if (!(boundary > 0.0))
        throw std::invalid_argument("tail_affinity_audit: boundary must be positive");

    TailAffinityReport rep;
    rep.boundary = boundary;
    rep.delta1 = expect(
        dist, [&](double y) { return std::abs(y - theta_star); },
        std::array<double, 1>{theta_star});
    rep.threshold = std::exp(-rep.delta1);

    try {
        rep.exp_moment = expect(
            dist, [&](double y) { return std::exp(std::abs(y - theta_star)); },
            std::array<double, 1>{theta_star});
        rep.analytic_tail_available = true;
        // E[f_t/f_*] <= exp(-r min{tau,1-tau}) * E exp|Y - theta_star| for
        // r = |t - theta_star|; solve for the radius where that drops below
        // the threshold.
        rep.analytic_radius = (rep.delta1 + std::log(rep.exp_moment)) / tau.min_side();
    } catch (const QuadratureError&) {
        rep.analytic_tail_available = false;
        rep.note = "exp-moment infinite; affinity claim restricted to the audited grid";
    }

    const double outer = rep.analytic_tail_available
                             ? std::max(rep.analytic_radius, boundary * 1.01)
                             : boundary * 1.5;
    rep.grid_radius_max = outer;

    rep.max_affinity = -1.0;
    const int m = std::max(grid_points_per_side, 2);
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? -1.0 : 1.0;
        for (int i = 0; i < m; ++i) {
            const double r = boundary + (outer - boundary) * i / (m - 1);
            const double t = theta_star + sign * r;
            const double a = alpha_affinity(dist, t, theta_star, 1.0, tau);
            if (a > rep.max_affinity) {
                rep.max_affinity = a;
                rep.argmax_location = t;
            }
        }
    }
    rep.grid_pass = rep.max_affinity < rep.threshold;
    rep.complete = rep.grid_pass && rep.analytic_tail_available;
    return rep;
}

} // namespace qlab
