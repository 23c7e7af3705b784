#ifndef QLAB_ALD_HPP
#define QLAB_ALD_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "qlab/tau.hpp"

namespace qlab {

class Rng;

// Asymmetric Laplace working model with unit scale: density
//   f(y) = tau (1-tau) exp{ -rho_tau(y - location) }.
// The location parameter equals the tau-quantile of the density.
struct AldModel {
    double location;
    TauLevel tau;

    AldModel(double location_, TauLevel tau_) : location(location_), tau(tau_) {
        if (!std::isfinite(location))
            throw std::invalid_argument("AldModel: location must be finite");
    }
};

// Check loss rho_tau(u) = u * (tau - 1{u <= 0}). Nonnegative, zero iff u == 0,
// convex and piecewise linear with the kink at zero. The indicator uses the
// closed inequality u <= 0, so rho(0) = 0 under either branch.
inline double check_loss(double u, TauLevel tau) {
    return u > 0.0 ? u * tau.value() : u * (tau.value() - 1.0);
}

inline double ald_log_pdf(double y, const AldModel& model) {
    const double t = model.tau.value();
    return std::log(t) + std::log1p(-t) - check_loss(y - model.location, model.tau);
}

// log f_t(y) - log f_{t_star}(y), evaluated branch-wise. Outside the closed
// interval [min(t,t_star), max(t,t_star)] the ratio is constant in y and a
// single product is exact enough to keep |result| <= |t - t_star| without any
// tolerance; in between, the two check losses have opposite slopes and the
// difference stays inside the bound as well.
inline double ald_log_ratio(double y, double t, double t_star, TauLevel tau) {
    if (t == t_star) return 0.0;
    const double lo = t < t_star ? t : t_star;
    const double hi = t < t_star ? t_star : t;
    if (y <= lo) return (tau.value() - 1.0) * (t - t_star);
    if (y >= hi) return tau.value() * (t - t_star);
    return check_loss(y - t_star, tau) - check_loss(y - t, tau);
}

// Envelope for the log ratio against a reference point theta0:
//   log f_t/f_theta0 (y)  <=  -|t - theta0| * min{tau,1-tau} + |y - theta0|.
// Equality is attained (e.g. y between theta0 and t on the cheap side), so the
// contract is "<=", not "<".
struct AldEnvelope {
    double value; // the log ratio
    double bound; // the right-hand side
};

inline AldEnvelope ald_log_ratio_envelope(double y, double t, double theta0, TauLevel tau) {
    const double lhs = ald_log_ratio(y, t, theta0, tau);
    const double gap = t >= theta0 ? t - theta0 : theta0 - t;
    const double dev = y >= theta0 ? y - theta0 : theta0 - y;
    return {lhs, -gap * tau.min_side() + dev};
}

// Distribution function and quantile of the ALD; both are closed-form.
double ald_cdf(double y, const AldModel& model);
double ald_quantile(double u, const AldModel& model);

// count i.i.d. draws by inverse CDF; count == 0 yields an empty vector.
std::vector<double> ald_sample(const AldModel& model, std::uint64_t seed, std::size_t count);

} // namespace qlab

#endif
