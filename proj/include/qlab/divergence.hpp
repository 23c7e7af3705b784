#ifndef QLAB_DIVERGENCE_HPP
#define QLAB_DIVERGENCE_HPP

#include <array>
#include <optional>
#include <string>

#include "qlab/ald.hpp"
#include "qlab/true_model.hpp"

namespace qlab {

// Log-spaced ladder for the small-exponent searches; the smallest entry is
// close enough to the limit that g differs from the quantile gap by O(alpha).
inline constexpr std::array<double, 6> kAlphaGrid = {0.5, 0.25, 0.1, 0.05, 0.01, 0.001};

// E[ log p0(Y) - log f_t(Y) ], the divergence from the working model at
// location t. Minimized in t at the tau-quantile of dist.
double kl_to_working(const TrueDensity& dist, double t, TauLevel tau);

// E[ log f_{t_star}(Y) / f_t(Y) ]. Nonnegative when t_star is the
// tau-quantile of dist; zero at t == t_star.
double kl_gap(const TrueDensity& dist, double t, double t_star, TauLevel tau);

// (eps/2) * min{ P(theta0 < Y < theta0+eps/2), P(theta0-eps/2 < Y < theta0) }:
// a lower bound on the gap E log(f_theta0/f_t) valid whenever |t-theta0| > eps.
double delta_lower_bound(const TrueDensity& dist, double theta0, double eps);

// E[ (f_t / f_{t_prime})^alpha ], 0 < alpha <= 1. Finite for any dist since
// the log ratio is bounded by |t - t_prime|.
double alpha_affinity(const TrueDensity& dist, double t, double t_prime, double alpha,
                      TauLevel tau);

// (1 - alpha_affinity)/alpha, evaluated through expm1 so small alpha does not
// cancel. Increases to kl_gap(dist, t, t_prime, tau) as alpha decreases.
double g_alpha(const TrueDensity& dist, double t, double t_prime, double alpha, TauLevel tau);

// Largest alpha on the grid with g_alpha(dist, t, t_star, alpha) > target;
// nullopt when even the smallest alpha fails.
std::optional<double> find_alpha_exceeding(const TrueDensity& dist, double t, double t_star,
                                           TauLevel tau, double target);

struct TailAffinityReport {
    double delta1 = 0.0;            // E|Y - theta_star|
    double threshold = 0.0;         // exp(-delta1)
    double boundary = 0.0;          // inner radius of the audited tail region
    double grid_radius_max = 0.0;   // outer radius covered by the grid
    double max_affinity = 0.0;      // largest E[f_t/f_theta_star] on the grid
    double argmax_location = 0.0;
    bool grid_pass = false;         // every grid affinity < threshold
    bool analytic_tail_available = false;
    double exp_moment = 0.0;        // E exp|Y - theta_star| when finite
    double analytic_radius = 0.0;   // beyond this the envelope bound certifies
    bool complete = false;          // grid + analytic step cover the whole tail
    std::string note;
};

// Audits E[f_t/f_theta_star] < exp(-delta1) over {|t - theta_star| >=
// boundary}: affinities on a radial grid, plus an analytic envelope step for
// the far tail when E exp|Y - theta_star| is finite. With the exp-moment
// infinite the claim is restricted to the grid and says so.
TailAffinityReport tail_affinity_audit(const TrueDensity& dist, double theta_star, TauLevel tau,
                                       double boundary, int grid_points_per_side = 200);

} // namespace qlab

#endif
