#ifndef QLAB_POSTERIOR_HPP
#define QLAB_POSTERIOR_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qlab/design.hpp"
#include "qlab/divergence.hpp"
#include "qlab/tau.hpp"
#include "qlab/true_model.hpp"

namespace qlab {

// Prior over a scalar location: weighted atoms on a grid. Continuous shapes
// are realized by evaluating the density on an equispaced grid, so total mass
// is 1 by normalization and every open interval intersecting the support
// carries positive mass down to grid resolution.
struct GridPrior {
    std::vector<double> points;      // ascending
    std::vector<double> log_weights; // logsumexp == 0

    static GridPrior uniform(double lo, double hi, int count);
    static GridPrior truncated_gaussian(double mean, double sd, double lo, double hi, int count);
    static GridPrior atoms(std::vector<double> points, std::vector<double> weights);

    std::size_t size() const { return points.size(); }
    double support_lo() const { return points.front(); }
    double support_hi() const { return points.back(); }
    // prior mass of {t : |t - center| > eps}
    double mass_outside(double center, double eps) const;
};

// Prior over a parameter box: product grid with per-atom log weights.
struct BoxGridPrior {
    std::vector<std::vector<double>> axes; // per-dimension ascending points
    std::vector<double> log_weights;       // flattened, logsumexp == 0

    static BoxGridPrior uniform(const std::vector<std::pair<double, double>>& box,
                                int points_per_dim);

    std::size_t size() const { return log_weights.size(); }
    int dimension() const { return static_cast<int>(axes.size()); }
    void decode(std::size_t index, std::span<double> beta) const;
};

struct PosteriorSummary {
    double log_r2n = 0.0;          // log of the full ratio integral
    double log_r1n_outside = 0.0;  // restricted to the outside set
    double mass_outside = 0.0;
    double mass_inside = 0.0;
    std::int64_t n = 0;
    double eps = 0.0;
};

// sum_i log f_t(y_i)/f_{t_star}(y_i), summed per observation through the
// branch-exact log ratio so the n|t - t_star| envelope holds term by term.
double log_lik_ratio_sum_iid(std::span<const double> y, double t, double t_star, TauLevel tau);

// Posterior mass of {t : |t - t_star| > eps} under the grid prior, by
// log-sum-exp over the atoms. ratio_base shifts every likelihood ratio by a
// per-observation constant and must not change the result; NaN means
// "use t_star".
PosteriorSummary posterior_mass_outside_iid(std::span<const double> y, const GridPrior& prior,
                                            double t_star, double eps, TauLevel tau,
                                            double ratio_base =
                                                std::numeric_limits<double>::quiet_NaN());

// Incremental variant used by the experiment loops: observations arrive in
// prefix order and summaries are taken at each stage.
class IidPosteriorAccumulator {
public:
    IidPosteriorAccumulator(const GridPrior& prior, double t_star, double eps, TauLevel tau);
    void reset();
    void extend(std::span<const double> y_new);
    PosteriorSummary summary() const;

private:
    const GridPrior* prior_;
    double t_star_, eps_;
    TauLevel tau_;
    std::vector<double> log_ratio_; // per atom
    std::vector<std::uint8_t> outside_;
    std::int64_t n_ = 0;
};

// Shared immutable state for the function-valued posterior: theta values of
// every prior atom along the design cycle, plus the sup-norm classification
// against beta_star. Build once, share across replications and threads.
struct InidContext {
    const ThetaFamily* family = nullptr;
    BoxGridPrior prior;
    std::vector<double> beta_star;
    double eps = 0.0;
    TauLevel tau;
    std::vector<Point> unique_x;
    std::vector<double> theta_star_at;  // per unique x
    std::vector<double> theta_table;    // [u * n_atoms + a]
    std::vector<std::uint8_t> outside;  // per atom, sup distance > eps
    std::vector<double> sup_distance;   // per atom

    InidContext(const ThetaFamily& family, BoxGridPrior prior, std::vector<double> beta_star,
                double eps, TauLevel tau, std::vector<Point> unique_x, int sup_grid_resolution);
};

class InidPosteriorAccumulator {
public:
    explicit InidPosteriorAccumulator(const InidContext& ctx);
    void reset();
    // x_ids index into ctx.unique_x, one per observation.
    void extend(std::span<const std::uint32_t> x_ids, std::span<const double> y_new);
    PosteriorSummary summary() const;

private:
    const InidContext* ctx_;
    std::vector<std::vector<double>> bucket_y_; // per unique x
    std::vector<double> loss_;                  // per atom: sum of check losses
    double base_loss_ = 0.0;                    // same sum at theta_star
    std::int64_t n_ = 0;
};

// One-shot form over (x, y) pairs; unique covariates are detected from the
// data. Suited to tests and small runs; the experiment loops use the context.
PosteriorSummary posterior_mass_outside_inid(std::span<const Point> xs,
                                             std::span<const double> ys,
                                             const ThetaFamily& family, const BoxGridPrior& prior,
                                             std::span<const double> beta_star, double eps,
                                             TauLevel tau, int sup_grid_resolution = 512);

struct GrowthDiagRow {
    std::int64_t n;
    double log_r2n;
    double value; // log_r2n + n * beta_rate
};

// Trend of exp(n beta) R_2n in log space along a single growing data stream.
std::vector<GrowthDiagRow> denominator_growth_diag(std::span<const double> y,
                                                   const GridPrior& prior, double t_star,
                                                   TauLevel tau, double beta_rate,
                                                   std::span<const std::int64_t> n_grid);

struct DecayDiagRow {
    std::int64_t n;
    double empirical_mean; // of ( integral_A prod ratio d nu )^alpha
    double std_error;
    double bound; // exp(-n alpha delta / 2)
    double quadrature_check; // n == 1 only: direct quadrature of the functional
};

// Restriction of a grid prior to the affinity ball around t1:
// { t : E[f_t / f_{t1}] < exp(delta/2) }, renormalized.
GridPrior restrict_to_affinity_ball(const GridPrior& prior, const TrueDensity& dist, double t1,
                                    TauLevel tau, double delta);

// Exponent for the fractional-moment decay: largest grid alpha' with
// g_{alpha'}(t1, t_star) > delta, halved for the Cauchy-Schwarz step. Throws
// std::runtime_error when no grid alpha exceeds delta.
double find_decay_alpha(const TrueDensity& dist, double t1, double t_star, TauLevel tau,
                        double delta);

std::vector<DecayDiagRow> numerator_decay_diag(const TrueDensity& dist, double t1, double t_star,
                                               TauLevel tau, const GridPrior& nu, double alpha,
                                               double delta,
                                               std::span<const std::int64_t> n_grid,
                                               int replications, std::uint64_t seed);

} // namespace qlab

#endif
