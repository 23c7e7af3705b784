#ifndef QLAB_DESIGN_HPP
#define QLAB_DESIGN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlab/tau.hpp"
#include "qlab/true_model.hpp"

namespace qlab {

using Point = std::vector<double>;

// Compact covariate space: a closed box with a choice of norm.
struct CovariateSpace {
    enum class Norm { euclidean, max };

    int dimension = 1;
    std::vector<std::pair<double, double>> bounds; // per coordinate
    Norm norm = Norm::euclidean;

    CovariateSpace(std::vector<std::pair<double, double>> b, Norm n = Norm::euclidean);

    double distance(std::span<const double> a, std::span<const double> b) const;
    bool contains(std::span<const double> x) const;
    double diameter() const;
};

// Deterministic covariate sequence x_1, x_2, ...: the same index always maps
// to the same point. Cyclic grids and explicit lists are periodic; frozen
// uniform draws are aperiodic but still a pure function of (seed, index).
class CovariateDesign {
public:
    static CovariateDesign cyclic_grid(CovariateSpace space, int points_per_dim);
    static CovariateDesign frozen_uniform(CovariateSpace space, std::uint64_t seed);
    static CovariateDesign fixed_list(CovariateSpace space, std::vector<Point> points);

    Point at(std::size_t i) const;
    std::optional<std::size_t> period() const { return period_; }
    const CovariateSpace& space() const { return space_; }

private:
    CovariateDesign(CovariateSpace space, std::vector<Point> cycle,
                    std::optional<std::size_t> period, std::uint64_t seed, bool frozen)
        : space_(std::move(space)), cycle_(std::move(cycle)), period_(period), seed_(seed),
          frozen_uniform_(frozen) {}

    CovariateSpace space_;
    std::vector<Point> cycle_;
    std::optional<std::size_t> period_;
    std::uint64_t seed_ = 0;
    bool frozen_uniform_ = false;
};

// Finite-dimensional family of continuous functions theta(.; beta) mapping
// the covariate space into [-M, M]. Shipped shapes: affine in x, and
// beta0 + beta1 * sin(beta2 * x) on a one-dimensional space. The range bound
// is verified on a dense (beta, x) grid at construction.
class ThetaFamily {
public:
    enum class Kind { affine, sine };

    ThetaFamily(Kind kind, CovariateSpace space,
                std::vector<std::pair<double, double>> parameter_box, double bound_m);

    double evaluate(std::span<const double> beta, std::span<const double> x) const;

    Kind kind() const { return kind_; }
    int parameter_dimension() const { return static_cast<int>(parameter_box_.size()); }
    const std::vector<std::pair<double, double>>& parameter_box() const { return parameter_box_; }
    double bound() const { return bound_m_; }
    const CovariateSpace& space() const { return space_; }
    bool in_box(std::span<const double> beta) const;

private:
    Kind kind_;
    CovariateSpace space_;
    std::vector<std::pair<double, double>> parameter_box_;
    double bound_m_;
};

// Regular grid over the covariate space used for sup evaluations.
std::vector<Point> covariate_grid(const CovariateSpace& space, int points_per_dim);

// max over the evaluation grid of |theta(x;b1) - theta(x;b2)|; a lower bound
// of the true sup that converges as the grid refines.
double sup_norm_distance(const ThetaFamily& family, std::span<const double> beta1,
                         std::span<const double> beta2, int grid_resolution = 512);

// Design density at (x0, delta_prime). Periodic designs admit the exact
// limit, the per-cycle proportion; aperiodic designs use a tail-window
// minimum of the running proportion as a finite-horizon proxy.
double kappa(const CovariateDesign& design, std::span<const double> x0, double delta_prime,
             std::size_t n_max = 10000);

class SeparationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A radius delta' > 0 such that |theta(x;beta') - theta(x;beta*)| >= eps/2 on
// a grid of the delta'-ball around x0 (clipped to the space). Requires the
// gap at x0 itself to exceed eps. Throws SeparationError when no radius above
// the resolution floor works.
double neighborhood_separation(const ThetaFamily& family, std::span<const double> beta_prime,
                               std::span<const double> beta_star, std::span<const double> x0,
                               double eps, int ball_grid = 33);

struct SeparationExponent {
    double delta1 = 0.0;      // kappa * delta / 4
    double alpha_prime = 0.0; // exponent found on the alpha grid
    double delta = 0.0;       // quantile-gap lower bound over the ball
    double kappa = 0.0;
    double delta_prime = 0.0; // ball radius
    Point x0;                 // where the sup gap is attained
};

// Full separation pipeline for a parameter beta' with sup gap above eps:
// sup-achieving x0, ball radius, quantile-gap bound over the ball, design
// density, and the exponent alpha' making the per-observation fractional
// moments small enough uniformly along one design cycle.
SeparationExponent separation_exponent(const ThetaFamily& family,
                                       const ConditionalTrueDensity& truth,
                                       const CovariateDesign& design,
                                       std::span<const double> beta_prime,
                                       std::span<const double> beta_star, TauLevel tau,
                                       double eps, int grid_resolution = 512);

} // namespace qlab

#endif
