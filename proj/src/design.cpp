#include "qlab/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/divergence.hpp"
#include "qlab/rng.hpp"

namespace qlab {

CovariateSpace::CovariateSpace(std::vector<std::pair<double, double>> b, Norm n)
    : dimension(static_cast<int>(b.size())), bounds(std::move(b)), norm(n) {
    if (bounds.empty()) throw std::invalid_argument("covariate space needs at least one coordinate");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("covariate bounds must be finite with lo < hi");
}

double CovariateSpace::distance(std::span<const double> a, std::span<const double> b) const {
    double acc = 0.0;
    if (norm == Norm::euclidean) {
        for (int i = 0; i < dimension; ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (int i = 0; i < dimension; ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
    return acc;
}

bool CovariateSpace::contains(std::span<const double> x) const {
    for (int i = 0; i < dimension; ++i)
        if (x[i] < bounds[i].first || x[i] > bounds[i].second) return false;
    return true;
}

double CovariateSpace::diameter() const {
    if (norm == Norm::max) {
        double d = 0.0;
        for (const auto& [lo, hi] : bounds) d = std::max(d, hi - lo);
        return d;
    }
    double acc = 0.0;
    for (const auto& [lo, hi] : bounds) acc += (hi - lo) * (hi - lo);
    return std::sqrt(acc);
}

CovariateDesign CovariateDesign::cyclic_grid(CovariateSpace space, int points_per_dim) {
    if (points_per_dim < 1) throw std::invalid_argument("cyclic grid needs >= 1 point per dim");
    // wrap-around grid: the upper endpoint folds onto the lower one, so the
    // step is (hi-lo)/m and the cycle visits m distinct points per dimension
    const int m = points_per_dim;
    std::vector<Point> grid;
    std::vector<int> idx(space.dimension, 0);
    while (true) {
        Point p(space.dimension);
        for (int d = 0; d < space.dimension; ++d) {
            const auto& [lo, hi] = space.bounds[d];
            p[d] = lo + (hi - lo) * idx[d] / m;
        }
        grid.push_back(std::move(p));
        int d = 0;
        for (; d < space.dimension; ++d) {
            if (++idx[d] < m) break;
            idx[d] = 0;
        }
        if (d == space.dimension) break;
    }
    const std::size_t period = grid.size();
    return CovariateDesign(std::move(space), std::move(grid), period, 0, false);
}

CovariateDesign CovariateDesign::frozen_uniform(CovariateSpace space, std::uint64_t seed) {
    return CovariateDesign(std::move(space), {}, std::nullopt, seed, true);
}

CovariateDesign CovariateDesign::fixed_list(CovariateSpace space, std::vector<Point> points) {
    if (points.empty()) throw std::invalid_argument("fixed list design needs points");
    for (const auto& p : points) {
        if (static_cast<int>(p.size()) != space.dimension)
            throw std::invalid_argument("design point dimension mismatch");
        if (!space.contains(p)) throw std::invalid_argument("design point outside the space");
    }
    const std::size_t period = points.size();
    return CovariateDesign(std::move(space), std::move(points), period, 0, false);
}

Point CovariateDesign::at(std::size_t i) const {
    if (frozen_uniform_) {
        // Pure function of (seed, index): one throwaway stream per index.
        Rng rng(derive_stream(seed_, i, 0x64657369676eULL));
        Point p(space_.dimension);
        for (int d = 0; d < space_.dimension; ++d)
            p[d] = rng.uniform(space_.bounds[d].first, space_.bounds[d].second);
        return p;
    }
    return cycle_[i % cycle_.size()];
}

ThetaFamily::ThetaFamily(Kind kind, CovariateSpace space,
                         std::vector<std::pair<double, double>> parameter_box, double bound_m)
    : kind_(kind), space_(std::move(space)), parameter_box_(std::move(parameter_box)),
      bound_m_(bound_m) {
    const int expected =
        kind_ == Kind::affine ? 1 + space_.dimension : 3;
    if (static_cast<int>(parameter_box_.size()) != expected)
        throw std::invalid_argument("parameter box dimension mismatch for the family");
    if (kind_ == Kind::sine && space_.dimension != 1)
        throw std::invalid_argument("sine family requires a one-dimensional covariate space");
    if (!(bound_m_ > 0.0)) throw std::invalid_argument("range bound must be positive");
    for (const auto& [lo, hi] : parameter_box_)
        if (!(lo <= hi)) throw std::invalid_argument("parameter box must have lo <= hi");

    // Range check on a dense corner+grid sweep: the shipped shapes are
    // monotone in each beta coordinate for fixed x, so corners of the box
    // against an x-grid are enough, but sweep a moderate beta grid anyway.
    const auto xs = covariate_grid(space_, 64);
    const int bscan = 5;
    std::vector<double> beta(parameter_box_.size());
    std::vector<int> idx(parameter_box_.size(), 0);
    while (true) {
        for (std::size_t k = 0; k < beta.size(); ++k) {
            const auto& [lo, hi] = parameter_box_[k];
            beta[k] = lo + (hi - lo) * idx[k] / (bscan - 1);
        }
        for (const auto& x : xs)
            if (std::abs(evaluate(beta, x)) > bound_m_ + 1e-12)
                throw std::invalid_argument("family exceeds its range bound on the box");
        std::size_t k = 0;
        for (; k < idx.size(); ++k) {
            if (++idx[k] < bscan) break;
            idx[k] = 0;
        }
        if (k == idx.size()) break;
    }
}

double ThetaFamily::evaluate(std::span<const double> beta, std::span<const double> x) const {
    if (kind_ == Kind::affine) {
        double v = beta[0];
        for (int d = 0; d < space_.dimension; ++d) v += beta[d + 1] * x[d];
        return v;
    }
    return beta[0] + beta[1] * std::sin(beta[2] * x[0]);
}

bool ThetaFamily::in_box(std::span<const double> beta) const {
    if (beta.size() != parameter_box_.size()) return false;
    for (std::size_t k = 0; k < parameter_box_.size(); ++k)
        if (beta[k] < parameter_box_[k].first || beta[k] > parameter_box_[k].second) return false;
    return true;
}

std::vector<Point> covariate_grid(const CovariateSpace& space, int points_per_dim) {
    const int m = std::max(points_per_dim, 1);
    std::vector<Point> out;
    std::vector<int> idx(space.dimension, 0);
    while (true) {
        Point p(space.dimension);
        for (int d = 0; d < space.dimension; ++d) {
            const auto& [lo, hi] = space.bounds[d];
            p[d] = m == 1 ? lo : lo + (hi - lo) * idx[d] / (m - 1);
        }
        out.push_back(std::move(p));
        int d = 0;
        for (; d < space.dimension; ++d) {
            if (++idx[d] < m) break;
            idx[d] = 0;
        }
        if (d == space.dimension) break;
    }
    return out;
}

double sup_norm_distance(const ThetaFamily& family, std::span<const double> beta1,
                         std::span<const double> beta2, int grid_resolution) {
    double sup = 0.0;
    for (const auto& x : covariate_grid(family.space(), grid_resolution)) {
        const double d = std::abs(family.evaluate(beta1, x) - family.evaluate(beta2, x));
        if (d > sup) sup = d;
    }
    return sup;
}

double kappa(const CovariateDesign& design, std::span<const double> x0, double delta_prime,
             std::size_t n_max) {
    if (!(delta_prime > 0.0)) throw std::invalid_argument("kappa: delta_prime must be positive");
    const auto& space = design.space();
    // Open-ball membership with a relative guard: grid points whose true
    // distance equals delta_prime must not creep inside through roundoff.
    const auto inside = [&](const Point& x) {
        return space.distance(x, x0) < delta_prime * (1.0 - 1e-12);
    };

    if (auto period = design.period()) {
        // Periodic sequence: the limit inferior of the running proportion is
        // exactly the per-cycle proportion.
        if (n_max < *period)
            throw std::invalid_argument("kappa: n_max smaller than the design cycle");
        std::size_t count = 0;
        for (std::size_t i = 0; i < *period; ++i)
            if (inside(design.at(i))) ++count;
        return static_cast<double>(count) / static_cast<double>(*period);
    }

    // Aperiodic: minimum of the running proportion over a tail window, so the
    // early-burn-in dips do not masquerade as the limit.
    const std::size_t n_floor = std::max<std::size_t>(30, n_max / 2);
    std::size_t count = 0;
    double worst = 1.0;
    for (std::size_t i = 0; i < n_max; ++i) {
        if (inside(design.at(i))) ++count;
        const std::size_t n = i + 1;
        if (n >= n_floor)
            worst = std::min(worst, static_cast<double>(count) / static_cast<double>(n));
    }
    return worst;
}

double neighborhood_separation(const ThetaFamily& family, std::span<const double> beta_prime,
                               std::span<const double> beta_star, std::span<const double> x0,
                               double eps, int ball_grid) {
    const auto& space = family.space();
    const double gap0 = std::abs(family.evaluate(beta_prime, x0) - family.evaluate(beta_star, x0));
    if (!(gap0 > eps))
        throw SeparationError("neighborhood_separation: gap at x0 does not exceed eps");

    const double floor = 1e-4 * space.diameter();
    for (double radius = 0.5 * space.diameter(); radius >= floor; radius *= 0.7) {
        bool ok = true;
        for (const auto& x : covariate_grid(space, ball_grid)) {
            // clip the grid to the ball around x0
            if (space.distance(x, x0) >= radius) continue;
            if (std::abs(family.evaluate(beta_prime, x) - family.evaluate(beta_star, x)) <
                0.5 * eps) {
                ok = false;
                break;
            }
        }
        if (ok) return radius;
    }
    throw SeparationError("neighborhood_separation: no radius above the resolution floor");
}

SeparationExponent separation_exponent(const ThetaFamily& family,
                                       const ConditionalTrueDensity& truth,
                                       const CovariateDesign& design,
                                       std::span<const double> beta_prime,
                                       std::span<const double> beta_star, TauLevel tau, double eps,
                                       int grid_resolution) {
    SeparationExponent out;
    const auto xs = covariate_grid(family.space(), grid_resolution);

    double sup = 0.0;
    Point x0;
    for (const auto& x : xs) {
        const double d = std::abs(family.evaluate(beta_prime, x) - family.evaluate(beta_star, x));
        if (d > sup) {
            sup = d;
            x0 = x;
        }
    }
    if (!(sup > eps))
        throw SeparationError("separation_exponent: sup gap does not exceed eps");
    out.x0 = x0;

    out.delta_prime = neighborhood_separation(family, beta_prime, beta_star, x0, eps);

    // Quantile-gap lower bound over the ball: on it the gap is >= eps/2, so
    // the half-window bound applies with eps/2.
    double delta = std::numeric_limits<double>::infinity();
    for (const auto& x : covariate_grid(family.space(), 33)) {
        if (family.space().distance(x, x0) >= out.delta_prime) continue;
        const double theta_star_x = family.evaluate(beta_star, x);
        delta = std::min(delta, delta_lower_bound(truth.at(x), theta_star_x, 0.5 * eps));
    }
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw SeparationError("separation_exponent: quantile-gap bound is zero on the ball");
    out.delta = delta;

    out.kappa = kappa(design, x0, out.delta_prime);
    if (!(out.kappa > 0.0))
        throw SeparationError(
            "separation_exponent: design density kappa is zero at the separating ball");

    // Design points to certify the exponent on: one full cycle (capped).
    std::vector<Point> cycle;
    const std::size_t horizon = design.period() ? std::min<std::size_t>(*design.period(), 4096)
                                                : 256;
    cycle.reserve(horizon);
    for (std::size_t i = 0; i < horizon; ++i) cycle.push_back(design.at(i));

    const double slack = 0.5 * out.kappa * out.delta;
    double alpha_found = 0.0;
    for (double alpha : kAlphaGrid) {
        bool ok = true;
        Point worst_x;
        for (const auto& x : cycle) {
            const double tp = family.evaluate(beta_prime, x);
            const double ts = family.evaluate(beta_star, x);
            const auto dist = truth.at(x);
            const double gap = kl_gap(dist, tp, ts, tau);
            if (g_alpha(dist, tp, ts, alpha, tau) <= gap - slack) {
                ok = false;
                worst_x = x;
                break;
            }
        }
        if (ok) {
            alpha_found = alpha;
            break;
        }
        if (alpha == kAlphaGrid.back()) {
            std::string msg = "separation_exponent: no alpha on the grid works; worst x =";
            for (double c : worst_x) msg += " " + std::to_string(c);
            throw SeparationError(msg);
        }
    }
    out.alpha_prime = alpha_found;
    out.delta1 = 0.25 * out.kappa * out.delta;
    return out;
}

} // namespace qlab
