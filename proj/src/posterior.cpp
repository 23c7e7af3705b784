#include "qlab/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "qlab/ald.hpp"
#include "qlab/kernels.hpp"
#include "qlab/rng.hpp"

namespace qlab {

namespace {

std::vector<double> normalized_log_weights(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("prior needs at least one atom");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("prior weights must be nonnegative and finite");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("prior weights must not all vanish");
    std::vector<double> lw(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        lw[i] = weights[i] > 0.0 ? std::log(weights[i] / total)
                                 : -std::numeric_limits<double>::infinity();
    return lw;
}

} // namespace

GridPrior GridPrior::uniform(double lo, double hi, int count) {
    if (!(lo < hi) || count < 1) throw std::invalid_argument("uniform prior: bad parameters");
    GridPrior p;
    p.points.resize(count);
    for (int i = 0; i < count; ++i)
        p.points[i] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (count - 1);
    p.log_weights.assign(count, -std::log(static_cast<double>(count)));
    return p;
}

GridPrior GridPrior::truncated_gaussian(double mean, double sd, double lo, double hi, int count) {
    if (!(sd > 0.0) || !(lo < hi) || count < 1)
        throw std::invalid_argument("truncated gaussian prior: bad parameters");
    std::vector<double> pts(count), w(count);
    for (int i = 0; i < count; ++i) {
        pts[i] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (count - 1);
        const double z = (pts[i] - mean) / sd;
        w[i] = std::exp(-0.5 * z * z);
    }
    return atoms(std::move(pts), std::move(w));
}

GridPrior GridPrior::atoms(std::vector<double> points, std::vector<double> weights) {
    if (points.size() != weights.size())
        throw std::invalid_argument("prior atoms: points/weights size mismatch");
    if (!std::is_sorted(points.begin(), points.end()))
        throw std::invalid_argument("prior atoms must be sorted ascending");
    GridPrior p;
    p.log_weights = normalized_log_weights(weights);
    p.points = std::move(points);
    return p;
}

double GridPrior::mass_outside(double center, double eps) const {
    std::vector<double> lw;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (std::abs(points[i] - center) > eps) lw.push_back(log_weights[i]);
    if (lw.empty()) return 0.0;
    return std::exp(kernels::log_sum_exp(lw.data(), lw.size()));
}

BoxGridPrior BoxGridPrior::uniform(const std::vector<std::pair<double, double>>& box,
                                   int points_per_dim) {
    if (box.empty() || points_per_dim < 1)
        throw std::invalid_argument("box prior: bad parameters");
    BoxGridPrior p;
    std::size_t total = 1;
    for (const auto& [lo, hi] : box) {
        if (!(lo <= hi)) throw std::invalid_argument("box prior: lo > hi");
        std::vector<double> axis(points_per_dim);
        for (int i = 0; i < points_per_dim; ++i)
            axis[i] = points_per_dim == 1 ? 0.5 * (lo + hi)
                                          : lo + (hi - lo) * i / (points_per_dim - 1);
        p.axes.push_back(std::move(axis));
        total *= static_cast<std::size_t>(points_per_dim);
    }
    p.log_weights.assign(total, -std::log(static_cast<double>(total)));
    return p;
}

void BoxGridPrior::decode(std::size_t index, std::span<double> beta) const {
    for (std::size_t d = 0; d < axes.size(); ++d) {
        beta[d] = axes[d][index % axes[d].size()];
        index /= axes[d].size();
    }
}

double log_lik_ratio_sum_iid(std::span<const double> y, double t, double t_star, TauLevel tau) {
    double acc = 0.0;
    for (double yi : y) acc += ald_log_ratio(yi, t, t_star, tau);
    return acc;
}

namespace {

PosteriorSummary summarize(const std::vector<double>& log_ratio,
                           const std::vector<double>& log_weights,
                           const std::vector<std::uint8_t>& outside, std::int64_t n, double eps) {
    const std::size_t m = log_ratio.size();
    std::vector<double> all(m);
    std::vector<double> out_terms, in_terms;
    out_terms.reserve(m);
    in_terms.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        all[i] = log_weights[i] + log_ratio[i];
        (outside[i] ? out_terms : in_terms).push_back(all[i]);
    }
    PosteriorSummary s;
    s.n = n;
    s.eps = eps;
    s.log_r2n = kernels::log_sum_exp(all.data(), all.size());
    if (!std::isfinite(s.log_r2n))
        throw std::logic_error("posterior: every atom carries zero weight");
    s.log_r1n_outside = out_terms.empty()
                            ? -std::numeric_limits<double>::infinity()
                            : kernels::log_sum_exp(out_terms.data(), out_terms.size());
    const double log_in = in_terms.empty()
                              ? -std::numeric_limits<double>::infinity()
                              : kernels::log_sum_exp(in_terms.data(), in_terms.size());
    s.mass_outside = std::exp(s.log_r1n_outside - s.log_r2n);
    s.mass_inside = std::exp(log_in - s.log_r2n);
    return s;
}

} // namespace

IidPosteriorAccumulator::IidPosteriorAccumulator(const GridPrior& prior, double t_star,
                                                 double eps, TauLevel tau)
    : prior_(&prior), t_star_(t_star), eps_(eps), tau_(tau) {
    if (!(eps > 0.0)) throw std::invalid_argument("posterior: eps must be positive");
    if (prior.support_lo() > t_star - eps || prior.support_hi() < t_star + eps)
        throw std::invalid_argument("posterior: prior grid does not cover the eps window");
    log_ratio_.assign(prior.size(), 0.0);
    outside_.resize(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i)
        outside_[i] = std::abs(prior.points[i] - t_star) > eps ? 1 : 0;
}

void IidPosteriorAccumulator::reset() {
    std::fill(log_ratio_.begin(), log_ratio_.end(), 0.0);
    n_ = 0;
}

void IidPosteriorAccumulator::extend(std::span<const double> y_new) {
    if (y_new.empty()) return;
    const double tau = tau_.value();
    const double base = kernels::checkloss_sum(y_new.data(), y_new.size(), t_star_, tau);
    for (std::size_t i = 0; i < prior_->size(); ++i) {
        const double s =
            kernels::checkloss_sum(y_new.data(), y_new.size(), prior_->points[i], tau);
        log_ratio_[i] += base - s;
    }
    n_ += static_cast<std::int64_t>(y_new.size());
}

PosteriorSummary IidPosteriorAccumulator::summary() const {
    return summarize(log_ratio_, prior_->log_weights, outside_, n_, eps_);
}

PosteriorSummary posterior_mass_outside_iid(std::span<const double> y, const GridPrior& prior,
                                            double t_star, double eps, TauLevel tau,
                                            double ratio_base) {
    if (!std::isnan(ratio_base)) {
        // Ratios against an arbitrary base point: shifts every atom by the
        // same per-observation constant; the summary must not move.
        std::vector<double> log_ratio(prior.size(), 0.0);
        const double tval = tau.value();
        const double base = kernels::checkloss_sum(y.data(), y.size(), ratio_base, tval);
        std::vector<std::uint8_t> outside(prior.size());
        for (std::size_t i = 0; i < prior.size(); ++i) {
            log_ratio[i] =
                base - kernels::checkloss_sum(y.data(), y.size(), prior.points[i], tval);
            outside[i] = std::abs(prior.points[i] - t_star) > eps ? 1 : 0;
        }
        return summarize(log_ratio, prior.log_weights, outside,
                         static_cast<std::int64_t>(y.size()), eps);
    }
    IidPosteriorAccumulator acc(prior, t_star, eps, tau);
    acc.extend(y);
    return acc.summary();
}

InidContext::InidContext(const ThetaFamily& family_in, BoxGridPrior prior_in,
                         std::vector<double> beta_star_in, double eps_in, TauLevel tau_in,
                         std::vector<Point> unique_x_in, int sup_grid_resolution)
    : family(&family_in), prior(std::move(prior_in)), beta_star(std::move(beta_star_in)),
      eps(eps_in), tau(tau_in), unique_x(std::move(unique_x_in)) {
    if (!(eps > 0.0)) throw std::invalid_argument("posterior: eps must be positive");
    if (!family->in_box(beta_star))
        throw std::invalid_argument("posterior: beta_star outside the parameter box");

    const std::size_t n_atoms = prior.size();
    const std::size_t n_unique = unique_x.size();
    theta_star_at.resize(n_unique);
    for (std::size_t u = 0; u < n_unique; ++u)
        theta_star_at[u] = family->evaluate(beta_star, unique_x[u]);

    theta_table.resize(n_unique * n_atoms);
    outside.resize(n_atoms);
    sup_distance.resize(n_atoms);

    const auto xs = covariate_grid(family->space(), sup_grid_resolution);
    std::vector<double> theta_star_grid(xs.size());
    for (std::size_t g = 0; g < xs.size(); ++g)
        theta_star_grid[g] = family->evaluate(beta_star, xs[g]);

    std::vector<double> beta(prior.dimension());
    for (std::size_t a = 0; a < n_atoms; ++a) {
        prior.decode(a, beta);
        for (std::size_t u = 0; u < n_unique; ++u)
            theta_table[u * n_atoms + a] = family->evaluate(beta, unique_x[u]);
        double sup = 0.0;
        for (std::size_t g = 0; g < xs.size(); ++g) {
            const double d = std::abs(family->evaluate(beta, xs[g]) - theta_star_grid[g]);
            if (d > sup) sup = d;
        }
        sup_distance[a] = sup;
        outside[a] = sup > eps ? 1 : 0;
    }
}

InidPosteriorAccumulator::InidPosteriorAccumulator(const InidContext& ctx) : ctx_(&ctx) {
    bucket_y_.resize(ctx.unique_x.size());
    loss_.assign(ctx.prior.size(), 0.0);
}

void InidPosteriorAccumulator::reset() {
    for (auto& b : bucket_y_) b.clear();
    std::fill(loss_.begin(), loss_.end(), 0.0);
    base_loss_ = 0.0;
    n_ = 0;
}

void InidPosteriorAccumulator::extend(std::span<const std::uint32_t> x_ids,
                                      std::span<const double> y_new) {
    if (x_ids.size() != y_new.size())
        throw std::invalid_argument("posterior: x_ids/y size mismatch");
    const std::size_t n_atoms = ctx_->prior.size();
    const double tau = ctx_->tau.value();

    std::vector<std::size_t> old_size(bucket_y_.size());
    for (std::size_t u = 0; u < bucket_y_.size(); ++u) old_size[u] = bucket_y_[u].size();
    for (std::size_t j = 0; j < x_ids.size(); ++j) {
        if (x_ids[j] >= bucket_y_.size())
            throw std::out_of_range("posterior: x_id outside the registered design");
        bucket_y_[x_ids[j]].push_back(y_new[j]);
    }

    for (std::size_t u = 0; u < bucket_y_.size(); ++u) {
        const std::size_t fresh = bucket_y_[u].size() - old_size[u];
        if (fresh == 0) continue;
        const double* ys = bucket_y_[u].data() + old_size[u];
        base_loss_ += kernels::checkloss_sum(ys, fresh, ctx_->theta_star_at[u], tau);
        kernels::checkloss_accum_block(ctx_->theta_table.data() + u * n_atoms, n_atoms, ys, fresh,
                                       tau, loss_.data());
    }
    n_ += static_cast<std::int64_t>(y_new.size());
}

PosteriorSummary InidPosteriorAccumulator::summary() const {
    std::vector<double> log_ratio(loss_.size());
    for (std::size_t a = 0; a < loss_.size(); ++a) log_ratio[a] = base_loss_ - loss_[a];
    return summarize(log_ratio, ctx_->prior.log_weights, ctx_->outside, n_, ctx_->eps);
}

PosteriorSummary posterior_mass_outside_inid(std::span<const Point> xs,
                                             std::span<const double> ys,
                                             const ThetaFamily& family, const BoxGridPrior& prior,
                                             std::span<const double> beta_star, double eps,
                                             TauLevel tau, int sup_grid_resolution) {
    if (xs.size() != ys.size()) throw std::invalid_argument("posterior: xs/ys size mismatch");
    std::vector<Point> unique_x;
    std::vector<std::uint32_t> ids(xs.size());
    std::map<Point, std::uint32_t> seen;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (!family.space().contains(xs[j]))
            throw std::invalid_argument("posterior: design point outside the covariate space");
        auto [it, inserted] = seen.emplace(xs[j], static_cast<std::uint32_t>(unique_x.size()));
        if (inserted) unique_x.push_back(xs[j]);
        ids[j] = it->second;
    }
    InidContext ctx(family, prior, std::vector<double>(beta_star.begin(), beta_star.end()), eps,
                    tau, std::move(unique_x), sup_grid_resolution);
    InidPosteriorAccumulator acc(ctx);
    acc.extend(ids, ys);
    return acc.summary();
}

std::vector<GrowthDiagRow> denominator_growth_diag(std::span<const double> y,
                                                   const GridPrior& prior, double t_star,
                                                   TauLevel tau, double beta_rate,
                                                   std::span<const std::int64_t> n_grid) {
    if (!(beta_rate > 0.0))
        throw std::invalid_argument("denominator_growth_diag: beta_rate must be positive");
    std::vector<GrowthDiagRow> rows;
    std::vector<double> log_ratio(prior.size(), 0.0);
    std::vector<double> terms(prior.size());
    std::size_t consumed = 0;
    const double tval = tau.value();
    for (std::int64_t n : n_grid) {
        if (n < 0 || static_cast<std::size_t>(n) > y.size())
            throw std::invalid_argument("denominator_growth_diag: n outside the data stream");
        const std::size_t upto = static_cast<std::size_t>(n);
        if (upto > consumed) {
            const double* slice = y.data() + consumed;
            const std::size_t len = upto - consumed;
            const double base = kernels::checkloss_sum(slice, len, t_star, tval);
            for (std::size_t i = 0; i < prior.size(); ++i)
                log_ratio[i] += base - kernels::checkloss_sum(slice, len, prior.points[i], tval);
            consumed = upto;
        }
        for (std::size_t i = 0; i < prior.size(); ++i)
            terms[i] = prior.log_weights[i] + log_ratio[i];
        const double log_r2n = kernels::log_sum_exp(terms.data(), terms.size());
        rows.push_back({n, log_r2n, log_r2n + static_cast<double>(n) * beta_rate});
    }
    return rows;
}

GridPrior restrict_to_affinity_ball(const GridPrior& prior, const TrueDensity& dist, double t1,
                                    TauLevel tau, double delta) {
    const double threshold = std::exp(0.5 * delta);
    std::vector<double> pts, w;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        if (alpha_affinity(dist, prior.points[i], t1, 1.0, tau) < threshold) {
            pts.push_back(prior.points[i]);
            w.push_back(std::exp(prior.log_weights[i]));
        }
    }
    if (pts.empty())
        throw std::runtime_error("restrict_to_affinity_ball: no prior atom falls in the ball");
    return GridPrior::atoms(std::move(pts), std::move(w));
}

double find_decay_alpha(const TrueDensity& dist, double t1, double t_star, TauLevel tau,
                        double delta) {
    const auto alpha = find_alpha_exceeding(dist, t1, t_star, tau, delta);
    if (!alpha)
        throw std::runtime_error(
            "find_decay_alpha: no grid alpha reaches the quantile-gap target; the supplied "
            "delta is not a valid lower bound");
    return 0.5 * *alpha;
}

std::vector<DecayDiagRow> numerator_decay_diag(const TrueDensity& dist, double t1, double t_star,
                                               TauLevel tau, const GridPrior& nu, double alpha,
                                               double delta,
                                               std::span<const std::int64_t> n_grid,
                                               int replications, std::uint64_t seed) {
    if (replications < 1)
        throw std::invalid_argument("numerator_decay_diag: replications must be >= 1");
    std::int64_t n_max = 0;
    for (std::int64_t n : n_grid) n_max = std::max(n_max, n);

    // per replication and stage: ( sum_k nu_k exp(sum_i log ratio_k) )^alpha
    std::vector<std::vector<double>> samples(n_grid.size());
    std::vector<double> terms(nu.size());
    for (int rep = 0; rep < replications; ++rep) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(rep), 0x6e756d64ULL));
        std::vector<double> log_ratio(nu.size(), 0.0);
        std::int64_t n = 0;
        std::size_t stage = 0;
        while (stage < n_grid.size()) {
            while (n < n_grid[stage]) {
                const double y = dist.sample(rng);
                for (std::size_t k = 0; k < nu.size(); ++k)
                    log_ratio[k] += ald_log_ratio(y, nu.points[k], t_star, tau);
                ++n;
            }
            for (std::size_t k = 0; k < nu.size(); ++k)
                terms[k] = nu.log_weights[k] + log_ratio[k];
            const double log_integral = kernels::log_sum_exp(terms.data(), terms.size());
            samples[stage].push_back(std::exp(alpha * log_integral));
            ++stage;
        }
    }

    std::vector<DecayDiagRow> rows;
    for (std::size_t s = 0; s < n_grid.size(); ++s) {
        DecayDiagRow row{};
        row.n = n_grid[s];
        const auto& v = samples[s];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (static_cast<double>(v.size()) - 1.0) : 0.0;
        row.empirical_mean = mean;
        row.std_error = std::sqrt(var / static_cast<double>(v.size()));
        row.bound = std::exp(-static_cast<double>(row.n) * alpha * delta * 0.5);
        row.quadrature_check = std::numeric_limits<double>::quiet_NaN();
        if (row.n == 1) {
            // direct quadrature of E[(int_A f_t/f_* d nu)^alpha]
            std::vector<double> kinks(nu.points.begin(), nu.points.end());
            kinks.push_back(t_star);
            kinks.push_back(t1);
            row.quadrature_check = expect(
                dist,
                [&](double y) {
                    double m = -std::numeric_limits<double>::infinity();
                    std::vector<double> lt(nu.size());
                    for (std::size_t k = 0; k < nu.size(); ++k) {
                        lt[k] = nu.log_weights[k] + ald_log_ratio(y, nu.points[k], t_star, tau);
                        m = std::max(m, lt[k]);
                    }
                    double acc = 0.0;
                    for (double v2 : lt) acc += std::exp(v2 - m);
                    return std::exp(alpha * (m + std::log(acc)));
                },
                kinks);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace qlab
