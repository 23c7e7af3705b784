#include "qlab/true_model.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace qlab {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

double normal_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double normal_quantile(double u) { return boost::math::quantile(kStdNormal, u); }

double normal_log_pdf(double y, double mean, double sd) {
    const double z = (y - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.91893853320467274178; // log sqrt(2 pi)
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

} // namespace

TrueDensity TrueDensity::gaussian(double mean, double sd) {
    require_positive(sd, "gaussian sd");
    return TrueDensity(Gaussian{mean, sd},
                       "gaussian(" + std::to_string(mean) + "," + std::to_string(sd) + ")");
}

TrueDensity TrueDensity::student_t(double nu, double center, double scale) {
    require_positive(nu, "student_t nu");
    require_positive(scale, "student_t scale");
    return TrueDensity(StudentT{nu, center, scale},
                       "student_t(" + std::to_string(nu) + "," + std::to_string(center) + "," +
                           std::to_string(scale) + ")");
}

TrueDensity TrueDensity::mixture(double weight1, double mean1, double sd1, double mean2,
                                 double sd2) {
    if (!(weight1 > 0.0 && weight1 < 1.0))
        throw std::invalid_argument("mixture weight must lie in (0,1)");
    require_positive(sd1, "mixture sd1");
    require_positive(sd2, "mixture sd2");
    return TrueDensity(Mixture2{weight1, mean1, sd1, mean2, sd2}, "mixture");
}

TrueDensity TrueDensity::skewed(double mode, double sd_left, double sd_right) {
    require_positive(sd_left, "skewed sd_left");
    require_positive(sd_right, "skewed sd_right");
    return TrueDensity(SplitNormal{mode, sd_left, sd_right}, "skewed");
}

double TrueDensity::log_pdf(double y) const {
    return std::visit(
        [y](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return normal_log_pdf(y, d.mean, d.sd);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                const double z = (y - d.center) / d.scale;
                return std::lgamma(0.5 * (d.nu + 1.0)) - std::lgamma(0.5 * d.nu) -
                       0.5 * std::log(d.nu * M_PI) - std::log(d.scale) -
                       0.5 * (d.nu + 1.0) * std::log1p(z * z / d.nu);
            } else if constexpr (std::is_same_v<T, Mixture2>) {
                const double a = std::log(d.weight1) + normal_log_pdf(y, d.mean1, d.sd1);
                const double b = std::log1p(-d.weight1) + normal_log_pdf(y, d.mean2, d.sd2);
                const double m = std::max(a, b);
                return m + std::log(std::exp(a - m) + std::exp(b - m));
            } else { // SplitNormal
                const double s = y < d.mode ? d.sd_left : d.sd_right;
                const double z = (y - d.mode) / s;
                // amplitude sqrt(2/pi)/(sl+sr)
                return -0.5 * z * z + 0.5 * std::log(2.0 / M_PI) -
                       std::log(d.sd_left + d.sd_right);
            }
        },
        core_);
}

double TrueDensity::pdf(double y) const { return std::exp(log_pdf(y)); }

double TrueDensity::cdf(double y) const {
    return std::visit(
        [y](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return normal_cdf((y - d.mean) / d.sd);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                boost::math::students_t_distribution<double> t(d.nu);
                return boost::math::cdf(t, (y - d.center) / d.scale);
            } else if constexpr (std::is_same_v<T, Mixture2>) {
                return d.weight1 * normal_cdf((y - d.mean1) / d.sd1) +
                       (1.0 - d.weight1) * normal_cdf((y - d.mean2) / d.sd2);
            } else { // SplitNormal
                const double sl = d.sd_left, sr = d.sd_right;
                if (y < d.mode) return 2.0 * sl / (sl + sr) * normal_cdf((y - d.mode) / sl);
                return (sl + 2.0 * sr * (normal_cdf((y - d.mode) / sr) - 0.5)) / (sl + sr);
            }
        },
        core_);
}

double TrueDensity::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must lie in (0,1)");
    return std::visit(
        [u, this](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return d.mean + d.sd * normal_quantile(u);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                boost::math::students_t_distribution<double> t(d.nu);
                return d.center + d.scale * boost::math::quantile(t, u);
            } else if constexpr (std::is_same_v<T, Mixture2>) {
                // no closed form; deterministic bisection on the cdf
                double lo = std::min(d.mean1 - 10.0 * d.sd1, d.mean2 - 10.0 * d.sd2);
                double hi = std::max(d.mean1 + 10.0 * d.sd1, d.mean2 + 10.0 * d.sd2);
                while (cdf(lo) > u) lo -= (hi - lo);
                while (cdf(hi) < u) hi += (hi - lo);
                for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (cdf(mid) < u ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            } else { // SplitNormal
                const double sl = d.sd_left, sr = d.sd_right;
                const double at_mode = sl / (sl + sr);
                if (u < at_mode) return d.mode + sl * normal_quantile(u * (sl + sr) / (2.0 * sl));
                return d.mode + sr * normal_quantile(0.5 + (u * (sl + sr) - sl) / (2.0 * sr));
            }
        },
        core_);
}

double TrueDensity::sample(Rng& rng) const {
    if (const auto* mix = std::get_if<Mixture2>(&core_)) {
        const double pick = rng.uniform01();
        const double u = rng.uniform01();
        if (pick < mix->weight1) return mix->mean1 + mix->sd1 * normal_quantile(u);
        return mix->mean2 + mix->sd2 * normal_quantile(u);
    }
    return quantile(rng.uniform01());
}

TrueDensity TrueDensity::affine(double shift, double scale) const {
    require_positive(scale, "affine scale");
    return std::visit(
        [&](const auto& d) -> TrueDensity {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return gaussian(shift + scale * d.mean, scale * d.sd);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return student_t(d.nu, shift + scale * d.center, scale * d.scale);
            } else if constexpr (std::is_same_v<T, Mixture2>) {
                return mixture(d.weight1, shift + scale * d.mean1, scale * d.sd1,
                               shift + scale * d.mean2, scale * d.sd2);
            } else {
                return skewed(shift + scale * d.mode, scale * d.sd_left, scale * d.sd_right);
            }
        },
        core_);
}

ConditionalTrueDensity::ConditionalTrueDensity(TrueDensity noise, Fn center, Fn scale,
                                               TauLevel tau)
    : noise_(std::move(noise)), center_(std::move(center)), scale_(std::move(scale)),
      noise_tau_quantile_(tau_quantile(noise_, tau)) {}

double ConditionalTrueDensity::scale_at(std::span<const double> x) const {
    const double s = scale_ ? scale_(x) : 1.0;
    if (!(s > 0.0)) throw std::invalid_argument("conditional scale must be positive");
    return s;
}

TrueDensity ConditionalTrueDensity::at(std::span<const double> x) const {
    const double s = scale_at(x);
    return noise_.affine(center_(x) - s * noise_tau_quantile_, s);
}

QuantileNotUnique::QuantileNotUnique(double lo, double hi, double tau)
    : std::runtime_error("tau-quantile at level " + std::to_string(tau) +
                         " is not unique: cdf is flat on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]"),
      lo_(lo), hi_(hi) {}

namespace {

// Bisect the predicate cdf(x) >= level over [lo, hi]; both endpoints must
// bracket the transition.
double bisect_cdf(const TrueDensity& dist, double level, double lo, double hi) {
    for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo) + std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dist.cdf(mid) >= level)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-11) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double tau_quantile(const TrueDensity& dist, TauLevel tau) {
    const double level = tau.value();
    double lo = -1.0, hi = 1.0;
    double step = 1.0;
    for (int i = 0; i < 200 && dist.cdf(lo) >= level; ++i) {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    for (int i = 0; i < 200 && dist.cdf(hi) < level; ++i) {
        hi += step;
        step *= 2.0;
    }
    if (dist.cdf(lo) >= level || dist.cdf(hi) < level)
        throw std::runtime_error("tau_quantile: failed to bracket the root");

    const double bracket_lo = lo, bracket_hi = hi;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (dist.cdf(mid) < level)
            lo = mid;
        else
            hi = mid;
    }
    const double root = 0.5 * (lo + hi);

    // Flatness scan: the widest interval on which the cdf sits within 1e-12
    // of the level. The scan brackets are pushed past the bisection brackets
    // when those are themselves still flat.
    const double band = 1e-12;
    double scan_lo = bracket_lo, scan_hi = bracket_hi;
    step = 1.0;
    for (int i = 0; i < 200 && dist.cdf(scan_lo) >= level - band; ++i) {
        scan_lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    for (int i = 0; i < 200 && dist.cdf(scan_hi) <= level + band; ++i) {
        scan_hi += step;
        step *= 2.0;
    }

    double flat_lo = bisect_cdf(dist, level - band, scan_lo, root);
    double flat_hi = root;
    {
        double l = root, h = scan_hi;
        for (int i = 0; i < 200 && h - l > 1e-13 * (1.0 + std::abs(l) + std::abs(h)); ++i) {
            const double mid = 0.5 * (l + h);
            if (dist.cdf(mid) <= level + band)
                l = mid;
            else
                h = mid;
            if (h - l < 1e-11) break;
        }
        flat_hi = 0.5 * (l + h);
    }
    if (flat_hi - flat_lo > 1e-6) throw QuantileNotUnique(flat_lo, flat_hi, level);
    return root;
}

double expect(const TrueDensity& dist, const std::function<double(double)>& f,
              std::span<const double> kinks, const ExpectOptions& opts) {
    auto integrand = [&](double y) { return f(y) * dist.pdf(y); };

    const double center = dist.quantile(0.5);
    double lo = dist.quantile(0.01);
    double hi = dist.quantile(0.99);
    for (double k : kinks) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    if (!(lo < center)) lo = center - 1.0;
    if (!(hi > center)) hi = center + 1.0;

    std::vector<double> cuts(kinks.begin(), kinks.end());
    cuts.push_back(center);

    // Grow the domain strip by strip. Strips that keep failing to shrink mark
    // a divergent expectation; the probe magnitude includes the K15-G7 error
    // so a sign change inside one strip cannot fake a dip.
    double rough = std::abs(kronrod15(integrand, lo, hi)) + std::abs(f(center)) * 1e-3;
    auto strip_floor = [&]() { return std::max(opts.quad.abs_tol * 0.125, 1e-16 * rough); };

    auto grow_side = [&](double& edge, double direction, const char* what) {
        double prev = std::numeric_limits<double>::infinity();
        int strips = 0;
        int stalled = 0;
        while (true) {
            const double width = std::abs(edge - center);
            const double next = center + direction * 2.0 * width;
            const auto panel = direction < 0 ? kronrod15_panel(integrand, next, edge)
                                             : kronrod15_panel(integrand, edge, next);
            const double s = std::abs(panel.value) + panel.error;
            stalled = (s > 0.9 * prev && s > strip_floor()) ? stalled + 1 : 0;
            if (strips >= 4 && stalled >= 2)
                throw QuadratureError(std::string("expectation diverges on the ") + what +
                                          " tail",
                                      s, s);
            cuts.push_back(edge);
            edge = next;
            prev = s;
            rough += s;
            ++strips;
            if (s <= strip_floor() && std::abs(integrand(edge)) <= opts.trunc_ratio * rough)
                break;
            if (strips > opts.max_strips)
                throw QuadratureError(std::string(what) + " tail truncation did not stabilize",
                                      s, s);
        }
    };
    grow_side(lo, -1.0, "left");
    grow_side(hi, +1.0, "right");

    const IntegralEstimate est = integrate(integrand, lo, hi, cuts, opts.quad);
    if (!est.converged)
        throw QuadratureError("expectation did not converge within the subdivision budget",
                              est.value, est.error_bound);
    return est.value;
}

} // namespace qlab
