#ifndef QLAB_TRUE_MODEL_HPP
#define QLAB_TRUE_MODEL_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qlab/quadrature.hpp"
#include "qlab/rng.hpp"
#include "qlab/tau.hpp"

namespace qlab {

// Data-generating distributions with analytic pdf/cdf/quantile. Everything is
// immutable after construction and cheap to copy; sampling is inverse-CDF
// (mixtures sample by component selection) so draws are a pure function of
// the seed stream.
class TrueDensity {
public:
    struct Gaussian {
        double mean, sd;
    };
    struct StudentT {
        double nu, center, scale;
    };
    struct Mixture2 { // two gaussian components
        double weight1, mean1, sd1, mean2, sd2;
    };
    struct SplitNormal { // distinct scales left/right of the mode
        double mode, sd_left, sd_right;
    };

    static TrueDensity gaussian(double mean, double sd);
    static TrueDensity student_t(double nu, double center = 0.0, double scale = 1.0);
    static TrueDensity mixture(double weight1, double mean1, double sd1, double mean2, double sd2);
    static TrueDensity skewed(double mode, double sd_left, double sd_right);

    double pdf(double y) const;
    double log_pdf(double y) const;
    double cdf(double y) const;
    double quantile(double u) const;
    double sample(Rng& rng) const;

    // New density of shift + scale * Y; stays inside the shipped families.
    TrueDensity affine(double shift, double scale) const;

    const std::string& label() const { return label_; }

private:
    using Core = std::variant<Gaussian, StudentT, Mixture2, SplitNormal>;
    TrueDensity(Core core, std::string label) : core_(std::move(core)), label_(std::move(label)) {}

    Core core_;
    std::string label_;
};

// Conditional data-generating family p_{0x}: a fixed noise distribution,
// recentred per covariate so that the conditional tau-quantile equals
// center(x) exactly, with an optional positive scale profile.
class ConditionalTrueDensity {
public:
    using Fn = std::function<double(std::span<const double>)>;

    ConditionalTrueDensity(TrueDensity noise, Fn center, Fn scale, TauLevel tau);

    TrueDensity at(std::span<const double> x) const;
    // The conditional tau-quantile (by construction).
    double quantile_center(std::span<const double> x) const { return center_(x); }
    double scale_at(std::span<const double> x) const;
    const TrueDensity& noise() const { return noise_; }

private:
    TrueDensity noise_;
    Fn center_;
    Fn scale_;
    double noise_tau_quantile_;
};

// Raised when the cdf is flat at the requested level: the tau-quantile is not
// unique and downstream separation constants degenerate.
class QuantileNotUnique : public std::runtime_error {
public:
    QuantileNotUnique(double lo, double hi, double tau);
    double lower() const { return lo_; }
    double upper() const { return hi_; }

private:
    double lo_, hi_;
};

// Root of cdf(theta) = tau by bisection (the analytic quantile is reserved as
// an independent oracle in the tests). Absolute tolerance 1e-10 on the
// argument. Declares the quantile non-unique when the cdf stays within 1e-12
// of tau on an interval wider than 1e-6.
double tau_quantile(const TrueDensity& dist, TauLevel tau);

struct ExpectOptions {
    QuadratureOptions quad{};
    int max_strips = 64;      // domain doublings per side
    double trunc_ratio = 1e-16;
};

// E[f(Y)] by adaptive quadrature. The domain is grown strip-by-strip from the
// central quantiles until strip contributions are negligible; non-shrinking
// strips mark a divergent expectation and raise QuadratureError. Kink
// locations of f become panel boundaries.
double expect(const TrueDensity& dist, const std::function<double(double)>& f,
              std::span<const double> kinks = {}, const ExpectOptions& opts = {});

} // namespace qlab

#endif
